// Parsing and jet evaluation of scalar expressions.
//
// Grammar (EBNF, no implicit multiplication):
//   expr     := term { ("+" | "-") term }
//   term     := unary { ("*" | "/") unary }
//   unary    := ("-" | "+") unary | power
//   power    := atom [ "^" signed-number ]
//   atom     := number | "i" | identifier | identifier "(" expr ")" | "(" expr ")"
//
// Exponents are numeric literals (possibly negative or fractional); general
// expressions in the exponent are rejected at parse time.  Identifiers name
// coordinates, parameters or the built-in functions ln, exp, sin, cos, tan,
// arctan, sqrt.  "i" is the imaginary unit.  Coordinates are independent
// complex variables; there is no conjugation operator.

#pragma once

#include "supiverify/jet.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sv {

class parse_error : public error {
public:
    parse_error(const std::string& what, std::size_t position)
        : error(what + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

enum class ExprKind { Number, Coord, Param, Neg, Add, Sub, Mul, Div, Pow, Call };

enum class Func { Ln, Exp, Sin, Cos, Tan, Arctan, Sqrt };

struct ExprNode {
    ExprKind kind;
    Cplx number{0.0, 0.0};     // Number
    int coord = -1;            // Coord
    std::string param;         // Param
    Func func = Func::Ln;      // Call
    ExprPtr a, b;              // children
    Cplx exponent{0.0, 0.0};   // Pow
    bool exponent_is_int = false;
    long exponent_int = 0;
};

namespace detail {

inline ExprPtr make_node(ExprNode n) {
    return std::make_shared<const ExprNode>(std::move(n));
}

} // namespace detail

class Expression {
public:
    Expression() = default;
    Expression(ExprPtr root, std::vector<std::string> coords)
        : root_(std::move(root)), coords_(std::move(coords)) {}

    bool valid() const { return root_ != nullptr; }
    const ExprPtr& root() const { return root_; }
    const std::vector<std::string>& coords() const { return coords_; }

    Jet eval_jet(const std::vector<Cplx>& point,
                 const std::map<std::string, Cplx>& params, int order) const {
        if (!root_) throw error("evaluating an empty expression");
        if (static_cast<int>(point.size()) != static_cast<int>(coords_.size()))
            throw error("point dimension does not match expression coordinates");
        // constant expressions still evaluate on a one-variable space
        const JetSpace& s = jet_space(std::max<int>(1, static_cast<int>(coords_.size())), order);
        std::vector<Jet> xs;
        xs.reserve(point.size());
        for (std::size_t k = 0; k < point.size(); ++k)
            xs.push_back(Jet::coordinate(s, static_cast<int>(k), point[k]));
        return eval_node(*root_, s, xs, params);
    }

    Cplx eval(const std::vector<Cplx>& point,
              const std::map<std::string, Cplx>& params) const {
        return eval_jet(point, params, 0).value();
    }

    std::string to_string() const {
        if (!root_) return "";
        std::ostringstream os;
        print(os, *root_, 0);
        return os.str();
    }

    // Programmatic constructors, used when building transformed systems.
    static Expression number(Cplx v, std::vector<std::string> coords) {
        ExprNode n;
        n.kind = ExprKind::Number;
        n.number = v;
        return Expression(detail::make_node(std::move(n)), std::move(coords));
    }

    static Expression combine(ExprKind op, const Expression& a, const Expression& b) {
        if (a.coords_ != b.coords_)
            throw error("combining expressions over different coordinates");
        ExprNode n;
        n.kind = op;
        n.a = a.root_;
        n.b = b.root_;
        return Expression(detail::make_node(std::move(n)), a.coords_);
    }

    friend Expression operator+(const Expression& a, const Expression& b) {
        return combine(ExprKind::Add, a, b);
    }
    friend Expression operator-(const Expression& a, const Expression& b) {
        return combine(ExprKind::Sub, a, b);
    }
    friend Expression operator*(const Expression& a, const Expression& b) {
        return combine(ExprKind::Mul, a, b);
    }
    friend Expression operator/(const Expression& a, const Expression& b) {
        return combine(ExprKind::Div, a, b);
    }

    static Expression apply(Func f, const Expression& a) {
        ExprNode n;
        n.kind = ExprKind::Call;
        n.func = f;
        n.a = a.root_;
        return Expression(detail::make_node(std::move(n)), a.coords_);
    }

    static Expression pow(const Expression& a, Cplx e) {
        ExprNode n;
        n.kind = ExprKind::Pow;
        n.a = a.root_;
        n.exponent = e;
        double r = e.real();
        if (e.imag() == 0.0 && std::abs(r - std::round(r)) < 1e-12) {
            n.exponent_is_int = true;
            n.exponent_int = static_cast<long>(std::llround(r));
        }
        return Expression(detail::make_node(std::move(n)), a.coords_);
    }

    static Expression negate(const Expression& a) {
        ExprNode n;
        n.kind = ExprKind::Neg;
        n.a = a.root_;
        return Expression(detail::make_node(std::move(n)), a.coords_);
    }

private:
    static Jet eval_node(const ExprNode& n, const JetSpace& s,
                         const std::vector<Jet>& xs,
                         const std::map<std::string, Cplx>& params) {
        switch (n.kind) {
        case ExprKind::Number: return Jet(s, n.number);
        case ExprKind::Coord: return xs[static_cast<std::size_t>(n.coord)];
        case ExprKind::Param: {
            auto it = params.find(n.param);
            if (it == params.end())
                throw error("no value supplied for parameter '" + n.param + "'");
            return Jet(s, it->second);
        }
        case ExprKind::Neg: return -eval_node(*n.a, s, xs, params);
        case ExprKind::Add:
            return eval_node(*n.a, s, xs, params) + eval_node(*n.b, s, xs, params);
        case ExprKind::Sub:
            return eval_node(*n.a, s, xs, params) - eval_node(*n.b, s, xs, params);
        case ExprKind::Mul:
            return eval_node(*n.a, s, xs, params) * eval_node(*n.b, s, xs, params);
        case ExprKind::Div:
            return eval_node(*n.a, s, xs, params) / eval_node(*n.b, s, xs, params);
        case ExprKind::Pow: {
            Jet base = eval_node(*n.a, s, xs, params);
            if (n.exponent_is_int) return ipow(base, static_cast<int>(n.exponent_int));
            return sv::pow(base, n.exponent);
        }
        case ExprKind::Call: {
            Jet arg = eval_node(*n.a, s, xs, params);
            switch (n.func) {
            case Func::Ln: return sv::log(arg);
            case Func::Exp: return sv::exp(arg);
            case Func::Sin: return sv::sin(arg);
            case Func::Cos: return sv::cos(arg);
            case Func::Tan: return sv::tan(arg);
            case Func::Arctan: return sv::atan(arg);
            case Func::Sqrt: return sv::sqrt(arg);
            }
            throw error("unhandled function");
        }
        }
        throw error("unhandled expression node");
    }

    static const char* func_name(Func f) {
        switch (f) {
        case Func::Ln: return "ln";
        case Func::Exp: return "exp";
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Tan: return "tan";
        case Func::Arctan: return "arctan";
        case Func::Sqrt: return "sqrt";
        }
        return "?";
    }

    static void print_number(std::ostream& os, Cplx v) {
        if (v.imag() == 0.0) {
            os << v.real();
        } else if (v.real() == 0.0) {
            os << "(" << v.imag() << "*i)";
        } else {
            os << "(" << v.real() << "+" << v.imag() << "*i)";
        }
    }

    // prec: 0 additive context, 1 multiplicative, 2 unary/power operand
    void print(std::ostream& os, const ExprNode& n, int prec) const {
        switch (n.kind) {
        case ExprKind::Number: print_number(os, n.number); return;
        case ExprKind::Coord: os << coords_[static_cast<std::size_t>(n.coord)]; return;
        case ExprKind::Param: os << n.param; return;
        case ExprKind::Neg:
            if (prec > 0) os << "(";
            os << "-";
            print(os, *n.a, 2);
            if (prec > 0) os << ")";
            return;
        case ExprKind::Add:
        case ExprKind::Sub:
            if (prec > 0) os << "(";
            print(os, *n.a, 0);
            os << (n.kind == ExprKind::Add ? " + " : " - ");
            print(os, *n.b, 1);
            if (prec > 0) os << ")";
            return;
        case ExprKind::Mul:
        case ExprKind::Div:
            if (prec > 1) os << "(";
            print(os, *n.a, 1);
            os << (n.kind == ExprKind::Mul ? "*" : "/");
            print(os, *n.b, 2);
            if (prec > 1) os << ")";
            return;
        case ExprKind::Pow:
            print(os, *n.a, 2);
            os << "^";
            if (n.exponent_is_int && n.exponent_int >= 0) {
                os << n.exponent_int;
            } else if (n.exponent_is_int) {
                os << "(" << n.exponent_int << ")";
            } else {
                os << "(" << n.exponent.real() << ")";
            }
            return;
        case ExprKind::Call:
            os << func_name(n.func) << "(";
            print(os, *n.a, 0);
            os << ")";
            return;
        }
    }

    ExprPtr root_;
    std::vector<std::string> coords_;
};

namespace detail {

class Parser {
public:
    Parser(const std::string& src, const std::vector<std::string>& coords,
           const std::vector<std::string>& params)
        : src_(src), coords_(coords), params_(params) {}

    ExprPtr parse() {
        ExprPtr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size())
            throw parse_error("unexpected trailing input", pos_);
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool peek_char(char c) {
        skip_ws();
        return pos_ < src_.size() && src_[pos_] == c;
    }

    bool accept(char c) {
        if (peek_char(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            throw parse_error(std::string("expected '") + c + "'", pos_);
    }

    ExprPtr parse_expr() {
        ExprPtr lhs = parse_term();
        for (;;) {
            if (accept('+')) {
                lhs = binary(ExprKind::Add, lhs, parse_term());
            } else if (accept('-')) {
                lhs = binary(ExprKind::Sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = binary(ExprKind::Mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = binary(ExprKind::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_unary() {
        if (accept('-')) {
            ExprNode n;
            n.kind = ExprKind::Neg;
            n.a = parse_unary();
            return make_node(std::move(n));
        }
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        skip_ws();
        if (!accept('^')) return base;
        ExprNode n;
        n.kind = ExprKind::Pow;
        n.a = base;
        n.exponent = parse_exponent_literal();
        double r = n.exponent.real();
        if (n.exponent.imag() == 0.0 && std::abs(r - std::round(r)) < 1e-12) {
            n.exponent_is_int = true;
            n.exponent_int = static_cast<long>(std::llround(r));
        }
        return make_node(std::move(n));
    }

    Cplx parse_exponent_literal() {
        skip_ws();
        bool paren = accept('(');
        double sign = 1.0;
        if (accept('-')) sign = -1.0;
        skip_ws();
        std::size_t at = pos_;
        std::optional<double> v = parse_number_raw();
        if (!v)
            throw parse_error("exponent must be a numeric literal", at);
        if (paren) expect(')');
        return Cplx(sign * *v, 0.0);
    }

    std::optional<double> parse_number_raw() {
        std::size_t start = pos_;
        std::size_t p = pos_;
        while (p < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[p])) || src_[p] == '.'))
            ++p;
        if (p == start) return std::nullopt;
        // optional exponent suffix
        if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
            std::size_t q = p + 1;
            if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
            std::size_t digits = q;
            while (digits < src_.size() && std::isdigit(static_cast<unsigned char>(src_[digits])))
                ++digits;
            if (digits > q) p = digits;
        }
        double value = 0.0;
        auto res = std::from_chars(src_.data() + start, src_.data() + p, value);
        if (res.ec != std::errc() || res.ptr != src_.data() + p)
            throw parse_error("malformed numeric literal", start);
        pos_ = p;
        return value;
    }

    ExprPtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size())
            throw parse_error("unexpected end of input", pos_);
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::optional<double> v = parse_number_raw();
            ExprNode n;
            n.kind = ExprKind::Number;
            n.number = Cplx(*v, 0.0);
            return make_node(std::move(n));
        }
        if (accept('(')) {
            ExprPtr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t at = pos_;
            std::string name = parse_identifier();
            if (peek_char('(')) {
                std::optional<Func> f = lookup_func(name);
                if (!f)
                    throw parse_error("unknown function '" + name + "'", at);
                expect('(');
                ExprPtr arg = parse_expr();
                expect(')');
                ExprNode n;
                n.kind = ExprKind::Call;
                n.func = *f;
                n.a = arg;
                return make_node(std::move(n));
            }
            if (name == "i") {
                ExprNode n;
                n.kind = ExprKind::Number;
                n.number = Cplx(0.0, 1.0);
                return make_node(std::move(n));
            }
            for (std::size_t k = 0; k < coords_.size(); ++k) {
                if (coords_[k] == name) {
                    ExprNode n;
                    n.kind = ExprKind::Coord;
                    n.coord = static_cast<int>(k);
                    return make_node(std::move(n));
                }
            }
            for (const std::string& p : params_) {
                if (p == name) {
                    ExprNode n;
                    n.kind = ExprKind::Param;
                    n.param = name;
                    return make_node(std::move(n));
                }
            }
            throw parse_error("unknown identifier '" + name + "'", at);
        }
        throw parse_error(std::string("unexpected character '") + c + "'", pos_);
    }

    std::string parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        return src_.substr(start, pos_ - start);
    }

    static std::optional<Func> lookup_func(const std::string& name) {
        if (name == "ln") return Func::Ln;
        if (name == "exp") return Func::Exp;
        if (name == "sin") return Func::Sin;
        if (name == "cos") return Func::Cos;
        if (name == "tan") return Func::Tan;
        if (name == "arctan") return Func::Arctan;
        if (name == "sqrt") return Func::Sqrt;
        return std::nullopt;
    }

    static ExprPtr binary(ExprKind k, ExprPtr a, ExprPtr b) {
        ExprNode n;
        n.kind = k;
        n.a = std::move(a);
        n.b = std::move(b);
        return make_node(std::move(n));
    }

    const std::string& src_;
    const std::vector<std::string>& coords_;
    const std::vector<std::string>& params_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Expression parse_expression(const std::string& source,
                                   const std::vector<std::string>& coords,
                                   const std::vector<std::string>& params) {
    for (const std::string& c : coords)
        if (c == "i")
            throw error("'i' is reserved for the imaginary unit");
    detail::Parser p(source, coords, params);
    return Expression(p.parse(), coords);
}

} // namespace sv
