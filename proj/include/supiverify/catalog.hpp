#pragma once
// Built-in catalog of three-dimensional second-order conformally
// superintegrable systems, plus the on-disk spec format used to feed
// user-defined systems to the same checks.

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "supiverify/expression.hpp"
#include "supiverify/geometry.hpp"

namespace sv {

struct PartnerRef {
    std::string name;   // catalog name of the equivalent system
    std::string omega;  // conformal factor mapping this system onto it
};

// A system is stored as expression strings; everything numeric is derived
// from these at evaluation points.
struct SystemSpec {
    std::string name;
    int dim = 3;
    std::vector<std::string> coords;
    std::vector<std::vector<std::string>> metric;          // dim x dim
    std::vector<std::string> potentials;                   // dim + 2 basis members
    std::vector<std::pair<std::string, double>> params;    // ordered, aligned with potentials
    std::vector<std::vector<std::vector<std::string>>> killing; // each dim x dim, may be empty
    std::string b_expr;           // scalar seed of the structure tensors, may be empty
    std::string tbar_expr;        // trace scalar up to a constant, may be empty
    std::string curvature_class;  // "flat", "sphere" or "other"
    std::vector<std::array<double, 2>> box;                // sampling intervals per coordinate
    std::vector<PartnerRef> partners;

    std::vector<std::string> param_names() const {
        std::vector<std::string> out;
        out.reserve(params.size());
        for (const auto& p : params) out.push_back(p.first);
        return out;
    }

    std::map<std::string, Cplx> default_params() const {
        std::map<std::string, Cplx> out;
        for (const auto& p : params) out[p.first] = Cplx(p.second, 0.0);
        return out;
    }
};

inline Expression parse_in_system(const SystemSpec& sys, const std::string& src) {
    return parse_expression(src, sys.coords, sys.param_names());
}

namespace detail {

inline Expression parse_field(const SystemSpec& sys, const std::string& src,
                              const std::string& where) {
    try {
        return parse_in_system(sys, src);
    } catch (const std::exception& e) {
        throw error(where + ": " + e.what());
    }
}

} // namespace detail

inline std::vector<std::vector<Expression>> metric_expressions(const SystemSpec& sys) {
    std::vector<std::vector<Expression>> out(sys.metric.size());
    for (std::size_t i = 0; i < sys.metric.size(); ++i) {
        for (std::size_t j = 0; j < sys.metric[i].size(); ++j) {
            std::string where = "metric[" + std::to_string(i) + "][" + std::to_string(j) + "]";
            out[i].push_back(detail::parse_field(sys, sys.metric[i][j], where));
        }
    }
    return out;
}

inline Geometry system_geometry(const SystemSpec& sys, const std::vector<Cplx>& point) {
    return make_geometry(metric_expressions(sys), point, sys.default_params());
}

inline std::vector<Jet> potential_jets(const SystemSpec& sys, const std::vector<Cplx>& point,
                                       int order = 4) {
    std::vector<Jet> out;
    auto params = sys.default_params();
    for (std::size_t m = 0; m < sys.potentials.size(); ++m) {
        Expression e = detail::parse_field(sys, sys.potentials[m],
                                           "potentials[" + std::to_string(m) + "]");
        out.push_back(e.eval_jet(point, params, order));
    }
    return out;
}

// the family member with all parameters at their default values
inline Jet combined_potential_jet(const SystemSpec& sys, const std::vector<Cplx>& point,
                                  int order = 4) {
    std::vector<Jet> basis = potential_jets(sys, point, order);
    Jet acc = basis.at(0) * Cplx(sys.params.at(0).second);
    for (std::size_t m = 1; m < basis.size(); ++m)
        acc += basis[m] * Cplx(sys.params.at(m).second);
    return acc;
}

inline TensorJet killing_jets(const SystemSpec& sys, std::size_t which,
                              const std::vector<Cplx>& point, int order = 2) {
    if (which >= sys.killing.size()) throw error("killing tensor index out of range");
    const auto& comp = sys.killing[which];
    const JetSpace& s = jet_space(sys.dim, order);
    TensorJet out = make_jet_tensor(sys.dim, {Var::Down, Var::Down}, s);
    auto params = sys.default_params();
    for (int i = 0; i < sys.dim; ++i) {
        for (int j = 0; j < sys.dim; ++j) {
            std::string where = "killing[" + std::to_string(which) + "][" +
                                std::to_string(i) + "][" + std::to_string(j) + "]";
            Expression e = detail::parse_field(sys, comp.at(static_cast<std::size_t>(i))
                                                       .at(static_cast<std::size_t>(j)), where);
            out.at({i, j}) = e.eval_jet(point, params, order);
        }
    }
    return out;
}

// Deterministic sample points, uniform over the box.
inline std::vector<std::vector<Cplx>> sample_points(const SystemSpec& sys, int count,
                                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<Cplx>> pts;
    pts.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        std::vector<Cplx> p;
        for (const auto& iv : sys.box) {
            std::uniform_real_distribution<double> dist(iv[0], iv[1]);
            p.emplace_back(dist(rng), 0.0);
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

inline std::vector<Cplx> box_midpoint(const SystemSpec& sys) {
    std::vector<Cplx> p;
    for (const auto& iv : sys.box) p.emplace_back(0.5 * (iv[0] + iv[1]), 0.0);
    return p;
}

// Structural validation: shapes, expression syntax, metric sanity at the box
// midpoint.  Throws sv::error naming the offending field.
inline void validate_system(const SystemSpec& sys) {
    if (sys.name.empty()) throw error("name: must not be empty");
    if (sys.dim < 3 || sys.dim > kMaxDim)
        throw error("dim: must be 3 or 4, got " + std::to_string(sys.dim));
    std::size_t n = static_cast<std::size_t>(sys.dim);
    if (sys.coords.size() != n)
        throw error("coords: expected " + std::to_string(n) + " names, got " +
                    std::to_string(sys.coords.size()));
    if (sys.metric.size() != n) throw error("metric: expected " + std::to_string(n) + " rows");
    for (std::size_t i = 0; i < n; ++i)
        if (sys.metric[i].size() != n)
            throw error("metric[" + std::to_string(i) + "]: expected " + std::to_string(n) +
                        " entries");
    if (sys.potentials.size() != n + 2)
        throw error("potentials: a family needs dim + 2 = " + std::to_string(n + 2) +
                    " basis members, got " + std::to_string(sys.potentials.size()));
    if (sys.params.size() != sys.potentials.size())
        throw error("params: expected one named parameter per potential basis member");
    if (sys.box.size() != n)
        throw error("box: expected " + std::to_string(n) + " intervals, got " +
                    std::to_string(sys.box.size()));
    for (std::size_t k = 0; k < n; ++k)
        if (!(sys.box[k][0] < sys.box[k][1]))
            throw error("box[" + std::to_string(k) + "]: lower bound must be below upper bound");
    if (sys.curvature_class != "flat" && sys.curvature_class != "sphere" &&
        sys.curvature_class != "other")
        throw error("class: must be one of flat, sphere, other");
    for (const auto& km : sys.killing) {
        if (km.size() != n) throw error("killing: each tensor needs " + std::to_string(n) + " rows");
        for (const auto& row : km)
            if (row.size() != n)
                throw error("killing: each tensor row needs " + std::to_string(n) + " entries");
    }

    // expression syntax everywhere, numeric sanity at the midpoint
    std::vector<Cplx> mid = box_midpoint(sys);
    Geometry geo = system_geometry(sys, mid);
    auto params = sys.default_params();
    for (std::size_t m = 0; m < sys.potentials.size(); ++m)
        detail::parse_field(sys, sys.potentials[m], "potentials[" + std::to_string(m) + "]")
            .eval(mid, params);
    for (std::size_t k = 0; k < sys.killing.size(); ++k) {
        TensorJet kt = killing_jets(sys, k, mid, 0);
        TensorValue kv = tensor_value(kt);
        std::vector<int> swap = {1, 0};
        if (max_abs(kv - permuted(kv, swap)) > 1e-10 * (1.0 + max_abs(kv)))
            throw error("killing[" + std::to_string(k) + "]: matrix is not symmetric at the box midpoint");
    }
    if (!sys.b_expr.empty()) detail::parse_field(sys, sys.b_expr, "B").eval(mid, params);
    if (!sys.tbar_expr.empty()) detail::parse_field(sys, sys.tbar_expr, "tbar").eval(mid, params);
    (void)geo;
}

// ---------------------------------------------------------------------------
// JSON spec files

inline nlohmann::ordered_json spec_to_json(const SystemSpec& sys) {
    nlohmann::ordered_json j;
    j["name"] = sys.name;
    j["dim"] = sys.dim;
    j["coords"] = sys.coords;
    j["metric"] = sys.metric;
    j["potentials"] = sys.potentials;
    nlohmann::ordered_json params = nlohmann::ordered_json::array();
    for (const auto& p : sys.params) {
        nlohmann::ordered_json e;
        e["name"] = p.first;
        e["value"] = p.second;
        params.push_back(e);
    }
    j["params"] = params;
    j["killing"] = sys.killing;
    j["B"] = sys.b_expr;
    j["tbar"] = sys.tbar_expr;
    j["class"] = sys.curvature_class;
    nlohmann::ordered_json box = nlohmann::ordered_json::array();
    for (const auto& iv : sys.box) box.push_back({iv[0], iv[1]});
    j["box"] = box;
    nlohmann::ordered_json partners = nlohmann::ordered_json::array();
    for (const auto& p : sys.partners) {
        nlohmann::ordered_json e;
        e["name"] = p.name;
        e["omega"] = p.omega;
        partners.push_back(e);
    }
    j["partners"] = partners;
    return j;
}

inline std::string serialize_spec(const SystemSpec& sys) { return spec_to_json(sys).dump(2) + "\n"; }

inline SystemSpec spec_from_json(const nlohmann::ordered_json& j) {
    SystemSpec sys;
    auto need = [&](const char* key) -> const nlohmann::ordered_json& {
        if (!j.contains(key)) throw error(std::string(key) + ": required key is missing");
        return j.at(key);
    };
    try {
        sys.name = need("name").get<std::string>();
        sys.dim = need("dim").get<int>();
        sys.coords = need("coords").get<std::vector<std::string>>();
        sys.metric = need("metric").get<std::vector<std::vector<std::string>>>();
        sys.potentials = need("potentials").get<std::vector<std::string>>();
        for (const auto& e : need("params")) {
            if (e.is_array() && e.size() == 2)
                sys.params.emplace_back(e.at(0).get<std::string>(), e.at(1).get<double>());
            else
                sys.params.emplace_back(e.at("name").get<std::string>(),
                                        e.at("value").get<double>());
        }
        if (j.contains("killing"))
            sys.killing = j.at("killing").get<std::vector<std::vector<std::vector<std::string>>>>();
        if (j.contains("B") && !j.at("B").is_null()) sys.b_expr = j.at("B").get<std::string>();
        if (j.contains("tbar") && !j.at("tbar").is_null())
            sys.tbar_expr = j.at("tbar").get<std::string>();
        sys.curvature_class = need("class").get<std::string>();
        for (const auto& iv : need("box")) {
            if (!iv.is_array() || iv.size() != 2)
                throw error("box: each interval needs exactly two numbers");
            sys.box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
        }
        if (j.contains("partners")) {
            for (const auto& e : j.at("partners")) {
                PartnerRef p;
                p.name = e.at("name").get<std::string>();
                p.omega = e.at("omega").get<std::string>();
                sys.partners.push_back(p);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw error(std::string("spec file does not match the schema: ") + e.what());
    }
    validate_system(sys);
    return sys;
}

inline SystemSpec parse_spec(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw error(std::string("spec file is not valid JSON: ") + e.what());
    }
    return spec_from_json(j);
}

inline SystemSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open spec file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

// ---------------------------------------------------------------------------
// Built-in systems

namespace detail {

inline std::vector<std::pair<std::string, double>> flat_params() {
    return {{"a1", 1.4142135623730951}, {"a2", 1.7320508075688772},
            {"a3", 2.23606797749979}, {"omega", 3.3166247903554}, {"cst", 3.605551275463989}};
}

inline std::vector<std::vector<std::string>> euclid3() {
    return {{"1", "0", "0"}, {"0", "1", "0"}, {"0", "0", "1"}};
}

inline std::vector<std::vector<std::string>> zero3() {
    return {{"0", "0", "0"}, {"0", "0", "0"}, {"0", "0", "0"}};
}

inline SystemSpec make_system_I() {
    SystemSpec s;
    s.name = "I";
    s.coords = {"x", "y", "z"};
    s.metric = euclid3();
    s.potentials = {"x^(-2)", "y^(-2)", "z^(-2)", "x^2+y^2+z^2", "1"};
    s.params = flat_params();
    auto d = [&](int k) {
        auto m = zero3();
        m[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] = "1";
        return m;
    };
    s.killing.push_back(d(0));
    s.killing.push_back(d(1));
    s.killing.push_back(d(2));
    s.killing.push_back({{"y^2", "-x*y", "0"}, {"-x*y", "x^2", "0"}, {"0", "0", "0"}});
    s.killing.push_back({{"z^2", "0", "-x*z"}, {"0", "0", "0"}, {"-x*z", "0", "x^2"}});
    s.killing.push_back({{"0", "0", "0"}, {"0", "z^2", "-y*z"}, {"0", "-y*z", "y^2"}});
    s.b_expr = "-1.5*(x^2*ln(x)+y^2*ln(y)+z^2*ln(z))";
    s.tbar_expr = "-0.6*(ln(x)+ln(y)+ln(z))";
    s.curvature_class = "flat";
    s.box = {{0.6, 1.6}, {0.55, 1.5}, {0.65, 1.7}};
    return s;
}

inline SystemSpec make_system_II() {
    SystemSpec s;
    s.name = "II";
    s.coords = {"x", "y", "z"};
    s.metric = euclid3();
    s.potentials = {"(x-i*y)/(x+i*y)^3", "(x+i*y)^(-2)", "z^(-2)", "x^2+y^2+z^2", "1"};
    s.params = flat_params();
    s.b_expr = "-1.5*((x^2+y^2)*(0.5*ln(x^2+y^2)-i*arctan(x/y))+z^2*ln(z))";
    s.tbar_expr = "-0.6*(ln(z)+ln(x^2+y^2)-2*i*arctan(x/y))";
    s.curvature_class = "flat";
    s.box = {{0.5, 1.3}, {0.6, 1.5}, {0.6, 1.6}};
    return s;
}

inline SystemSpec make_system_III() {
    SystemSpec s;
    s.name = "III";
    s.coords = {"x", "z", "w"};
    s.metric = {{"z^(-2)", "0", "0"}, {"0", "0", "0.5*z^(-2)"}, {"0", "0.5*z^(-2)", "0"}};
    s.potentials = {"x*z^2", "z^2", "w/z", "z^2*(4*x^2+z*w)", "1"};
    s.params = flat_params();
    s.b_expr = "-1.5*ln(z)*w/z";
    s.tbar_expr = "1.8*ln(z)";
    s.curvature_class = "flat";
    s.box = {{0.4, 1.2}, {0.6, 1.6}, {0.5, 1.4}};
    s.partners.push_back({"V", "z"});
    return s;
}

inline SystemSpec make_system_IV() {
    SystemSpec s;
    s.name = "IV";
    s.coords = {"x", "y", "z"};
    s.metric = euclid3();
    s.potentials = {"x", "y^(-2)", "z^(-2)", "4*x^2+y^2+z^2", "1"};
    s.params = flat_params();
    s.b_expr = "-1.5*(y^2*ln(y)+z^2*ln(z))";
    s.tbar_expr = "-0.6*(ln(y)+ln(z))";
    s.curvature_class = "flat";
    s.box = {{0.4, 1.2}, {0.6, 1.6}, {0.55, 1.5}};
    return s;
}

inline SystemSpec make_system_V() {
    SystemSpec s;
    s.name = "V";
    s.coords = {"x", "z", "w"};
    s.metric = {{"1", "0", "0"}, {"0", "0", "0.5"}, {"0", "0.5", "0"}};
    s.potentials = {"x", "z^(-2)", "w/z^3", "4*x^2+z*w", "1"};
    s.params = flat_params();
    s.b_expr = "-1.5*ln(z)*z*w";
    s.tbar_expr = "-1.2*ln(z)";
    s.curvature_class = "flat";
    s.box = {{0.4, 1.2}, {0.6, 1.6}, {0.5, 1.4}};
    s.partners.push_back({"III", "1/z"});
    return s;
}

inline SystemSpec make_system_VI() {
    SystemSpec s;
    s.name = "VI";
    s.coords = {"x", "y", "z"};
    s.metric = euclid3();
    s.potentials = {"2*x+2*i*y-3*(x-i*y)^2", "x-i*y", "z^(-2)",
                    "z^2-2*(x-i*y)^3+4*x^2+4*y^2", "1"};
    s.params = flat_params();
    s.b_expr = "-1.5*(z^2*ln(z)+(x-i*y)^3/6)";
    s.tbar_expr = "-0.6*ln(z)";
    s.curvature_class = "flat";
    s.box = {{0.4, 1.2}, {0.45, 1.1}, {0.6, 1.6}};
    return s;
}

inline SystemSpec make_system_VII() {
    SystemSpec s;
    s.name = "VII";
    s.coords = {"x", "y", "z"};
    s.metric = euclid3();
    s.potentials = {"0.75*(x+i*y)^2+0.25*z",
                    "(x+i*y)^3+(x-i*y)/16+0.75*(x+i*y)*z",
                    "(5*(x+i*y)^4+x^2+y^2+z^2+6*(x+i*y)^2*z)/16",
                    "x+i*y", "1"};
    s.params = flat_params();
    s.b_expr = "0.5*((x+i*y)^2+6*z)*(x+i*y)^2";
    s.tbar_expr = "0";
    s.curvature_class = "flat";
    s.box = {{0.4, 1.2}, {0.45, 1.15}, {0.5, 1.3}};
    return s;
}

inline SystemSpec make_system_O() {
    SystemSpec s;
    s.name = "O";
    s.coords = {"x", "y", "z"};
    s.metric = euclid3();
    s.potentials = {"x", "y", "z", "x^2+y^2+z^2", "1"};
    s.params = {{"alpha1", 4.123105625617661}, {"alpha2", 4.358898943540674},
                {"alpha3", 4.795831523312719}, {"omega", 3.3166247903554},
                {"cst", 3.605551275463989}};
    auto e = [&](int a, int b) {
        auto m = zero3();
        m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = "1";
        m[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = "1";
        return m;
    };
    s.killing = {e(0, 0), e(1, 1), e(2, 2), e(0, 1), e(0, 2), e(1, 2)};
    s.b_expr = "0";
    s.tbar_expr = "0";
    s.curvature_class = "flat";
    s.box = {{0.4, 1.2}, {0.45, 1.15}, {0.5, 1.3}};
    return s;
}

inline SystemSpec make_system_OO() {
    SystemSpec s;
    s.name = "OO";
    s.coords = {"x", "y", "z"};
    s.metric = euclid3();
    s.potentials = {"x", "y", "z^(-2)", "x^2+y^2+z^2/4", "1"};
    s.params = flat_params();
    s.b_expr = "-1.5*z^2*ln(z)";
    s.tbar_expr = "-0.6*ln(z)";
    s.curvature_class = "flat";
    s.box = {{0.4, 1.2}, {0.45, 1.15}, {0.6, 1.6}};
    return s;
}

inline SystemSpec make_system_A() {
    SystemSpec s;
    s.name = "A";
    s.coords = {"x", "y", "z"};
    s.metric = euclid3();
    s.potentials = {"(x-i*y)^2+2*(x+i*y)", "x-i*y", "z",
                    "(x-i*y)^3+6*(x^2+y^2+z^2)", "1"};
    s.params = flat_params();
    s.b_expr = "(x-i*y)^3/12";
    s.tbar_expr = "0";
    s.curvature_class = "flat";
    s.box = {{0.4, 1.2}, {0.45, 1.15}, {0.5, 1.3}};
    return s;
}

inline SystemSpec make_system_sphere() {
    SystemSpec s;
    s.name = "sphere-generic-3";
    s.coords = {"p", "q", "r"};
    s.metric = {{"1", "0", "0"}, {"0", "sin(p)^2", "0"}, {"0", "0", "sin(p)^2*sin(q)^2"}};
    const std::string s1 = "sin(p)*sin(q)*sin(r)";
    const std::string s2 = "sin(p)*sin(q)*cos(r)";
    const std::string s3 = "sin(p)*cos(q)";
    const std::string s4 = "cos(p)";
    s.potentials = {"(" + s1 + ")^(-2)", "(" + s2 + ")^(-2)", "(" + s3 + ")^(-2)",
                    "(" + s4 + ")^(-2)", "1"};
    s.params = {{"a1", 1.4142135623730951}, {"a2", 1.7320508075688772},
                {"a3", 2.23606797749979}, {"a4", 2.6457513110645907},
                {"cst", 3.605551275463989}};
    auto sq = [](const std::string& e) { return "(" + e + ")^2"; };
    s.b_expr = "-1.5*(" + sq(s1) + "*ln(" + s1 + ")+" + sq(s2) + "*ln(" + s2 + ")+" +
               sq(s3) + "*ln(" + s3 + ")+" + sq(s4) + "*ln(" + s4 + "))";
    s.tbar_expr = "-0.6*(ln(" + s1 + ")+ln(" + s2 + ")+ln(" + s3 + ")+ln(" + s4 + "))";
    s.curvature_class = "sphere";
    s.box = {{0.4, 1.2}, {0.45, 1.15}, {0.35, 1.1}};

    // rotational quadratic first integrals of the ambient round metric
    auto m = zero3();
    m[2][2] = "sin(p)^4*sin(q)^4";
    s.killing.push_back(m);
    s.killing.push_back({{"0", "0", "0"},
                         {"0", "sin(p)^4*sin(r)^2", "sin(p)^4*sin(q)*sin(r)*cos(q)*cos(r)"},
                         {"0", "sin(p)^4*sin(q)*sin(r)*cos(q)*cos(r)",
                          "sin(p)^4*sin(q)^2*cos(q)^2*cos(r)^2"}});
    s.killing.push_back({{"sin(q)^2*sin(r)^2",
                          "sin(p)*sin(q)*sin(r)^2*cos(p)*cos(q)",
                          "sin(p)*sin(q)^2*sin(r)*cos(p)*cos(r)"},
                         {"sin(p)*sin(q)*sin(r)^2*cos(p)*cos(q)",
                          "sin(p)^2*sin(r)^2*cos(p)^2*cos(q)^2",
                          "sin(p)^2*sin(q)*sin(r)*cos(p)^2*cos(q)*cos(r)"},
                         {"sin(p)*sin(q)^2*sin(r)*cos(p)*cos(r)",
                          "sin(p)^2*sin(q)*sin(r)*cos(p)^2*cos(q)*cos(r)",
                          "sin(p)^2*sin(q)^2*cos(p)^2*cos(r)^2"}});
    s.killing.push_back({{"0", "0", "0"},
                         {"0", "sin(p)^4*cos(r)^2", "-sin(p)^4*sin(q)*sin(r)*cos(q)*cos(r)"},
                         {"0", "-sin(p)^4*sin(q)*sin(r)*cos(q)*cos(r)",
                          "sin(p)^4*sin(q)^2*sin(r)^2*cos(q)^2"}});
    s.killing.push_back({{"sin(q)^2*cos(r)^2",
                          "sin(p)*sin(q)*cos(p)*cos(q)*cos(r)^2",
                          "-sin(p)*sin(q)^2*sin(r)*cos(p)*cos(r)"},
                         {"sin(p)*sin(q)*cos(p)*cos(q)*cos(r)^2",
                          "sin(p)^2*cos(p)^2*cos(q)^2*cos(r)^2",
                          "-sin(p)^2*sin(q)*sin(r)*cos(p)^2*cos(q)*cos(r)"},
                         {"-sin(p)*sin(q)^2*sin(r)*cos(p)*cos(r)",
                          "-sin(p)^2*sin(q)*sin(r)*cos(p)^2*cos(q)*cos(r)",
                          "sin(p)^2*sin(q)^2*sin(r)^2*cos(p)^2"}});
    s.killing.push_back({{"cos(q)^2", "-sin(p)*sin(q)*cos(p)*cos(q)", "0"},
                         {"-sin(p)*sin(q)*cos(p)*cos(q)", "sin(p)^2*sin(q)^2*cos(p)^2", "0"},
                         {"0", "0", "0"}});
    return s;
}

inline int edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (std::tolower(a[i - 1]) == std::tolower(b[j - 1]) ? 0 : 1)});
    return d[a.size()][b.size()];
}

} // namespace detail

inline const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names = {"I", "II", "III", "IV", "V", "VI",
                                                   "VII", "O", "OO", "A", "sphere-generic-3"};
    return names;
}

inline SystemSpec get_system(const std::string& name) {
    using detail::make_system_I;
    static const std::map<std::string, SystemSpec (*)()> table = {
        {"i", detail::make_system_I},       {"ii", detail::make_system_II},
        {"iii", detail::make_system_III},   {"iv", detail::make_system_IV},
        {"v", detail::make_system_V},       {"vi", detail::make_system_VI},
        {"vii", detail::make_system_VII},   {"o", detail::make_system_O},
        {"oo", detail::make_system_OO},     {"a", detail::make_system_A},
        {"sphere-generic-3", detail::make_system_sphere}};
    std::string key;
    for (char c : name) key.push_back(static_cast<char>(std::tolower(c)));
    auto it = table.find(key);
    if (it == table.end()) {
        std::vector<std::pair<int, std::string>> ranked;
        for (const auto& n : catalog_names())
            ranked.emplace_back(detail::edit_distance(name, n), n);
        std::sort(ranked.begin(), ranked.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::string msg = "unknown system '" + name + "', closest matches:";
        for (std::size_t k = 0; k < ranked.size() && k < 3; ++k)
            msg += " " + ranked[k].second;
        throw error(msg);
    }
    return it->second();
}

} // namespace sv
