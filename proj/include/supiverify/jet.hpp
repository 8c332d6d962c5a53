// Truncated multivariate Taylor polynomials ("jets") over complex scalars.
//
// A Jet holds the coefficients c_alpha = d^alpha f / alpha! of a function at a
// point, for all multi-indices alpha with |alpha| <= order.  Coordinates are
// treated as independent complex variables; there is no conjugation anywhere,
// so all arithmetic is holomorphic.  Dimension is capped at 4 and order at 4,
// which keeps every coefficient table small enough to precompute densely.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace sv {

using Cplx = std::complex<double>;

class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical floors for singular-evaluation detection.  Surfaced to the CLI.
struct JetConfig {
    double division_floor = 1e-12;
    double ln_floor = 1e-10;
};

inline JetConfig& jet_config() {
    static JetConfig cfg;
    return cfg;
}

constexpr int kMaxDim = 4;
constexpr int kMaxOrder = 4;

using MultiIndex = std::array<std::uint8_t, kMaxDim>;

inline int mi_total(const MultiIndex& a) {
    return a[0] + a[1] + a[2] + a[3];
}

inline int mi_factorial(const MultiIndex& a) {
    static const int fact[5] = {1, 1, 2, 6, 24};
    return fact[a[0]] * fact[a[1]] * fact[a[2]] * fact[a[3]];
}

// Coefficient layout and multiplication table for jets of a given dimension
// and order.  Coefficients are stored in graded lexicographic order: first by
// total degree, then lexicographically with the first variable most
// significant.
class JetSpace {
public:
    JetSpace(int dim, int order) : dim_(dim), order_(order) {
        if (dim < 1 || dim > kMaxDim)
            throw error("jet dimension must be in [1," + std::to_string(kMaxDim) + "]");
        if (order < 0 || order > kMaxOrder)
            throw error("jet order must be in [0," + std::to_string(kMaxOrder) + "]");
        std::fill(lookup_.begin(), lookup_.end(), -1);
        for (int deg = 0; deg <= order; ++deg)
            emit_degree(deg);
        build_product_table();
    }

    int dim() const { return dim_; }
    int order() const { return order_; }
    int size() const { return static_cast<int>(exps_.size()); }

    const MultiIndex& exponents(int i) const { return exps_[i]; }

    int index_of(const MultiIndex& a) const {
        int t = mi_total(a);
        if (t > order_) return -1;
        return lookup_[pack(a)];
    }

    // product_index(i, j) is the slot of exps_[i] + exps_[j], or -1 when the
    // sum exceeds the truncation order.
    int product_index(int i, int j) const { return prod_[i * size() + j]; }

private:
    static int pack(const MultiIndex& a) {
        return a[0] + 5 * (a[1] + 5 * (a[2] + 5 * a[3]));
    }

    void emit_degree(int deg) {
        MultiIndex a{0, 0, 0, 0};
        emit_rec(a, 0, deg);
    }

    void emit_rec(MultiIndex& a, int pos, int remaining) {
        if (pos == dim_ - 1) {
            a[pos] = static_cast<std::uint8_t>(remaining);
            lookup_[pack(a)] = static_cast<int>(exps_.size());
            exps_.push_back(a);
            a[pos] = 0;
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            a[pos] = static_cast<std::uint8_t>(k);
            emit_rec(a, pos + 1, remaining - k);
        }
        a[pos] = 0;
    }

    void build_product_table() {
        const int m = size();
        prod_.assign(static_cast<std::size_t>(m) * m, -1);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                if (mi_total(exps_[i]) + mi_total(exps_[j]) > order_) continue;
                MultiIndex s;
                for (int k = 0; k < kMaxDim; ++k)
                    s[k] = static_cast<std::uint8_t>(exps_[i][k] + exps_[j][k]);
                prod_[i * m + j] = index_of(s);
            }
        }
    }

    int dim_;
    int order_;
    std::vector<MultiIndex> exps_;
    std::array<int, 625> lookup_{};
    std::vector<int> prod_;
};

inline const JetSpace& jet_space(int dim, int order) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, JetSpace> spaces;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(dim, order);
    auto it = spaces.find(key);
    if (it == spaces.end())
        it = spaces.emplace(key, JetSpace(dim, order)).first;
    return it->second;
}

class Jet {
public:
    Jet() : space_(&jet_space(1, 0)), c_(1, Cplx(0.0)) {}

    explicit Jet(const JetSpace& s) : space_(&s), c_(s.size(), Cplx(0.0)) {}

    Jet(const JetSpace& s, Cplx value) : Jet(s) { c_[0] = value; }

    static Jet constant(const JetSpace& s, Cplx value) { return Jet(s, value); }

    static Jet coordinate(const JetSpace& s, int var, Cplx value) {
        if (var < 0 || var >= s.dim())
            throw error("coordinate index out of range");
        Jet j(s, value);
        if (s.order() >= 1) {
            MultiIndex e{0, 0, 0, 0};
            e[var] = 1;
            j.c_[s.index_of(e)] = Cplx(1.0);
        }
        return j;
    }

    const JetSpace& space() const { return *space_; }
    int dim() const { return space_->dim(); }
    int order() const { return space_->order(); }
    int size() const { return space_->size(); }

    Cplx value() const { return c_[0]; }

    Cplx& coeff(int i) { return c_[i]; }
    const Cplx& coeff(int i) const { return c_[i]; }

    Cplx coeff(const MultiIndex& a) const {
        int i = space_->index_of(a);
        return i < 0 ? Cplx(0.0) : c_[i];
    }

    // d^alpha f at the base point (coefficient times alpha!).
    Cplx partial(const MultiIndex& a) const {
        int i = space_->index_of(a);
        if (i < 0)
            throw error("requested partial exceeds jet order");
        return c_[i] * static_cast<double>(mi_factorial(a));
    }

    double max_abs() const {
        double m = 0.0;
        for (const Cplx& v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    Jet truncated(int new_order) const {
        if (new_order > order())
            throw error("cannot extend jet order by truncation");
        const JetSpace& s = jet_space(dim(), new_order);
        Jet out(s);
        for (int i = 0; i < s.size(); ++i)
            out.c_[i] = c_[space_->index_of(s.exponents(i))];
        return out;
    }

    // Jet of d_var f, one order lower.
    Jet derivative(int var) const {
        if (order() == 0)
            throw error("cannot differentiate an order-0 jet");
        if (var < 0 || var >= dim())
            throw error("derivative index out of range");
        const JetSpace& s = jet_space(dim(), order() - 1);
        Jet out(s);
        for (int i = 0; i < s.size(); ++i) {
            MultiIndex a = s.exponents(i);
            a[var] = static_cast<std::uint8_t>(a[var] + 1);
            out.c_[i] = c_[space_->index_of(a)] * static_cast<double>(a[var]);
        }
        return out;
    }

    Jet operator-() const {
        Jet out = *this;
        for (Cplx& v : out.c_) v = -v;
        return out;
    }

    Jet& operator+=(const Jet& rhs) { return apply(rhs, +1); }
    Jet& operator-=(const Jet& rhs) { return apply(rhs, -1); }

    Jet& operator+=(Cplx v) { c_[0] += v; return *this; }
    Jet& operator-=(Cplx v) { c_[0] -= v; return *this; }
    Jet& operator*=(Cplx v) { for (Cplx& x : c_) x *= v; return *this; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        if (a.space_ == b.space_) {
            Jet out(*a.space_);
            const JetSpace& s = *a.space_;
            const int m = s.size();
            for (int i = 0; i < m; ++i) {
                if (a.c_[i] == Cplx(0.0)) continue;
                for (int j = 0; j < m; ++j) {
                    int k = s.product_index(i, j);
                    if (k >= 0) out.c_[k] += a.c_[i] * b.c_[j];
                }
            }
            return out;
        }
        int k = std::min(a.order(), b.order());
        return a.truncated(k) * b.truncated(k);
    }

    friend Jet operator/(const Jet& a, const Jet& b) {
        if (std::abs(b.value()) < jet_config().division_floor)
            throw error("jet division: divisor magnitude below floor");
        if (a.space_ != b.space_) {
            int k = std::min(a.order(), b.order());
            return a.truncated(k) / b.truncated(k);
        }
        // Solve b*h = a degree by degree (coefficients are graded, so every
        // product contribution to slot k comes from earlier-or-equal slots).
        const JetSpace& s = *a.space_;
        Jet h(s);
        const int m = s.size();
        for (int k = 0; k < m; ++k) {
            Cplx acc = a.c_[k];
            for (int i = 0; i < m; ++i) {
                if (h.c_[i] == Cplx(0.0)) continue;
                for (int j = 1; j < m; ++j) {
                    if (s.product_index(i, j) == k)
                        acc -= h.c_[i] * b.c_[j];
                }
            }
            // the only pair with j == 0 mapping to slot k is (k, 0), i.e. h_k b_0
            h.c_[k] = acc / b.c_[0];
        }
        return h;
    }

    friend Jet operator+(Jet a, const Jet& b) { a += b; return a; }
    friend Jet operator-(Jet a, const Jet& b) { a -= b; return a; }
    friend Jet operator+(Jet a, Cplx v) { a += v; return a; }
    friend Jet operator+(Cplx v, Jet a) { a += v; return a; }
    friend Jet operator-(Jet a, Cplx v) { a -= v; return a; }
    friend Jet operator-(Cplx v, const Jet& a) { Jet out = -a; out += v; return out; }
    friend Jet operator*(Jet a, Cplx v) { a *= v; return a; }
    friend Jet operator*(Cplx v, Jet a) { a *= v; return a; }
    friend Jet operator/(Jet a, Cplx v) {
        if (std::abs(v) < jet_config().division_floor)
            throw error("jet division: divisor magnitude below floor");
        a *= Cplx(1.0) / v;
        return a;
    }
    friend Jet operator/(Cplx v, const Jet& a) { return Jet(a.space(), v) / a; }
    friend Jet operator*(Jet a, double v) { a *= Cplx(v); return a; }
    friend Jet operator*(double v, Jet a) { a *= Cplx(v); return a; }
    friend Jet operator/(Jet a, double v) { return a / Cplx(v); }

private:
    Jet& apply(const Jet& rhs, int sign) {
        if (space_ == rhs.space_) {
            for (int i = 0; i < size(); ++i)
                c_[i] += static_cast<double>(sign) * rhs.c_[i];
            return *this;
        }
        int k = std::min(order(), rhs.order());
        Jet out = truncated(k);
        out.apply(rhs.truncated(k), sign);
        *this = out;
        return *this;
    }

    const JetSpace* space_;
    std::vector<Cplx> c_;
};

// Composition f(a) where derivs[k] = f^(k)(a.value()), k = 0..a.order().
// Classic truncated Taylor composition with the nilpotent part of a.
inline Jet compose(const std::vector<Cplx>& derivs, const Jet& a) {
    const int K = a.order();
    if (static_cast<int>(derivs.size()) < K + 1)
        throw error("compose: need derivatives up to the jet order");
    Jet abar = a;
    abar -= a.value();
    Jet out(a.space(), derivs[0]);
    Jet p(a.space(), Cplx(1.0));
    double kfact = 1.0;
    for (int k = 1; k <= K; ++k) {
        p = p * abar;
        kfact *= k;
        out += p * (derivs[k] / kfact);
    }
    return out;
}

inline Jet exp(const Jet& a) {
    Cplx e = std::exp(a.value());
    std::vector<Cplx> d(a.order() + 1, e);
    return compose(d, a);
}

inline Jet log(const Jet& a) {
    Cplx z = a.value();
    if (std::abs(z) < jet_config().ln_floor)
        throw error("jet ln: argument magnitude below floor");
    std::vector<Cplx> d(a.order() + 1);
    d[0] = std::log(z);
    Cplx zk = z;
    double sign = 1.0, fact = 1.0;
    for (int k = 1; k <= a.order(); ++k) {
        d[k] = sign * fact / zk; // (-1)^(k-1) (k-1)! / z^k
        zk *= z;
        sign = -sign;
        fact *= k;
    }
    return compose(d, a);
}

inline Jet sin(const Jet& a) {
    Cplx s = std::sin(a.value()), c = std::cos(a.value());
    const Cplx cycle[4] = {s, c, -s, -c};
    std::vector<Cplx> d(a.order() + 1);
    for (int k = 0; k <= a.order(); ++k) d[k] = cycle[k % 4];
    return compose(d, a);
}

inline Jet cos(const Jet& a) {
    Cplx s = std::sin(a.value()), c = std::cos(a.value());
    const Cplx cycle[4] = {c, -s, -c, s};
    std::vector<Cplx> d(a.order() + 1);
    for (int k = 0; k <= a.order(); ++k) d[k] = cycle[k % 4];
    return compose(d, a);
}

inline Jet tan(const Jet& a) {
    // t' = 1 + t^2 gives all higher derivatives by Leibniz.
    Cplx t = std::tan(a.value());
    std::vector<Cplx> d(a.order() + 1);
    d[0] = t;
    if (a.order() >= 1) d[1] = Cplx(1.0) + t * t;
    if (a.order() >= 2) d[2] = 2.0 * t * d[1];
    if (a.order() >= 3) d[3] = 2.0 * (d[1] * d[1] + t * d[2]);
    if (a.order() >= 4) d[4] = 6.0 * d[1] * d[2] + 2.0 * t * d[3];
    return compose(d, a);
}

inline Jet atan(const Jet& a) {
    Cplx z = a.value();
    Cplx w = Cplx(1.0) + z * z;
    if (std::abs(w) < jet_config().division_floor)
        throw error("jet arctan: argument at branch singularity");
    std::vector<Cplx> d(a.order() + 1);
    d[0] = std::atan(z);
    if (a.order() >= 1) d[1] = Cplx(1.0) / w;
    if (a.order() >= 2) d[2] = -2.0 * z / (w * w);
    if (a.order() >= 3) d[3] = (6.0 * z * z - 2.0) / (w * w * w);
    if (a.order() >= 4) d[4] = -24.0 * z * (z * z - 1.0) / (w * w * w * w);
    return compose(d, a);
}

// Principal-branch power with constant exponent.
inline Jet pow(const Jet& a, Cplx p) {
    Cplx z = a.value();
    if (std::abs(z) < jet_config().ln_floor)
        throw error("jet pow: base magnitude below floor");
    std::vector<Cplx> d(a.order() + 1);
    Cplx coef = Cplx(1.0);
    for (int k = 0; k <= a.order(); ++k) {
        d[k] = coef * std::pow(z, p - static_cast<double>(k));
        coef *= p - static_cast<double>(k);
    }
    return compose(d, a);
}

inline Jet pow(const Jet& a, double p) { return pow(a, Cplx(p)); }

// Integer powers avoid the branch cut and work at zero.
inline Jet ipow(const Jet& a, int p) {
    if (p < 0) return Jet(a.space(), Cplx(1.0)) / ipow(a, -p);
    Jet out(a.space(), Cplx(1.0));
    Jet base = a;
    int e = p;
    while (e > 0) {
        if (e & 1) out = out * base;
        base = base * base;
        e >>= 1;
    }
    return out;
}

inline Jet sqrt(const Jet& a) { return pow(a, Cplx(0.5)); }

} // namespace sv
