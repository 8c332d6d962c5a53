// Dense point-local tensors over complex values or jets, with metric
// contractions, Young-symmetrizer projections and tracefree parts.
//
// Young projectors follow the unnormalized convention: a projector is the
// plain signed sum over the row/column permutation groups, with no 1/n!
// factors.  By default the column antisymmetrizers act first and the row
// symmetrizers second; the adjoint flag swaps that order.  The tracefree flag
// removes all metric traces among the projected slots.

#pragma once

#include "supiverify/jet.hpp"

#include <Eigen/Dense>

#include <functional>
#include <numeric>
#include <utility>
#include <vector>

namespace sv {

enum class Var { Up, Down };

template <class T>
class Tensor {
public:
    Tensor() = default;

    Tensor(int n, std::vector<Var> valence, T zero)
        : n_(n), valence_(std::move(valence)), zero_(zero) {
        std::size_t sz = 1;
        for (std::size_t k = 0; k < valence_.size(); ++k) sz *= static_cast<std::size_t>(n_);
        data_.assign(sz, zero_);
    }

    int dim() const { return n_; }
    int rank() const { return static_cast<int>(valence_.size()); }
    const std::vector<Var>& valence() const { return valence_; }
    Var valence(int slot) const { return valence_[static_cast<std::size_t>(slot)]; }
    const T& zero() const { return zero_; }
    std::size_t size() const { return data_.size(); }

    T& operator[](std::size_t flat) { return data_[flat]; }
    const T& operator[](std::size_t flat) const { return data_[flat]; }

    T& at(const std::vector<int>& idx) { return data_[flatten(idx)]; }
    const T& at(const std::vector<int>& idx) const { return data_[flatten(idx)]; }

    std::size_t flatten(const std::vector<int>& idx) const {
        std::size_t f = 0;
        for (std::size_t k = 0; k < valence_.size(); ++k)
            f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx[k]);
        return f;
    }

    std::vector<int> unflatten(std::size_t flat) const {
        std::vector<int> idx(valence_.size(), 0);
        for (std::size_t k = valence_.size(); k-- > 0;) {
            idx[k] = static_cast<int>(flat % static_cast<std::size_t>(n_));
            flat /= static_cast<std::size_t>(n_);
        }
        return idx;
    }

    Tensor& operator+=(const Tensor& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }

    Tensor& operator-=(const Tensor& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }

    template <class S>
    Tensor& operator*=(const S& s) {
        for (T& v : data_) v = v * s;
        return *this;
    }

    friend Tensor operator+(Tensor a, const Tensor& b) { a += b; return a; }
    friend Tensor operator-(Tensor a, const Tensor& b) { a -= b; return a; }
    friend Tensor operator-(const Tensor& a) {
        Tensor out = a;
        for (T& v : out.data_) v = -v;
        return out;
    }

    template <class S>
    friend Tensor operator*(Tensor a, const S& s) { a *= s; return a; }
    template <class S>
    friend Tensor operator*(const S& s, Tensor a) { a *= s; return a; }

private:
    void check_same(const Tensor& o) const {
        if (n_ != o.n_ || valence_ != o.valence_)
            throw error("tensor shape mismatch");
    }

    int n_ = 0;
    std::vector<Var> valence_;
    std::vector<T> data_;
    T zero_{};
};

using TensorValue = Tensor<Cplx>;
using TensorJet = Tensor<Jet>;

inline TensorValue tensor_value(const TensorJet& t) {
    TensorValue out(t.dim(), t.valence(), Cplx(0.0));
    for (std::size_t k = 0; k < t.size(); ++k) out[k] = t[k].value();
    return out;
}

inline double max_abs(const TensorValue& t) {
    double m = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) m = std::max(m, std::abs(t[k]));
    return m;
}

inline double max_abs(const TensorJet& t) {
    double m = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) m = std::max(m, t[k].max_abs());
    return m;
}

// result slot k carries what slot perm[k] carried in the input
template <class T>
Tensor<T> permuted(const Tensor<T>& t, const std::vector<int>& perm) {
    std::vector<Var> val(t.rank());
    for (int k = 0; k < t.rank(); ++k) val[static_cast<std::size_t>(k)] = t.valence(perm[static_cast<std::size_t>(k)]);
    Tensor<T> out(t.dim(), val, t.zero());
    std::vector<int> src(static_cast<std::size_t>(t.rank()));
    for (std::size_t f = 0; f < out.size(); ++f) {
        std::vector<int> idx = out.unflatten(f);
        for (int k = 0; k < t.rank(); ++k) src[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = idx[static_cast<std::size_t>(k)];
        out[f] = t.at(src);
    }
    return out;
}

template <class T>
Tensor<T> outer(const Tensor<T>& a, const Tensor<T>& b) {
    std::vector<Var> val = a.valence();
    val.insert(val.end(), b.valence().begin(), b.valence().end());
    Tensor<T> out(a.dim(), val, a.zero());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i * b.size() + j] = a[i] * b[j];
    return out;
}

// plain contraction of an up slot against a down slot
template <class T>
Tensor<T> contract(const Tensor<T>& t, int slot_a, int slot_b) {
    if (slot_a == slot_b) throw error("contract: identical slots");
    if (t.valence(slot_a) == t.valence(slot_b))
        throw error("contract: slots must have opposite position");
    if (slot_a > slot_b) std::swap(slot_a, slot_b);
    std::vector<Var> val;
    for (int k = 0; k < t.rank(); ++k)
        if (k != slot_a && k != slot_b) val.push_back(t.valence(k));
    Tensor<T> out(t.dim(), val, t.zero());
    std::vector<int> idx(static_cast<std::size_t>(t.rank()));
    for (std::size_t f = 0; f < out.size(); ++f) {
        std::vector<int> oidx = out.unflatten(f);
        int pos = 0;
        for (int k = 0; k < t.rank(); ++k)
            if (k != slot_a && k != slot_b) idx[static_cast<std::size_t>(k)] = oidx[static_cast<std::size_t>(pos++)];
        T acc = out.zero();
        for (int c = 0; c < t.dim(); ++c) {
            idx[static_cast<std::size_t>(slot_a)] = c;
            idx[static_cast<std::size_t>(slot_b)] = c;
            acc += t.at(idx);
        }
        out[f] = acc;
    }
    return out;
}

// Metric data used by raise/lower/trace; entries are values or jets.
template <class T>
struct MetricOf {
    Tensor<T> g;    // down down
    Tensor<T> ginv; // up up
};

using Metric = MetricOf<Cplx>;
using MetricJet = MetricOf<Jet>;

template <class T>
Tensor<T> raise_slot(const Tensor<T>& t, int slot, const MetricOf<T>& m) {
    if (t.valence(slot) != Var::Down) throw error("raise_slot: slot already up");
    // contract ginv^{a slot} with t_…slot…, result index lands in place
    Tensor<T> prod = outer(m.ginv, t);
    Tensor<T> c = contract(prod, 1, 2 + slot);
    // slots now: [a, t-slots without slot]; move a into position
    std::vector<int> perm;
    perm.reserve(static_cast<std::size_t>(t.rank()));
    int pos = 1;
    for (int k = 0; k < t.rank(); ++k) {
        if (k == slot) perm.push_back(0);
        else perm.push_back(pos++);
    }
    return permuted(c, perm);
}

template <class T>
Tensor<T> lower_slot(const Tensor<T>& t, int slot, const MetricOf<T>& m) {
    if (t.valence(slot) != Var::Up) throw error("lower_slot: slot already down");
    Tensor<T> prod = outer(m.g, t);
    Tensor<T> c = contract(prod, 1, 2 + slot);
    std::vector<int> perm;
    perm.reserve(static_cast<std::size_t>(t.rank()));
    int pos = 1;
    for (int k = 0; k < t.rank(); ++k) {
        if (k == slot) perm.push_back(0);
        else perm.push_back(pos++);
    }
    return permuted(c, perm);
}

// metric trace over two slots of like position; mixed positions contract directly
template <class T>
Tensor<T> trace_slots(const Tensor<T>& t, int slot_a, int slot_b, const MetricOf<T>& m) {
    if (t.valence(slot_a) != t.valence(slot_b))
        return contract(t, slot_a, slot_b);
    if (t.valence(slot_a) == Var::Down)
        return contract(raise_slot(t, slot_a, m), slot_a, slot_b);
    return contract(lower_slot(t, slot_a, m), slot_a, slot_b);
}

template <class T>
Tensor<T> all_down(const Tensor<T>& t, const MetricOf<T>& m) {
    Tensor<T> out = t;
    for (int k = 0; k < t.rank(); ++k)
        if (out.valence(k) == Var::Up) out = lower_slot(out, k, m);
    return out;
}

namespace detail {

// expands a product of symmetrizers/antisymmetrizers over slot sets into a
// list of (slot map, coefficient) terms
struct PermTerm {
    std::vector<int> map; // map[slot] = image slot
    double coeff;
};

inline std::vector<std::vector<int>> all_bijections(const std::vector<int>& set) {
    std::vector<int> perm(set.begin(), set.end());
    std::sort(perm.begin(), perm.end());
    std::vector<std::vector<int>> out;
    do {
        out.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

inline double perm_sign(const std::vector<int>& from, const std::vector<int>& to) {
    // sign of the bijection sending from[k] -> to[k]
    std::vector<int> rel(from.size());
    for (std::size_t k = 0; k < from.size(); ++k) {
        auto it = std::find(from.begin(), from.end(), to[k]);
        rel[k] = static_cast<int>(it - from.begin());
    }
    double sign = 1.0;
    for (std::size_t a = 0; a < rel.size(); ++a)
        for (std::size_t b = a + 1; b < rel.size(); ++b)
            if (rel[a] > rel[b]) sign = -sign;
    return sign;
}

inline std::vector<PermTerm> group_sum(int rank, const std::vector<int>& set, bool anti) {
    std::vector<int> sorted(set.begin(), set.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<PermTerm> out;
    for (const std::vector<int>& img : all_bijections(sorted)) {
        PermTerm t;
        t.map.resize(static_cast<std::size_t>(rank));
        std::iota(t.map.begin(), t.map.end(), 0);
        for (std::size_t k = 0; k < sorted.size(); ++k)
            t.map[static_cast<std::size_t>(sorted[k])] = img[k];
        t.coeff = anti ? perm_sign(sorted, img) : 1.0;
        out.push_back(std::move(t));
    }
    return out;
}

// combines the term lists of "later" applied after "first"; with the map
// semantics of apply_perm_map the combined map is first(later(s))
inline std::vector<PermTerm> compose_terms(const std::vector<PermTerm>& later,
                                           const std::vector<PermTerm>& first) {
    std::vector<PermTerm> out;
    out.reserve(later.size() * first.size());
    for (const PermTerm& a : later) {
        for (const PermTerm& b : first) {
            PermTerm t;
            t.map.resize(a.map.size());
            for (std::size_t s = 0; s < a.map.size(); ++s)
                t.map[s] = b.map[static_cast<std::size_t>(a.map[s])];
            t.coeff = a.coeff * b.coeff;
            out.push_back(std::move(t));
        }
    }
    return out;
}

template <class T>
Tensor<T> apply_perm_map(const Tensor<T>& t, const std::vector<int>& map) {
    // output index tuple I reads input at J with J[map[s]] = I[s]
    Tensor<T> out(t.dim(), t.valence(), t.zero());
    std::vector<int> src(static_cast<std::size_t>(t.rank()));
    for (std::size_t f = 0; f < out.size(); ++f) {
        std::vector<int> idx = out.unflatten(f);
        for (int s = 0; s < t.rank(); ++s)
            src[static_cast<std::size_t>(map[static_cast<std::size_t>(s)])] = idx[static_cast<std::size_t>(s)];
        out[f] = t.at(src);
    }
    return out;
}

} // namespace detail

template <class T>
Tensor<T> symmetrize(const Tensor<T>& t, const std::vector<int>& slots) {
    Tensor<T> out(t.dim(), t.valence(), t.zero());
    for (const auto& term : detail::group_sum(t.rank(), slots, false))
        out += detail::apply_perm_map(t, term.map);
    return out;
}

template <class T>
Tensor<T> antisymmetrize(const Tensor<T>& t, const std::vector<int>& slots) {
    Tensor<T> out(t.dim(), t.valence(), t.zero());
    for (const auto& term : detail::group_sum(t.rank(), slots, true)) {
        Tensor<T> p = detail::apply_perm_map(t, term.map);
        p *= Cplx(term.coeff);
        out += p;
    }
    return out;
}

struct YoungSpec {
    std::vector<std::vector<int>> rows; // tableau rows of slot ids
    bool adjoint = false;               // symmetrizers first when set
    bool tracefree = false;             // remove traces among projected slots

    std::vector<int> projected_slots() const {
        std::vector<int> s;
        for (const auto& r : rows) s.insert(s.end(), r.begin(), r.end());
        std::sort(s.begin(), s.end());
        return s;
    }

    std::vector<std::vector<int>> columns() const {
        std::vector<std::vector<int>> cols;
        for (const auto& r : rows) {
            for (std::size_t j = 0; j < r.size(); ++j) {
                if (cols.size() <= j) cols.resize(j + 1);
                cols[j].push_back(r[j]);
            }
        }
        return cols;
    }
};

// expansion of the projector as signed permutation terms
inline std::vector<detail::PermTerm> young_terms(const YoungSpec& spec, int rank) {
    std::vector<detail::PermTerm> acc;
    acc.push_back({std::vector<int>(static_cast<std::size_t>(rank)), 1.0});
    std::iota(acc[0].map.begin(), acc[0].map.end(), 0);
    auto absorb = [&](const std::vector<int>& set, bool anti) {
        if (set.size() < 2) return;
        acc = detail::compose_terms(detail::group_sum(rank, set, anti), acc);
    };
    if (!spec.adjoint) {
        for (const auto& col : spec.columns()) absorb(col, true);
        for (const auto& row : spec.rows) absorb(row, false);
    } else {
        for (const auto& row : spec.rows) absorb(row, false);
        for (const auto& col : spec.columns()) absorb(col, true);
    }
    return acc;
}

template <class T>
Tensor<T> tracefree_part(const Tensor<T>& t, const MetricOf<T>& m,
                         const std::vector<int>& subset);

template <class T>
Tensor<T> young_project(const Tensor<T>& t, const YoungSpec& spec, const MetricOf<T>& m) {
    for (int s : spec.projected_slots())
        if (t.valence(s) != Var::Down)
            throw error("young_project: projected slots must be down");
    Tensor<T> out(t.dim(), t.valence(), t.zero());
    for (const auto& term : young_terms(spec, t.rank())) {
        Tensor<T> p = detail::apply_perm_map(t, term.map);
        p *= Cplx(term.coeff);
        out += p;
    }
    if (spec.tracefree)
        out = tracefree_part(out, m, spec.projected_slots());
    return out;
}

namespace detail {

// inserts g at slots (a,b) (a<b) and y on the remaining slots, matching the
// slot layout of the rank-r target
template <class T>
Tensor<T> insert_metric(const Tensor<T>& g, const Tensor<T>& y, int rank, int a, int b) {
    Tensor<T> prod = outer(g, y); // slots: [0]=a-part [1]=b-part, then y
    std::vector<int> perm(static_cast<std::size_t>(rank));
    int ypos = 2;
    for (int k = 0; k < rank; ++k) {
        if (k == a) perm[static_cast<std::size_t>(k)] = 0;
        else if (k == b) perm[static_cast<std::size_t>(k)] = 1;
        else perm[static_cast<std::size_t>(k)] = ypos++;
    }
    return permuted(prod, perm);
}

inline bool symmetric_in(const TensorValue& t, const std::vector<int>& slots, double tol) {
    for (std::size_t a = 0; a < slots.size(); ++a) {
        for (std::size_t b = a + 1; b < slots.size(); ++b) {
            std::vector<int> perm(static_cast<std::size_t>(t.rank()));
            std::iota(perm.begin(), perm.end(), 0);
            std::swap(perm[static_cast<std::size_t>(slots[a])], perm[static_cast<std::size_t>(slots[b])]);
            TensorValue d = t - permuted(t, perm);
            if (max_abs(d) > tol * (1.0 + max_abs(t))) return false;
        }
    }
    return true;
}

} // namespace detail

// Closed-form tracefree projection for a pair of slots, valid for any tensor:
// with a single projected pair there is exactly one trace to cancel.
template <class T>
Tensor<T> tracefree_pair(const Tensor<T>& t, const MetricOf<T>& m, int a, int b) {
    Tensor<T> tr = trace_slots(t, a, b, m);
    Tensor<T> corr = detail::insert_metric(m.g, tr, t.rank(), std::min(a, b), std::max(a, b));
    corr *= Cplx(1.0 / static_cast<double>(t.dim()));
    return t - corr;
}

// Closed form for a fully symmetric triple of slots (bystanders allowed):
// subtract sym(g_ab lam_c) / (n + 2) with lam the single trace.
template <class T>
Tensor<T> tracefree_symmetric3(const Tensor<T>& t, const MetricOf<T>& m,
                               const std::vector<int>& slots) {
    int n = t.dim();
    Tensor<T> out = t;
    const int pairs[3][2] = {{0, 1}, {1, 2}, {0, 2}};
    for (const auto& p : pairs) {
        int a = slots[static_cast<std::size_t>(p[0])];
        int b = slots[static_cast<std::size_t>(p[1])];
        Tensor<T> tr = trace_slots(t, a, b, m);
        Tensor<T> corr = detail::insert_metric(m.g, tr, t.rank(), std::min(a, b), std::max(a, b));
        corr *= Cplx(1.0 / static_cast<double>(n + 2));
        out -= corr;
    }
    return out;
}

// General tracefree projection over a subset of down slots.  Symmetric cases
// use the closed forms above; everything else solves the linear system of
// trace conditions (complex-valued tensors only).
template <>
inline TensorValue tracefree_part<Cplx>(const TensorValue& t, const Metric& m,
                                        const std::vector<int>& subset) {
    for (int s : subset)
        if (t.valence(s) != Var::Down)
            throw error("tracefree_part: projected slots must be down");
    if (subset.size() < 2) return t;
    if (subset.size() == 2) return tracefree_pair(t, m, subset[0], subset[1]);
    if (subset.size() == 3 && detail::symmetric_in(t, subset, 1e-9))
        return tracefree_symmetric3(t, m, subset);

    const int n = t.dim();
    const int r = t.rank();
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t a = 0; a < subset.size(); ++a)
        for (std::size_t b = a + 1; b < subset.size(); ++b)
            pairs.emplace_back(subset[a], subset[b]);

    std::size_t ysize = 1;
    for (int k = 0; k < r - 2; ++k) ysize *= static_cast<std::size_t>(n);
    const std::size_t cols = pairs.size() * ysize;
    const std::size_t rows = pairs.size() * ysize;

    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows),
                                                static_cast<Eigen::Index>(cols));
    Eigen::VectorXcd rhs(static_cast<Eigen::Index>(rows));

    std::vector<Var> yval(static_cast<std::size_t>(r - 2), Var::Down);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        for (std::size_t e = 0; e < ysize; ++e) {
            TensorValue y(n, yval, Cplx(0.0));
            y[e] = Cplx(1.0);
            TensorValue ins = detail::insert_metric(m.g, y, r, pairs[p].first, pairs[p].second);
            for (std::size_t q = 0; q < pairs.size(); ++q) {
                TensorValue tr = trace_slots(ins, pairs[q].first, pairs[q].second, m);
                for (std::size_t k = 0; k < ysize; ++k)
                    A(static_cast<Eigen::Index>(q * ysize + k),
                      static_cast<Eigen::Index>(p * ysize + e)) = tr[k];
            }
        }
    }
    for (std::size_t q = 0; q < pairs.size(); ++q) {
        TensorValue tr = trace_slots(t, pairs[q].first, pairs[q].second, m);
        for (std::size_t k = 0; k < ysize; ++k)
            rhs(static_cast<Eigen::Index>(q * ysize + k)) = tr[k];
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(A);
    Eigen::VectorXcd y = cod.solve(rhs);

    TensorValue out = t;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        TensorValue yp(n, yval, Cplx(0.0));
        for (std::size_t k = 0; k < ysize; ++k)
            yp[k] = y(static_cast<Eigen::Index>(p * ysize + k));
        out -= detail::insert_metric(m.g, yp, r, pairs[p].first, pairs[p].second);
    }

    for (const auto& pr : pairs) {
        TensorValue tr = trace_slots(out, pr.first, pr.second, m);
        if (max_abs(tr) > 1e-9 * (1.0 + max_abs(t)))
            throw error("tracefree_part: trace conditions not solvable for this tensor");
    }
    return out;
}

template <>
inline TensorJet tracefree_part<Jet>(const TensorJet& t, const MetricJet& m,
                                     const std::vector<int>& subset) {
    for (int s : subset)
        if (t.valence(s) != Var::Down)
            throw error("tracefree_part: projected slots must be down");
    if (subset.size() < 2) return t;
    if (subset.size() == 2) return tracefree_pair(t, m, subset[0], subset[1]);
    if (subset.size() == 3) return tracefree_symmetric3(t, m, subset);
    throw error("jet-valued tracefree projection only supports pairs and symmetric triples");
}

template <class T>
Tensor<T> tracefree_part(const Tensor<T>& t, const MetricOf<T>& m) {
    std::vector<int> all(static_cast<std::size_t>(t.rank()));
    std::iota(all.begin(), all.end(), 0);
    return tracefree_part(t, m, all);
}

} // namespace sv
