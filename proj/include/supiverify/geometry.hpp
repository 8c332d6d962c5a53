// Pointwise curvature stack from metric jets, covariant derivatives of
// jet-valued tensor fields, and the invariant differential operators used by
// the conformal checks.
//
// Sign conventions are pinned operationally: the Ricci identity
// V_,ijk - V_,ikj = R^m_ijk V_,m holds verbatim, and the unit round sphere
// has positive scalar curvature n(n-1).  Comma derivatives append the new
// index last, so V_,ij means "differentiate V_,i by j".

#pragma once

#include "supiverify/expression.hpp"
#include "supiverify/jetlinalg.hpp"
#include "supiverify/tensor.hpp"

#include <vector>

namespace sv {

inline TensorJet make_jet_tensor(int n, const std::vector<Var>& val, const JetSpace& s) {
    return TensorJet(n, val, Jet(s));
}

struct CurvatureData {
    TensorJet christoffel;     // Gamma^m_ij, slots (up, down, down)
    TensorJet riemann;         // R^m_ijk
    TensorJet riemann_down;    // R_mijk = g_ma R^a_ijk
    TensorJet ricci;           // R_ij = R^a_iaj
    Jet scalar;                // R
    TensorJet ricci_tracefree; // R with the g R/n part removed
    TensorJet schouten;        // (R_ij - R g_ij / (2(n-1))) / (n-2)
    TensorJet weyl;
    TensorJet einstein;        // R_ij - R g_ij / 2
};

class Geometry {
public:
    // entries are order-4 jets of g_ij at the evaluation point
    Geometry(std::vector<std::vector<Jet>> entries, std::vector<Cplx> point)
        : point_(std::move(point)) {
        n_ = static_cast<int>(entries.size());
        if (n_ < 3)
            throw error("metric dimension must be at least 3");
        if (n_ > kMaxDim)
            throw error("metric dimension exceeds the jet limit");
        const JetSpace& s4 = entries[0][0].space();
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if ((entries[i][j] - entries[j][i]).max_abs() > 1e-12)
                    throw error("metric is not symmetric");

        det_ = jet_matrix_det(entries);
        if (std::abs(det_.value()) < 1e-10)
            throw error("metric is singular at the evaluation point");
        JetMatrix inv = jet_matrix_inverse(entries);

        gj_.g = make_jet_tensor(n_, {Var::Down, Var::Down}, s4);
        gj_.ginv = make_jet_tensor(n_, {Var::Up, Var::Up}, s4);
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                gj_.g.at({i, j}) = entries[i][j];
                gj_.ginv.at({i, j}) = inv[i][j];
            }
        }
        compute_curvature();
    }

    int dim() const { return n_; }
    const std::vector<Cplx>& point() const { return point_; }
    const MetricOf<Jet>& metric_jets() const { return gj_; }
    const Jet& det() const { return det_; }
    const CurvatureData& curvature() const { return curv_; }

    Metric metric_value() const {
        Metric m;
        m.g = tensor_value(gj_.g);
        m.ginv = tensor_value(gj_.ginv);
        return m;
    }

private:
    void compute_curvature() {
        const JetSpace& s3 = jet_space(n_, 3);
        const JetSpace& s2 = jet_space(n_, 2);

        // Gamma_{m,ij} = (d_i g_mj + d_j g_mi - d_m g_ij) / 2
        TensorJet gdown = make_jet_tensor(n_, {Var::Down, Var::Down, Var::Down}, s3);
        for (int m = 0; m < n_; ++m)
            for (int i = 0; i < n_; ++i)
                for (int j = 0; j < n_; ++j)
                    gdown.at({m, i, j}) = (gj_.g.at({m, j}).derivative(i) +
                                           gj_.g.at({m, i}).derivative(j) -
                                           gj_.g.at({i, j}).derivative(m)) * 0.5;
        curv_.christoffel = raise_slot(gdown, 0, gj_);

        // R^m_ijk = d_j Gamma^m_ik - d_k Gamma^m_ij + Gamma^m_ja Gamma^a_ik
        //                                            - Gamma^m_ka Gamma^a_ij
        curv_.riemann = make_jet_tensor(n_, {Var::Up, Var::Down, Var::Down, Var::Down}, s2);
        for (int m = 0; m < n_; ++m) {
            for (int i = 0; i < n_; ++i) {
                for (int j = 0; j < n_; ++j) {
                    for (int k = 0; k < n_; ++k) {
                        Jet acc = curv_.christoffel.at({m, i, k}).derivative(j) -
                                  curv_.christoffel.at({m, i, j}).derivative(k);
                        for (int a = 0; a < n_; ++a)
                            acc += curv_.christoffel.at({m, j, a}) * curv_.christoffel.at({a, i, k}) -
                                   curv_.christoffel.at({m, k, a}) * curv_.christoffel.at({a, i, j});
                        curv_.riemann.at({m, i, j, k}) = acc;
                    }
                }
            }
        }

        curv_.riemann_down = lower_slot(curv_.riemann, 0, gj_);
        curv_.ricci = contract(curv_.riemann, 0, 2);
        curv_.scalar = trace_slots(curv_.ricci, 0, 1, gj_)[0];

        double n = n_;
        curv_.einstein = curv_.ricci - (curv_.scalar * 0.5) * gj_.g;
        curv_.schouten = (curv_.ricci - (curv_.scalar / (2.0 * (n - 1.0))) * gj_.g) * (1.0 / (n - 2.0));
        curv_.ricci_tracefree = curv_.ricci - (curv_.scalar / n) * gj_.g;

        // Ricci decomposition: W = Riem - young*(ik,jl)(Rtf_ik g_jl)/(4(n-2))
        //                               - young*(ik,jl)(g_ik g_jl) R/(8n(n-1))
        // the projector returns four times the Kulkarni-Nomizu product
        YoungSpec riem_sym{{{0, 2}, {1, 3}}, true, false};
        TensorJet rg = permuted(outer(curv_.ricci_tracefree, gj_.g), {0, 2, 1, 3});
        TensorJet gg = permuted(outer(gj_.g, gj_.g), {0, 2, 1, 3});
        curv_.weyl = curv_.riemann_down -
                     (1.0 / (4.0 * (n - 2.0))) * young_project(rg, riem_sym, gj_) -
                     (curv_.scalar / (8.0 * n * (n - 1.0))) * young_project(gg, riem_sym, gj_);
    }

    int n_ = 0;
    std::vector<Cplx> point_;
    MetricOf<Jet> gj_;
    Jet det_;
    CurvatureData curv_;
};

inline Geometry make_geometry(const std::vector<std::vector<Expression>>& g,
                              const std::vector<Cplx>& point,
                              const std::map<std::string, Cplx>& params) {
    const std::size_t n = g.size();
    std::vector<std::vector<Jet>> entries(n, std::vector<Jet>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (g[i].size() != n) throw error("metric component matrix is not square");
        for (std::size_t j = 0; j < n; ++j)
            entries[i][j] = g[i][j].eval_jet(point, params, 4);
    }
    return Geometry(std::move(entries), point);
}

// Covariant derivative of a jet-valued tensor field; the derivative index is
// appended as the last (down) slot.  Entry jets drop one order.
inline TensorJet cov_derivative(const TensorJet& t, const Geometry& geo) {
    const int n = geo.dim();
    int ord = t.size() ? t[0].order() : 0;
    if (ord < 1) throw error("cov_derivative: component jets are order 0");
    const JetSpace& so = jet_space(n, ord - 1);
    std::vector<Var> val = t.valence();
    val.push_back(Var::Down);
    TensorJet out = make_jet_tensor(n, val, so);
    const TensorJet& gamma = geo.curvature().christoffel;
    std::vector<int> idx(static_cast<std::size_t>(t.rank()));
    for (std::size_t f = 0; f < out.size(); ++f) {
        std::vector<int> oidx = out.unflatten(f);
        int di = oidx.back();
        for (int s = 0; s < t.rank(); ++s) idx[static_cast<std::size_t>(s)] = oidx[static_cast<std::size_t>(s)];
        Jet acc = t.at(idx).derivative(di);
        for (int s = 0; s < t.rank(); ++s) {
            int a = idx[static_cast<std::size_t>(s)];
            std::vector<int> jdx = idx;
            if (t.valence(s) == Var::Down) {
                for (int m = 0; m < n; ++m) {
                    jdx[static_cast<std::size_t>(s)] = m;
                    acc -= gamma.at({m, di, a}) * t.at(jdx);
                }
            } else {
                for (int m = 0; m < n; ++m) {
                    jdx[static_cast<std::size_t>(s)] = m;
                    acc += gamma.at({a, di, m}) * t.at(jdx);
                }
            }
        }
        out[f] = acc;
    }
    return out;
}

inline TensorJet gradient(const Jet& f, const Geometry& geo) {
    const int n = geo.dim();
    const JetSpace& so = jet_space(n, f.order() - 1);
    TensorJet out = make_jet_tensor(n, {Var::Down}, so);
    for (int i = 0; i < n; ++i) out.at({i}) = f.derivative(i);
    return out;
}

inline TensorJet hessian(const Jet& f, const Geometry& geo) {
    return cov_derivative(gradient(f, geo), geo);
}

inline Jet laplacian(const Jet& f, const Geometry& geo) {
    return trace_slots(hessian(f, geo), 0, 1, geo.metric_jets())[0];
}

// L = -4 (n-1)/(n-2) Laplacian + R
inline Jet conformal_laplacian(const Jet& f, const Geometry& geo) {
    double n = geo.dim();
    return laplacian(f, geo) * (-4.0 * (n - 1.0) / (n - 2.0)) + geo.curvature().scalar * f;
}

// Hdot = (nabla^2_ij - P_ij) o, the invariant tracefree Hessian
inline TensorJet tracefree_hessian(const Jet& f, const Geometry& geo) {
    TensorJet h = hessian(f, geo) - geo.curvature().schouten * f;
    return tracefree_pair(h, geo.metric_jets(), 0, 1);
}

// Weyl connection acting on a fully symmetric tracefree 3-tensor:
// nabla^tbar_l S_ijk = nabla_l S_ijk
//   - young(ijk)o(3 S_ijl tbar_k + S_ijk tbar_l + 3 g_kl S_ija tbar^a) / 9
inline TensorJet weyl_connection_derivative(const TensorJet& s, const TensorJet& tbar,
                                            const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    TensorJet a = permuted(outer(s, tbar), {0, 1, 3, 2}); // S_ijl tbar_k
    TensorJet b = outer(s, tbar);                         // S_ijk tbar_l
    TensorJet sdt = trace_slots(outer(s, tbar), 2, 3, m); // S_ija tbar^a
    TensorJet c = outer(sdt, m.g);                        // g_kl factor
    TensorJet combo = 3.0 * a + b + 3.0 * c;
    YoungSpec sym3{{{0, 1, 2}}, false, true};
    return cov_derivative(s, geo) - (1.0 / 9.0) * young_project(combo, sym3, m);
}

} // namespace sv
