#pragma once
// Recovery of the structure tensors of a second-order conformally
// superintegrable system from its potential family, the derived tensors of
// the linear prolongation, and the integrability conditions on the potential.

#include <cmath>
#include <functional>
#include <vector>

#include "supiverify/catalog.hpp"
#include "supiverify/geometry.hpp"
#include "supiverify/jetlinalg.hpp"

namespace sv {

struct Residual {
    double raw = 0.0;
    double normalized = 0.0;
};

inline Residual make_residual(double raw, double scale) {
    return {raw, raw / (1.0 + scale)};
}

// mixed-position identity delta_k^m, slots (down, up)
inline TensorJet delta_tensor(int n, const JetSpace& s) {
    TensorJet out = make_jet_tensor(n, {Var::Down, Var::Up}, s);
    for (int k = 0; k < n; ++k) out.at({k, k}) = Jet::constant(s, Cplx(1.0));
    return out;
}

// Rebuild a scalar jet from the jet of its gradient; the constant term is
// supplied by the caller.  Coefficients follow from c_alpha = c_(alpha-e_i) / alpha_i.
inline Jet integrate_gradient(const TensorJet& w, Cplx constant_term) {
    const JetSpace& ws = w[0].space();
    const JetSpace& s = jet_space(ws.dim(), ws.order() + 1);
    Jet out(s, constant_term);
    for (int a = 1; a < s.size(); ++a) {
        MultiIndex mi = s.exponents(a);
        int var = 0;
        while (mi[var] == 0) ++var;
        MultiIndex lower = mi;
        lower[var] -= 1;
        int src = ws.index_of(lower);
        out.coeff(a) = w[var].coeff(src) / static_cast<double>(mi[var]);
    }
    return out;
}

struct StructureData {
    std::vector<Cplx> point;
    TensorJet T;            // T_ij^k, symmetric in (i,j), tracefree
    TensorJet tau;          // tau_ij, symmetric tracefree
    TensorJet t;            // t_j = T_ja^a
    TensorJet tbar;         // n t / ((n-1)(n+2)), the scaled trace one-form
    TensorJet S;            // totally symmetric tracefree part, all slots down
    Jet tbar_scalar;        // integrated trace scalar (declared constant if available)
    Jet sigma;              // exp(-tbar/3)
    double residual = 0.0;
    double normalized_residual = 0.0;
    double condition = 0.0;
    int rank = 0;
    bool unique = false;
};

// Fits T and tau to the potential family through the tracefree Hessian
// equation of every basis member, with tracefreeness imposed as extra rows.
inline StructureData solve_structure_tensors(const SystemSpec& sys,
                                             const std::vector<Cplx>& point) {
    Geometry geo = system_geometry(sys, point);
    const int n = geo.dim();
    const MetricOf<Jet>& m = geo.metric_jets();
    const JetSpace& s2 = jet_space(n, 2);

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) pairs.emplace_back(i, j);
    const int np = static_cast<int>(pairs.size());
    const int cols = np * n + np; // T components then tau components

    std::vector<Jet> basis = potential_jets(sys, point, 4);
    std::vector<std::vector<Jet>> a;
    std::vector<Jet> b;
    Jet zero(s2);
    double scale = 0.0;

    for (const Jet& v : basis) {
        TensorJet grad = gradient(v, geo);
        TensorJet hess = cov_derivative(grad, geo);
        Jet lap = trace_slots(hess, 0, 1, m)[0];
        TensorJet lhs = hess - (1.0 / n) * (lap * m.g);
        scale = std::max({scale, v.max_abs(), max_abs(grad), max_abs(lhs)});
        for (int p = 0; p < np; ++p) {
            auto [i, j] = pairs[static_cast<std::size_t>(p)];
            std::vector<Jet> row(static_cast<std::size_t>(cols), zero);
            for (int k = 0; k < n; ++k)
                row[static_cast<std::size_t>(p * n + k)] = grad[k].truncated(2);
            row[static_cast<std::size_t>(np * n + p)] = v.truncated(2);
            a.push_back(std::move(row));
            b.push_back(lhs.at({i, j}).truncated(2));
        }
    }

    // tracefree constraints: g^ij T_ij^k = 0 and g^ij tau_ij = 0
    for (int k = 0; k <= n; ++k) {
        std::vector<Jet> row(static_cast<std::size_t>(cols), zero);
        for (int p = 0; p < np; ++p) {
            auto [i, j] = pairs[static_cast<std::size_t>(p)];
            Jet w = m.ginv.at({i, j}).truncated(2);
            if (i != j) w = w * Cplx(2.0);
            if (k < n)
                row[static_cast<std::size_t>(p * n + k)] = w;
            else
                row[static_cast<std::size_t>(np * n + p)] = w;
        }
        a.push_back(std::move(row));
        b.push_back(zero);
    }

    JetLeastSquares ls = jet_least_squares(a, b);

    // uniqueness probe: the same system with permuted columns must give the
    // same tensors back
    bool unique = ls.unique;
    {
        std::vector<std::vector<Jet>> ar(a.size());
        for (std::size_t r = 0; r < a.size(); ++r) {
            ar[r].assign(a[r].rbegin(), a[r].rend());
        }
        JetLeastSquares ls2 = jet_least_squares(ar, b);
        for (int c = 0; c < cols; ++c) {
            double d = (ls.solution[static_cast<std::size_t>(c)] -
                        ls2.solution[static_cast<std::size_t>(cols - 1 - c)]).max_abs();
            if (d > 1e-9 * (1.0 + scale)) unique = false;
        }
    }

    StructureData sd;
    sd.point = point;
    sd.T = make_jet_tensor(n, {Var::Down, Var::Down, Var::Up}, s2);
    sd.tau = make_jet_tensor(n, {Var::Down, Var::Down}, s2);
    for (int p = 0; p < np; ++p) {
        auto [i, j] = pairs[static_cast<std::size_t>(p)];
        for (int k = 0; k < n; ++k) {
            sd.T.at({i, j, k}) = ls.solution[static_cast<std::size_t>(p * n + k)];
            sd.T.at({j, i, k}) = ls.solution[static_cast<std::size_t>(p * n + k)];
        }
        sd.tau.at({i, j}) = ls.solution[static_cast<std::size_t>(np * n + p)];
        sd.tau.at({j, i}) = ls.solution[static_cast<std::size_t>(np * n + p)];
    }
    sd.t = contract(sd.T, 0, 2);
    double nn = n;
    sd.tbar = (nn / ((nn - 1.0) * (nn + 2.0))) * sd.t;

    TensorJet tdown = lower_slot(sd.T, 2, m);
    TensorJet tg = outer(sd.tbar, m.g);                       // tbar_i g_jk
    TensorJet gt = outer(m.g, sd.tbar);                       // g_ij tbar_k
    sd.S = tdown - tg - permuted(tg, {1, 0, 2}) + (2.0 / nn) * gt;

    Cplx c0(0.0);
    if (!sys.tbar_expr.empty())
        c0 = parse_in_system(sys, sys.tbar_expr).eval(point, sys.default_params());
    sd.tbar_scalar = integrate_gradient(sd.tbar, c0);
    sd.sigma = exp(sd.tbar_scalar * Cplx(-1.0 / 3.0));

    sd.residual = ls.value_residual;
    sd.normalized_residual = ls.value_residual / (1.0 + scale);
    sd.condition = ls.condition;
    sd.rank = ls.rank;
    sd.unique = unique;
    return sd;
}

struct DerivedStructure {
    TensorJet Q;        // Q_ijk^m
    TensorJet q;        // q_j^m
    TensorJet Gamma;    // Gamma_ijk
    TensorJet gamma;    // gamma_j
    TensorJet Sigma;    // tracefree part of Gamma
    TensorJet gammabar; // scaled trace of Gamma
    Residual q_symmetry;
    Residual trace_exchange; // antisymmetrized part of (cov t + q)
};

inline DerivedStructure derived_structure(const StructureData& sd, const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    const int n = geo.dim();
    double nn = n;

    TensorJet covT = cov_derivative(sd.T, geo);
    const JetSpace& s1 = covT[0].space();
    TensorJet tt = contract(outer(sd.T, sd.T), 2, 3);
    TensorJet riem = raise_slot(geo.curvature().riemann_down, 3, m);
    TensorJet taud = outer(sd.tau, delta_tensor(n, s1));

    DerivedStructure ds;
    ds.Q = permuted(covT, {0, 1, 3, 2}) + tt - riem + taud;
    ds.q = trace_slots(ds.Q, 0, 2, m);
    ds.Gamma = cov_derivative(sd.tau, geo) + contract(outer(sd.T, sd.tau), 2, 3);
    ds.gamma = trace_slots(ds.Gamma, 0, 2, m);
    ds.gammabar = (nn / ((nn - 1.0) * (nn + 2.0))) * ds.gamma;
    TensorJet gg = outer(ds.gammabar, m.g);
    ds.Sigma = ds.Gamma - gg - permuted(gg, {1, 0, 2}) + (2.0 / nn) * outer(m.g, ds.gammabar);

    TensorJet qd = lower_slot(ds.q, 1, m);
    double qscale = max_abs(tensor_value(qd));
    ds.q_symmetry = make_residual(max_abs(antisymmetrize(tensor_value(qd), {0, 1})), qscale);

    TensorJet covt = cov_derivative(sd.t, geo);
    TensorValue ex = tensor_value(covt + qd);
    ds.trace_exchange = make_residual(max_abs(antisymmetrize(ex, {0, 1})),
                                      max_abs(tensor_value(covt)) + qscale);
    return ds;
}

// The five integrability conditions on the potential: vanishing of the
// antisymmetrized parts of the prolongation coefficient tensors.
struct PotentialIntegrability {
    Residual hessian_coupling;    // T with its trace completion
    Residual gradient_coupling;   // Q with its trace completion
    Residual zeroth_coupling;     // Gamma with its trace completion
    Residual laplacian_gradient;  // derivative exchange on q
    Residual laplacian_zeroth;    // derivative exchange on gamma
    double max_normalized() const {
        return std::max({hessian_coupling.normalized, gradient_coupling.normalized,
                         zeroth_coupling.normalized, laplacian_gradient.normalized,
                         laplacian_zeroth.normalized});
    }
};

inline PotentialIntegrability check_integrability_V(const StructureData& sd,
                                                    const DerivedStructure& ds,
                                                    const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    const int n = geo.dim();
    double nn = n;
    double c = 1.0 / (nn - 1.0);
    PotentialIntegrability out;

    {
        TensorValue td = tensor_value(all_down(sd.T, m));
        TensorValue gt = tensor_value(outer(m.g, sd.t));
        TensorValue x = td + c * gt;
        out.hessian_coupling = make_residual(max_abs(antisymmetrize(x, {1, 2})),
                                             max_abs(td) + max_abs(gt));
    }
    {
        TensorValue qd = tensor_value(lower_slot(ds.Q, 3, m));
        TensorValue gq = tensor_value(outer(m.g, lower_slot(ds.q, 1, m)));
        TensorValue x = qd + c * gq;
        out.gradient_coupling = make_residual(max_abs(antisymmetrize(x, {1, 2})),
                                              max_abs(qd) + max_abs(gq));
    }
    {
        TensorValue gd = tensor_value(ds.Gamma);
        TensorValue gg = tensor_value(outer(m.g, ds.gamma));
        TensorValue x = gd + c * gg;
        out.zeroth_coupling = make_residual(max_abs(antisymmetrize(x, {1, 2})),
                                            max_abs(gd) + max_abs(gg));
    }
    {
        // slots (k, n, l): derivative exchange for the Laplacian gradient
        TensorJet covq = cov_derivative(ds.q, geo);
        const JetSpace& s0 = covq[0].space();
        TensorJet qt = permuted(contract(outer(ds.q, sd.T), 1, 2), {0, 2, 1});
        TensorJet tq = permuted(outer(sd.t, ds.q), {0, 2, 1});
        TensorJet dg = outer(delta_tensor(geo.dim(), s0), ds.gamma);
        TensorValue x = tensor_value(covq + qt + c * tq + dg);
        out.laplacian_gradient =
            make_residual(max_abs(antisymmetrize(x, {0, 2})), max_abs(x));
    }
    {
        TensorJet covg = cov_derivative(ds.gamma, geo);
        TensorJet qtau = contract(outer(ds.q, sd.tau), 1, 2);
        TensorJet tg = outer(sd.t, ds.gamma);
        TensorValue x = tensor_value(covg + qtau + c * tg);
        out.laplacian_zeroth =
            make_residual(max_abs(antisymmetrize(x, {0, 1})), max_abs(x));
    }
    return out;
}

// Conditions on the structure tensors in the scale where the trace part of T
// vanishes.  The caller passes the system already rescaled to that gauge;
// rows that ship with a vanishing trace are in it natively.
struct StandardScaleReport {
    bool applicable = true;       // conformally flat within tolerance
    double weyl_norm = 0.0;
    double tbar_norm = 0.0;       // should vanish in this scale
    Residual hook_tracefree;      // hook-projected part of T
    Residual weyl_square;         // Riemann-type projection of S*S
    double weyl_square_vs_weyl = 0.0;
    Residual derivative_sym;      // projected covariant derivative of S
    Residual exchange_tracefree;  // antisymmetrized tracefree derivative of aleph
    Residual scalar_exchange;     // gradient identity with the eliminated scalar
    Residual schouten_exchange;   // antisymmetrized S-contraction with the Schouten coupling
    Residual divergence_closed;   // finite-difference curl of the Z-divergence
    double structure_residual = 0.0;
};

namespace detail {

// Z_ij = S_i^ab S_jab - (n-2)(P°_ij + aleph_ij), with aleph = tau in this scale.
struct StandardScaleData {
    StructureData sd;
    TensorJet aleph;
    TensorJet Z;
    TensorJet Ztf;
    Jet Ztrace;
};

inline StandardScaleData standard_scale_data(const SystemSpec& sys,
                                             const std::vector<Cplx>& point) {
    StandardScaleData d;
    d.sd = solve_structure_tensors(sys, point);
    Geometry geo = system_geometry(sys, point);
    const MetricOf<Jet>& m = geo.metric_jets();
    double nn = geo.dim();
    d.aleph = d.sd.tau;
    TensorJet ss = contract(contract(outer(raise_slot(raise_slot(d.sd.S, 1, m), 2, m), d.sd.S),
                                     1, 4),
                            1, 3); // S_i^ab S_jab
    TensorJet ptf = tracefree_pair(geo.curvature().schouten, m, 0, 1);
    d.Z = ss - (nn - 2.0) * (ptf + d.aleph);
    d.Ztf = tracefree_pair(d.Z, m, 0, 1);
    d.Ztrace = trace_slots(d.Z, 0, 1, m)[0];
    return d;
}

// divergence of the tracefree Z tensor, the one-form whose closedness
// replaces the eliminated scalar of the exchange identity
inline TensorValue z_divergence(const SystemSpec& sys, const std::vector<Cplx>& point) {
    StandardScaleData d = standard_scale_data(sys, point);
    Geometry geo = system_geometry(sys, point);
    return tensor_value(trace_slots(cov_derivative(d.Ztf, geo), 0, 2, geo.metric_jets()));
}

} // namespace detail

inline StandardScaleReport standard_scale_check(const SystemSpec& sys,
                                                const std::vector<Cplx>& point,
                                                double fd_step = 1e-2) {
    Geometry geo = system_geometry(sys, point);
    const MetricOf<Jet>& m = geo.metric_jets();
    const int n = geo.dim();
    double nn = n;

    detail::StandardScaleData d = detail::standard_scale_data(sys, point);
    const StructureData& sd = d.sd;

    StandardScaleReport rep;
    rep.structure_residual = sd.normalized_residual;
    rep.weyl_norm = max_abs(tensor_value(geo.curvature().weyl));
    rep.applicable = rep.weyl_norm < 1e-8 * (1.0 + max_abs(tensor_value(geo.curvature().riemann_down)));
    rep.tbar_norm = max_abs(tensor_value(sd.tbar));

    double sscale = max_abs(tensor_value(sd.S));

    {
        TensorValue td = tensor_value(all_down(sd.T, m));
        YoungSpec hook{{{1, 0}, {2}}, true, true};
        rep.hook_tracefree =
            make_residual(max_abs(young_project(td, hook, geo.metric_value())), max_abs(td));
    }
    {
        TensorValue s = tensor_value(sd.S);
        Metric mv = geo.metric_value();
        TensorValue c = permuted(contract(outer(raise_slot(s, 0, mv), s), 0, 3), {0, 2, 1, 3});
        YoungSpec riem{{{0, 2}, {1, 3}}, true, true};
        TensorValue proj = young_project(c, riem, mv);
        TensorValue w = tensor_value(geo.curvature().weyl);
        rep.weyl_square = make_residual(max_abs(proj), max_abs(c));
        rep.weyl_square_vs_weyl = max_abs(Cplx(-0.125) * proj - w);
    }
    {
        TensorJet covS = cov_derivative(sd.S, geo);
        TensorJet gz = permuted(outer(m.g, d.Ztf), {0, 2, 1, 3});
        TensorValue x = tensor_value(covS + (1.0 / (nn - 2.0)) * gz);
        YoungSpec hook4{{{2, 1, 0}, {3}}, true, false};
        rep.derivative_sym =
            make_residual(max_abs(young_project(x, hook4, geo.metric_value())), max_abs(x));
    }
    {
        TensorJet e = cov_derivative(d.aleph, geo) +
                      contract(outer(raise_slot(sd.S, 2, m), d.aleph), 2, 4);
        TensorValue ev = tensor_value(e);
        TensorValue etf = tracefree_part(ev, geo.metric_value(), {0, 1, 2});
        rep.exchange_tracefree =
            make_residual(max_abs(antisymmetrize(etf, {1, 2})), max_abs(ev));
    }
    {
        TensorJet gradZ = gradient(d.Ztrace, geo);
        TensorJet divZ = trace_slots(cov_derivative(d.Ztf, geo), 0, 2, m);
        TensorJet mix = (nn - 2.0) * d.aleph + d.Ztf;
        TensorJet contr = contract(
            contract(outer(raise_slot(raise_slot(sd.S, 1, m), 2, m), mix), 1, 3), 1, 2);
        TensorValue x = tensor_value(gradZ - ((nn - 2.0) / (2.0 * nn)) * divZ +
                                     (2.0 * nn / (nn - 2.0)) * contr);
        rep.scalar_exchange = make_residual(
            max_abs(x), max_abs(tensor_value(gradZ)) + max_abs(tensor_value(contr)));
    }
    {
        TensorJet sspair =
            contract(contract(outer(sd.S, raise_slot(raise_slot(sd.S, 1, m), 2, m)), 1, 4), 1, 3);
        TensorJet mk = sspair - (2.0 * (nn - 2.0) / (nn - 1.0)) * geo.curvature().schouten;
        TensorJet nt = contract(outer(raise_slot(sd.S, 2, m), mk), 2, 4);
        TensorValue x = antisymmetrize(tensor_value(nt), {1, 2});
        TensorValue xtf = tracefree_part(x, geo.metric_value(), {0, 1, 2});
        rep.schouten_exchange = make_residual(max_abs(xtf), max_abs(tensor_value(nt)));
    }
    {
        // closedness of the Z-divergence by a Richardson-extrapolated curl
        // across full re-evaluations at shifted points
        const double h = fd_step;
        std::vector<TensorValue> dF;
        double fscale = max_abs(detail::z_divergence(sys, point));
        for (int c = 0; c < n; ++c) {
            auto shift = [&](double dx) {
                std::vector<Cplx> p = point;
                p[static_cast<std::size_t>(c)] += dx;
                return detail::z_divergence(sys, p);
            };
            TensorValue d1 = (shift(h) - shift(-h)) * Cplx(1.0 / (2.0 * h));
            TensorValue d2 = (shift(h / 2) - shift(-h / 2)) * Cplx(1.0 / h);
            TensorValue rich = (4.0 / 3.0) * d2 - (1.0 / 3.0) * d1;
            dF.push_back(rich);
            fscale = std::max(fscale, max_abs(rich));
        }
        double curl = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
                curl = std::max(curl, std::abs(dF[static_cast<std::size_t>(a)][b] -
                                               dF[static_cast<std::size_t>(b)][a]));
        rep.divergence_closed = make_residual(curl, fscale);
    }
    (void)sscale;
    return rep;
}

} // namespace sv
