#pragma once
// Checks on conformal Killing tensors: the conformal Killing equation,
// compatibility with a potential, the first-order prolongation through the
// structure tensors, its integrability conditions, and helpers for passing
// to trace-corrected proper representatives.

#include <cmath>
#include <cstdint>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "supiverify/structure.hpp"

namespace sv {

namespace detail {

// T_k^{mn} - t^m delta_k^n, the trace-adjusted raised structure tensor that
// feeds the prolongation and the omega formulas; slots (k, m up, n up)
inline TensorJet trace_adjusted_T(const StructureData& sd, const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    TensorJet tup = raise_slot(sd.T, 1, m);
    const JetSpace& s = tup[0].space();
    TensorJet tdel = permuted(outer(raise_slot(sd.t, 0, m), delta_tensor(geo.dim(), s)),
                              {1, 0, 2});
    return tup - tdel;
}

} // namespace detail

// Omega_k^{ab} = young(ab)(T_k^{ab} - t^a g^b_k) / (3n); contracting with a
// Killing tensor gives the associated conformal factor one-form.
inline TensorJet omega_coupling(const StructureData& sd, const Geometry& geo) {
    double nn = geo.dim();
    return (1.0 / (3.0 * nn)) * symmetrize(detail::trace_adjusted_T(sd, geo), {1, 2});
}

namespace detail {

// T_j^m_i with the up index raised out of the symmetric pair and the free
// third index on the lowered original up slot; slots (i, j, m up)
inline TensorJet pair_coupled_T(const StructureData& sd, const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    return permuted(raise_slot(all_down(sd.T, m), 1, m), {2, 0, 1});
}

} // namespace detail

// P_ijk^{mn}: the prolongation coefficient expressing K_ij,k through K_mn.
inline TensorJet structure_prolongation(const StructureData& sd, const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    double nn = geo.dim();
    const JetSpace& s = sd.T[0].space();
    TensorJet a = permuted(outer(detail::pair_coupled_T(sd, geo), delta_tensor(geo.dim(), s)),
                           {0, 1, 3, 2, 4});
    YoungSpec hook{{{1, 0}, {2}}, false, false};
    TensorJet ya = young_project(a, hook, m);
    TensorJet b = outer(m.g, detail::trace_adjusted_T(sd, geo));
    TensorJet pre = ya + (2.0 / nn) * b;
    return (1.0 / 6.0) * symmetrize(pre, {3, 4});
}

struct ConformalKillingCheck {
    TensorJet omega;            // conformal factor one-form, trace route
    Residual killing_equation;  // symmetrized covariant derivative vs g omega
    Residual omega_structure;   // structure-tensor route vs the tracefree factor
    Residual omega_curl;        // antisymmetrized derivative of omega
};

inline ConformalKillingCheck check_conformal_killing(const TensorJet& K, const Geometry& geo,
                                                     const StructureData* sd = nullptr) {
    const MetricOf<Jet>& m = geo.metric_jets();
    double nn = geo.dim();

    TensorJet covK = cov_derivative(K, geo);
    Jet lam = trace_slots(K, 0, 1, m)[0];
    TensorJet div = trace_slots(covK, 0, 2, m);
    ConformalKillingCheck out;
    out.omega = (1.0 / (nn + 2.0)) * (gradient(lam, geo) + 2.0 * div);

    TensorValue x = tensor_value(covK - outer(m.g, out.omega));
    double scale = max_abs(tensor_value(covK)) + max_abs(tensor_value(out.omega));
    out.killing_equation = make_residual(max_abs(symmetrize(x, {0, 1, 2})), scale);

    TensorValue dw = antisymmetrize(tensor_value(cov_derivative(out.omega, geo)), {0, 1});
    out.omega_curl = make_residual(max_abs(dw), max_abs(tensor_value(out.omega)));

    if (sd) {
        // the coupling tensor only sees the tracefree part of K, whose
        // conformal factor differs by the trace gradient
        TensorJet om = omega_coupling(*sd, geo);
        TensorJet w2 = contract(contract(outer(om, K), 1, 3), 1, 2);
        TensorJet wtf = out.omega - (1.0 / nn) * gradient(lam, geo);
        out.omega_structure =
            make_residual(max_abs(tensor_value(w2 - wtf)),
                          max_abs(tensor_value(out.omega)) + max_abs(tensor_value(wtf)));
    }
    return out;
}

// Compatibility of a conformal Killing tensor with a potential: the exterior
// derivative of K(dV) + omega V must vanish.
inline Residual check_bertrand_darboux(const TensorJet& K, const TensorJet& omega,
                                       const Jet& V, const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    TensorJet kup = raise_slot(K, 1, m);
    TensorJet covKup = raise_slot(cov_derivative(K, geo), 1, m);
    TensorJet grad = gradient(V, geo);
    TensorJet hess = cov_derivative(grad, geo);

    TensorJet t1 = contract(outer(kup, hess), 1, 3);        // K_i^m V_,jm
    TensorJet t2 = contract(outer(covKup, grad), 1, 3);     // K_i^m_,j V_,m
    TensorJet t3 = outer(omega, grad);                      // omega_i V_,j
    TensorJet t4 = cov_derivative(omega, geo) * V;          // omega_i,j V
    TensorValue x = tensor_value(t1 + t2 + t3 + t4);
    double scale = max_abs(x);
    return make_residual(max_abs(antisymmetrize(x, {0, 1})), scale);
}

struct ProlongationCheck {
    Residual prolongation;        // tracefree part against P contraction
    Residual proper_consistency;  // raw tensor against the hook-projected coupling
    Residual proper_trace;        // trace derivative against the adjusted coupling
};

inline ProlongationCheck killing_prolongation(const TensorJet& K, const StructureData& sd,
                                              const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    ProlongationCheck out;

    TensorJet kt = tracefree_pair(K, m, 0, 1);
    TensorJet covKt = cov_derivative(kt, geo);
    TensorJet p = structure_prolongation(sd, geo);
    TensorJet pk = contract(contract(outer(p, kt), 3, 5), 3, 4);
    double scale = max_abs(tensor_value(covKt)) + max_abs(tensor_value(pk));
    out.prolongation = make_residual(max_abs(tensor_value(covKt - pk)), scale);

    // a proper Killing tensor keeps its trace part; its derivative couples
    // through the bare structure tensor
    TensorJet covK = cov_derivative(K, geo);
    YoungSpec hook{{{1, 0}, {2}}, false, false};
    TensorJet tk = contract(outer(detail::pair_coupled_T(sd, geo), K), 2, 3);
    TensorJet w = young_project(tk, hook, m);
    out.proper_consistency =
        make_residual(max_abs(tensor_value(covK - (1.0 / 3.0) * w)),
                      max_abs(tensor_value(covK)) + max_abs(tensor_value(w)));

    Jet lam = trace_slots(K, 0, 1, m)[0];
    TensorJet adj = detail::trace_adjusted_T(sd, geo);
    TensorJet y = contract(contract(outer(adj, K), 1, 3), 1, 2);
    out.proper_trace =
        make_residual(max_abs(tensor_value(gradient(lam, geo) + (2.0 / 3.0) * y)),
                      max_abs(tensor_value(gradient(lam, geo))) + max_abs(tensor_value(y)));
    return out;
}

struct KillingIntegrability {
    Residual prolongation_curvature;  // curvature-coupled integrability of P
    Residual curvature_reconstruction; // Riemann tensor rebuilt from P
    Residual structural_equation;      // curvature-free structural identity
};

inline KillingIntegrability check_killing_integrability(const StructureData& sd,
                                                        const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    double nn = geo.dim();
    KillingIntegrability out;

    TensorJet p = structure_prolongation(sd, geo);
    TensorJet covP = cov_derivative(p, geo); // (i,j,k,m^,n^,l)
    TensorJet pp6 = contract(contract(outer(p, p), 3, 5), 3, 4); // (i,j,k,l,m^,n^)
    TensorJet ppl = permuted(pp6, {0, 1, 2, 4, 5, 3});           // (i,j,k,m^,n^,l)
    TensorValue lhs44 = antisymmetrize(tensor_value(covP + ppl), {2, 5});

    {
        const JetSpace& s0 = jet_space(geo.dim(), 0);
        TensorJet rd = outer(geo.curvature().riemann, delta_tensor(geo.dim(), s0));
        TensorValue y = tensor_value(permuted(rd, {1, 4, 2, 0, 5, 3}));
        TensorValue rhs = 0.5 * symmetrize(symmetrize(y, {0, 1}), {3, 4});
        double scale = max_abs(tensor_value(covP + ppl)) + max_abs(rhs);
        out.prolongation_curvature = make_residual(max_abs(lhs44 - rhs), scale);
    }

    // shared contractions for the curvature reconstruction and the
    // curvature-free identity
    TensorJet a = contract(covP, 1, 4);                       // (i, j, l^, k)
    TensorJet b = permuted(contract(pp6, 1, 5), {0, 1, 3, 2}); // (i, j, l^, k)
    TensorJet x = a + b;
    TensorJet xa = x - permuted(x, {0, 3, 2, 1});

    {
        TensorValue recon =
            tensor_value(permuted((2.0 / (nn + 2.0)) * xa, {2, 0, 1, 3}));
        TensorValue riem = tensor_value(geo.curvature().riemann);
        double scale = max_abs(tensor_value(x)) + max_abs(riem);
        out.curvature_reconstruction = make_residual(max_abs(recon - riem), scale);
    }

    {
        const JetSpace& s0 = jet_space(geo.dim(), 0);
        TensorJet xd = outer(xa, delta_tensor(geo.dim(), s0));
        TensorValue lhs = tensor_value(permuted(xd, {0, 4, 1, 3, 2, 5}));
        lhs = symmetrize(symmetrize(lhs, {0, 1}), {4, 5});
        TensorValue rhs = (nn + 2.0) * permuted(lhs44, {0, 1, 2, 5, 3, 4});
        double scale = max_abs(lhs) + max_abs(rhs);
        out.structural_equation = make_residual(max_abs(lhs - rhs), scale);
    }
    return out;
}

struct TauReconstruction {
    TensorJet tau;            // rebuilt from the structure tensor alone
    Residual tau_match;       // against the tau recovered from the potentials
    double group_difference;  // the two displayed four-term groups
    Residual mixed_symmetry;  // antisymmetrized/symmetrized closure identity
};

// In an abundant system tau is determined by T; rebuild it and compare.
inline TauReconstruction tau_from_structure(const StructureData& sd, const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    double nn = geo.dim();

    TensorJet om = omega_coupling(sd, geo);
    TensorJet p = structure_prolongation(sd, geo);
    TensorJet a = cov_derivative(om, geo); // (k, a^, b^, d)

    TensorJet e1 = permuted(contract(a, 0, 1), {1, 0});  // Omega^k_k{}^m_,i at (i, m^)
    TensorJet e2 = contract(a, 2, 3);                    // Omega_i^{mj}_,j at (i, m^)

    auto couple = [&](const TensorJet& pc) {
        // Omega_i^{ab} pc_{ab}{}^{m}
        return contract(contract(outer(om, pc), 1, 3), 1, 2);
    };
    TensorJet p6 = couple(contract(p, 2, 4)); // Omega_i^{ab} P_{abj}^{mj}
    TensorJet p7 = couple(contract(p, 2, 3)); // Omega_i^{ab} P_{abj}^{jm}

    TensorJet w8 = outer(om, p);
    TensorJet p8 = contract(contract(contract(w8, 0, 7), 0, 2), 0, 1); // up slot n
    TensorJet w9 = outer(om, p);
    TensorJet p9 = contract(contract(contract(w9, 0, 6), 0, 2), 0, 1); // up slot m

    TensorJet group1 = e1 - e2 - p6 + p8;
    TensorJet group2 = e1 - e2 - p7 + p9;
    TauReconstruction out;
    out.group_difference = max_abs(tensor_value(group1 - group2));
    out.tau = lower_slot((-1.0 / nn) * (group1 + group2), 1, m);
    out.tau_match = make_residual(max_abs(tensor_value(out.tau - sd.tau)),
                                  max_abs(tensor_value(out.tau)) +
                                      max_abs(tensor_value(sd.tau)));

    {
        // young(i,j) young(mn) (Omega_i^{mn}_,j + Omega_i^{ab} P_{abj}^{mn}
        //                        - tau_i^m g^n_j) = 0
        const JetSpace& s0 = jet_space(geo.dim(), 0);
        TensorJet f1 = permuted(a, {0, 3, 1, 2});
        TensorJet f2 = contract(contract(outer(om, p), 1, 3), 1, 2);
        TensorJet f3 = permuted(outer(raise_slot(sd.tau, 1, m), delta_tensor(geo.dim(), s0)),
                                {0, 2, 1, 3});
        TensorValue xv = tensor_value(f1 + f2 - f3);
        TensorValue proj = symmetrize(antisymmetrize(xv, {0, 1}), {2, 3});
        out.mixed_symmetry = make_residual(max_abs(proj), max_abs(xv));
    }
    return out;
}

// the antisymmetrized derivative of omega couples to tau
inline Residual check_omega_curl_coupling(const TensorJet& K, const TensorJet& omega,
                                          const StructureData& sd, const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    TensorValue lhs = antisymmetrize(tensor_value(cov_derivative(omega, geo)), {0, 1});
    TensorJet kt = contract(outer(raise_slot(K, 1, m), sd.tau), 1, 3); // K_j^m tau_im
    TensorValue rhs = antisymmetrize(tensor_value(permuted(kt, {1, 0})), {0, 1});
    return make_residual(max_abs(lhs - rhs), max_abs(lhs) + max_abs(rhs) +
                                                 max_abs(tensor_value(omega)));
}

struct AbundanceReport {
    int count = 0;                      // dimension of the sampled span
    bool linearly_independent = false;  // spans the full symmetric space
    bool conformally_independent = false;
    bool indeterminate = false;
};

inline AbundanceReport check_abundance(const SystemSpec& sys, int points = -1,
                                       std::uint64_t seed = 42) {
    const int n = sys.dim;
    const int full = n * (n + 1) / 2;
    if (points <= 0) points = 3 * full;
    auto pts = sample_points(sys, points, seed);
    const std::size_t nk = sys.killing.size();

    auto rank_of = [&](bool tracefree_with_metric) {
        std::size_t cols = nk + (tracefree_with_metric ? 1 : 0);
        if (cols == 0) return std::pair<int, bool>{0, false};
        Eigen::MatrixXcd mat(static_cast<long>(pts.size()) * n * n, static_cast<long>(cols));
        long row0 = 0;
        for (const auto& pt : pts) {
            Geometry geo = system_geometry(sys, pt);
            const MetricOf<Jet>& mj = geo.metric_jets();
            for (std::size_t c = 0; c < nk; ++c) {
                TensorJet k = killing_jets(sys, c, pt, 0);
                TensorValue kv = tensor_value(tracefree_with_metric
                                                  ? tracefree_pair(k, mj, 0, 1)
                                                  : k);
                for (int f = 0; f < n * n; ++f)
                    mat(row0 + f, static_cast<long>(c)) = kv[static_cast<std::size_t>(f)];
            }
            if (tracefree_with_metric) {
                TensorValue gv = tensor_value(mj.g);
                for (int f = 0; f < n * n; ++f)
                    mat(row0 + f, static_cast<long>(nk)) = gv[static_cast<std::size_t>(f)];
            }
            row0 += n * n;
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(mat);
        const auto& sv = svd.singularValues();
        double smax = sv.size() ? sv(0) : 0.0;
        int rank = 0;
        bool borderline = false;
        for (long k = 0; k < sv.size(); ++k) {
            double rel = smax > 0.0 ? sv(k) / smax : 0.0;
            if (rel > 1e-8) ++rank;
            if (rel > 1e-9 && rel < 1e-7) borderline = true;
        }
        return std::pair<int, bool>{rank, borderline};
    };

    AbundanceReport rep;
    auto [count, border1] = rank_of(false);
    rep.count = count;
    rep.linearly_independent = (count == full);
    auto [ctf, border2] = rank_of(true);
    rep.conformally_independent = (ctf == full);
    rep.indeterminate = border1 || border2;
    return rep;
}

// ---------------------------------------------------------------------------
// Properization: quadrature of the conformal factor one-form along
// axis-parallel paths, with a second path as a closedness control.

namespace detail {

inline void gauss_legendre_32(std::vector<double>& xs, std::vector<double>& ws);

// integral of f over the straight segment from a to b in coordinate c
template <class F>
Cplx segment_integral(F&& f, const std::vector<Cplx>& a, double from, double to, int c) {
    static std::vector<double> xs, ws;
    if (xs.empty()) gauss_legendre_32(xs, ws);
    Cplx acc(0.0);
    double mid = 0.5 * (from + to), half = 0.5 * (to - from);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        std::vector<Cplx> p = a;
        p[static_cast<std::size_t>(c)] = Cplx(mid + half * xs[k], 0.0);
        acc += ws[k] * f(p, c);
    }
    return acc * half;
}

inline void gauss_legendre_32(std::vector<double>& xs, std::vector<double>& ws) {
    // nodes/weights by Newton iteration on Legendre P_32
    const int n = 32;
    xs.assign(n, 0.0);
    ws.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        xs[static_cast<std::size_t>(i)] = x;
        ws[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

} // namespace detail

struct ProperizeResult {
    Cplx trace_correction;          // f with K_proper = K + g f / n
    double path_difference = 0.0;   // two-path disagreement of the quadrature
    TensorValue K_proper;           // corrected tensor at the target point
    double killing_residual = 0.0;  // symmetrized derivative of the corrected tensor
    double omega_curl = 0.0;        // closedness of omega at the target
};

// Integrates f = -n * integral(omega) from base to target along axis-parallel
// segments; omega is recomputed from the Killing data at each quadrature node.
inline ProperizeResult properize(const SystemSpec& sys, std::size_t which,
                                 const std::vector<Cplx>& base,
                                 const std::vector<Cplx>& target) {
    const int n = sys.dim;
    auto omega_component = [&](const std::vector<Cplx>& pt, int c) {
        Geometry geo = system_geometry(sys, pt);
        TensorJet k = killing_jets(sys, which, pt, 2);
        auto ck = check_conformal_killing(k, geo);
        return tensor_value(ck.omega)[static_cast<std::size_t>(c)];
    };

    auto integrate_path = [&](const std::vector<int>& order) {
        Cplx acc(0.0);
        std::vector<Cplx> cur = base;
        for (int c : order) {
            acc += detail::segment_integral(omega_component, cur, cur[static_cast<std::size_t>(c)].real(),
                                            target[static_cast<std::size_t>(c)].real(), c);
            cur[static_cast<std::size_t>(c)] = target[static_cast<std::size_t>(c)];
        }
        return acc;
    };

    std::vector<int> fwd(static_cast<std::size_t>(n));
    std::iota(fwd.begin(), fwd.end(), 0);
    std::vector<int> rev(fwd.rbegin(), fwd.rend());
    Cplx ia = integrate_path(fwd);
    Cplx ib = integrate_path(rev);

    ProperizeResult out;
    out.trace_correction = -double(n) * ia;
    out.path_difference = std::abs(ia - ib);

    Geometry geo = system_geometry(sys, target);
    const MetricOf<Jet>& m = geo.metric_jets();
    TensorJet k = killing_jets(sys, which, target, 2);
    auto ck = check_conformal_killing(k, geo);
    out.omega_curl = ck.omega_curl.normalized;

    TensorValue kv = tensor_value(k);
    TensorValue gv = tensor_value(m.g);
    out.K_proper = kv + gv * (out.trace_correction / double(n));
    TensorValue dk = tensor_value(cov_derivative(k, geo) - outer(m.g, ck.omega));
    out.killing_residual =
        max_abs(symmetrize(dk, {0, 1, 2})) / (1.0 + max_abs(kv));
    return out;
}

struct PotentialReconstruction {
    Cplx w_value;                  // scalar part of the integral, zero at base
    double path_difference = 0.0;  // two-path disagreement of the quadrature
    double closedness = 0.0;       // curl of the integrand one-form at the target
};

// Rebuilds the scalar part of the quadratic first integral by integrating
// -(K_i^a V_,a + omega_i V) along axis-parallel paths; the form is closed
// exactly when the potential compatibility condition holds.
inline PotentialReconstruction reconstruct_killing_potential(const SystemSpec& sys,
                                                             std::size_t which,
                                                             const std::vector<Cplx>& base,
                                                             const std::vector<Cplx>& target) {
    const int n = sys.dim;
    auto form_jets = [&](const std::vector<Cplx>& pt) {
        Geometry geo = system_geometry(sys, pt);
        const MetricOf<Jet>& m = geo.metric_jets();
        TensorJet k = killing_jets(sys, which, pt, 2);
        auto ck = check_conformal_killing(k, geo);
        Jet v = combined_potential_jet(sys, pt, 2);
        TensorJet f = contract(outer(raise_slot(k, 1, m), gradient(v, geo)), 1, 2) +
                      ck.omega * v;
        return std::pair<TensorJet, Geometry>{-1.0 * f, std::move(geo)};
    };
    auto component = [&](const std::vector<Cplx>& pt, int c) {
        return tensor_value(form_jets(pt).first)[static_cast<std::size_t>(c)];
    };

    auto integrate_path = [&](const std::vector<int>& order) {
        Cplx acc(0.0);
        std::vector<Cplx> cur = base;
        for (int c : order) {
            acc += detail::segment_integral(component, cur,
                                            cur[static_cast<std::size_t>(c)].real(),
                                            target[static_cast<std::size_t>(c)].real(), c);
            cur[static_cast<std::size_t>(c)] = target[static_cast<std::size_t>(c)];
        }
        return acc;
    };

    std::vector<int> fwd(static_cast<std::size_t>(n));
    std::iota(fwd.begin(), fwd.end(), 0);
    std::vector<int> rev(fwd.rbegin(), fwd.rend());
    Cplx ia = integrate_path(fwd);
    Cplx ib = integrate_path(rev);

    PotentialReconstruction out;
    out.w_value = ia;
    out.path_difference = std::abs(ia - ib);
    auto [f, geo] = form_jets(target);
    TensorValue df = antisymmetrize(tensor_value(cov_derivative(f, geo)), {0, 1});
    out.closedness = max_abs(df) / (1.0 + max_abs(tensor_value(f)));
    return out;
}

} // namespace sv
