#pragma once
// Conformal rescalings of a system: rebuilding the catalog entry under a
// scale change, the transformation laws of the structure tensors, the
// closed nonlinear prolongation of the trace and cubic parts, algebraic
// constraints, the stress-energy form of the trimmed field equations,
// constant curvature eigenfunctions, flattenability, scale selection and
// the scalar structure function machinery.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "supiverify/killing.hpp"

namespace sv {

// A scale change g -> Omega^2 g given by an expression in the system
// coordinates, nonvanishing on the sampling box.
struct ConformalRescaling {
    std::string omega;
};

namespace detail {

inline std::string paren(const std::string& s) { return "(" + s + ")"; }

// S_i^{ab} S_{jab}, symmetric in (i, j), all slots down
inline TensorJet cubic_square(const TensorJet& S, const MetricOf<Jet>& m) {
    TensorJet su = raise_slot(raise_slot(S, 1, m), 2, m);
    return contract(contract(outer(su, S), 2, 5), 1, 3);
}

} // namespace detail

inline Jet conformal_factor_jet(const SystemSpec& sys, const ConformalRescaling& r,
                                const std::vector<Cplx>& point, int order = 4) {
    if (r.omega.empty())
        throw error("conformal factor expression is empty");
    Jet w = parse_in_system(sys, r.omega).eval_jet(point, sys.default_params(), order);
    if (std::abs(w.value()) < 1e-8)
        throw error("conformal factor vanishes at the evaluation point");
    return w;
}

// Rewrites a catalog entry in the rescaled metric.  Metric entries pick up
// Omega^2, potentials Omega^-2, Killing tensors (lower slots) Omega^4, the
// scalar structure function Omega^2 and the trace scalar drops 3 ln Omega.
// The curvature class of the result is probed numerically at the box
// midpoint; declared flat partners are dropped since they refer to the
// original metric.
inline SystemSpec apply_conformal_transform(const SystemSpec& sys, const ConformalRescaling& r,
                                            const std::string& name = "") {
    if (r.omega.empty())
        throw error("conformal factor expression is empty");
    SystemSpec out = sys;
    out.name = name.empty() ? sys.name + "[" + r.omega + "]" : name;
    out.partners.clear();
    const std::string o2 = detail::paren(r.omega) + "^2";
    const std::string o4 = detail::paren(r.omega) + "^4";
    for (auto& row : out.metric)
        for (auto& e : row)
            if (e != "0" && !e.empty())
                e = o2 + "*" + detail::paren(e);
    for (auto& p : out.potentials)
        p = detail::paren(p) + "/" + detail::paren(o2);
    for (auto& k : out.killing)
        for (auto& row : k)
            for (auto& e : row)
                if (e != "0" && !e.empty())
                    e = o4 + "*" + detail::paren(e);
    if (!out.b_expr.empty() && out.b_expr != "0")
        out.b_expr = o2 + "*" + detail::paren(out.b_expr);
    if (!out.tbar_expr.empty())
        out.tbar_expr = detail::paren(out.tbar_expr) + "-3*ln" + detail::paren(r.omega);
    if (r.omega == "1") {
        out.curvature_class = sys.curvature_class;
    } else {
        std::vector<Cplx> mid = box_midpoint(out);
        Geometry geo = system_geometry(out, mid);
        double gs = max_abs(tensor_value(geo.metric_jets().g));
        double riem = max_abs(tensor_value(geo.curvature().riemann_down));
        out.curvature_class = riem < 1e-8 * (1.0 + gs) ? "flat" : "other";
    }
    validate_system(out);
    return out;
}

// Residuals of the transformation laws of the structure tensors, comparing
// a direct solve on the rescaled system against the values predicted from
// the original solve, componentwise in the shared chart.
struct StructureTransformCheck {
    Residual pair_rule;      // T_ij^k shift by derivatives of ln Omega
    Residual tracefree_rule; // tau shift through the Hessian of ln Omega
    Residual trace_rule;     // trace one-form shift
    Residual cubic_rule;     // S (all slots down) scales by Omega^2
    Residual scale_function; // sigma ratio reduces to a constant
    Residual round_trip;     // transforming back recovers the original data
};

inline StructureTransformCheck check_structure_transform_rules(const SystemSpec& sys,
                                                               const ConformalRescaling& r,
                                                               const std::vector<Cplx>& point) {
    Geometry geo = system_geometry(sys, point);
    const MetricOf<Jet>& m = geo.metric_jets();
    const double nn = geo.dim();
    StructureData sd = solve_structure_tensors(sys, point);

    SystemSpec hsys = apply_conformal_transform(sys, r);
    StructureData hd = solve_structure_tensors(hsys, point);

    Jet w = conformal_factor_jet(sys, r, point);
    Jet ups = log(w);
    TensorJet du = gradient(ups, geo);
    TensorJet hess = cov_derivative(du, geo);
    const JetSpace& s = du[0].space();

    StructureTransformCheck out;
    {
        TensorJet dd = outer(du, delta_tensor(geo.dim(), s));
        TensorJet shift = dd + permuted(dd, {1, 0, 2}) -
                          (2.0 / nn) * outer(m.g, raise_slot(du, 0, m));
        TensorJet pred = sd.T - 3.0 * shift;
        out.pair_rule = make_residual(max_abs(tensor_value(hd.T - pred)),
                                      max_abs(tensor_value(hd.T)));
    }
    {
        TensorJet pred = sd.tau + 2.0 * contract(outer(sd.T, du), 2, 3) -
                         2.0 * tracefree_pair(hess + 2.0 * outer(du, du), m, 0, 1);
        out.tracefree_rule = make_residual(max_abs(tensor_value(hd.tau - pred)),
                                           max_abs(tensor_value(hd.tau)) +
                                               max_abs(tensor_value(pred)));
    }
    {
        TensorJet pred = sd.t - (3.0 * (nn - 1.0) * (nn + 2.0) / nn) * du;
        out.trace_rule = make_residual(max_abs(tensor_value(hd.t - pred)),
                                       max_abs(tensor_value(hd.t)));
    }
    {
        TensorJet pred = (w * w) * sd.S;
        out.cubic_rule = make_residual(max_abs(tensor_value(hd.S - pred)),
                                       max_abs(tensor_value(hd.S)));
    }
    {
        Jet ratio = hd.sigma / (sd.sigma * w);
        Jet dev = ratio - Jet::constant(ratio.space(), ratio.value());
        out.scale_function = make_residual(dev.max_abs(), std::abs(ratio.value()));
    }
    {
        ConformalRescaling back{"1/" + detail::paren(r.omega)};
        SystemSpec rt = apply_conformal_transform(hsys, back);
        StructureData rd = solve_structure_tensors(rt, point);
        double raw = std::max(max_abs(tensor_value(rd.T - sd.T)),
                              max_abs(tensor_value(rd.tau - sd.tau)));
        out.round_trip = make_residual(raw, max_abs(tensor_value(sd.T)) +
                                                max_abs(tensor_value(sd.tau)));
    }
    return out;
}

// The closed first-order system satisfied by the trace one-form and the
// cubic part once the linear structure equations hold, plus the companion
// laws for the conformal Laplacian and the tracefree Hessian of sigma.
struct NonlinearProlongation {
    Residual trace_gradient;    // covariant derivative of the trace one-form
    Residual trace_divergence;  // its divergence against curvature and |S|^2
    Residual cubic_derivative;  // covariant derivative of S
    Residual cubic_divergence;  // divergence of S implied by the above
    Residual laplace_companion; // conformal Laplacian on a power of sigma
    Residual hessian_companion; // tracefree Hessian of sigma
    double weyl_derivative_gap = 0.0; // quadratic form of the corrected derivative
};

inline NonlinearProlongation check_nonlinear_prolongation(const SystemSpec& sys,
                                                          const std::vector<Cplx>& point) {
    Geometry geo = system_geometry(sys, point);
    const MetricOf<Jet>& m = geo.metric_jets();
    const double nn = geo.dim();
    StructureData sd = solve_structure_tensors(sys, point);
    const CurvatureData& curv = geo.curvature();

    TensorJet covtb = cov_derivative(sd.tbar, geo);
    Jet divtb = trace_slots(covtb, 0, 1, m)[0];
    TensorJet ss = detail::cubic_square(sd.S, m);
    Jet s2 = trace_slots(ss, 0, 1, m)[0];
    Jet tb2 = trace_slots(outer(sd.tbar, sd.tbar), 0, 1, m)[0];

    NonlinearProlongation out;
    {
        TensorJet rhs = tracefree_pair((3.0 / (nn - 2.0)) * curv.ricci +
                                           (1.0 / (3.0 * (nn - 2.0))) * ss +
                                           (1.0 / 3.0) * outer(sd.tbar, sd.tbar),
                                       m, 0, 1) +
                        (1.0 / nn) * (divtb * m.g);
        out.trace_gradient = make_residual(max_abs(tensor_value(covtb - rhs)),
                                           max_abs(tensor_value(covtb)) +
                                               max_abs(tensor_value(rhs)));
    }
    {
        Jet rhs = (3.0 / (2.0 * (nn - 1.0))) * curv.scalar +
                  ((3.0 * nn + 2.0) / (6.0 * (nn - 1.0) * (nn + 2.0))) * s2 -
                  ((nn - 2.0) / 6.0) * tb2;
        out.trace_divergence = make_residual(std::abs((divtb - rhs).value()),
                                             std::abs(divtb.value()) + std::abs(rhs.value()));
    }

    TensorJet covS = cov_derivative(sd.S, geo);
    TensorJet c1 = permuted(contract(outer(raise_slot(sd.S, 2, m), sd.S), 2, 5),
                            {0, 2, 3, 1}); // S_il^a S_jka on slots (i,j,k,l)
    TensorJet stb = outer(sd.S, sd.tbar);
    TensorJet ntb = trace_slots(stb, 2, 3, m); // S_ija tbar^a
    YoungSpec sym3tf{{{0, 1, 2}}, false, true};
    {
        TensorJet combo = c1 + 3.0 * permuted(stb, {0, 1, 3, 2}) + stb +
                          permuted(outer((4.0 / (nn - 2.0)) * ss - 3.0 * ntb, m.g),
                                   {2, 0, 1, 3});
        TensorJet rhs = (1.0 / 18.0) * young_project(combo, sym3tf, m);
        out.cubic_derivative = make_residual(max_abs(tensor_value(covS - rhs)),
                                             max_abs(tensor_value(covS)) +
                                                 max_abs(tensor_value(rhs)));
    }
    {
        TensorJet div = trace_slots(covS, 2, 3, m);
        TensorJet rhs = (2.0 * nn / (3.0 * (nn - 2.0))) * ss - (nn / 3.0) * ntb -
                        (2.0 / (3.0 * (nn - 2.0))) * (s2 * m.g);
        out.cubic_divergence = make_residual(max_abs(tensor_value(div - rhs)),
                                             max_abs(tensor_value(div)) +
                                                 max_abs(tensor_value(rhs)));
    }
    {
        Jet sp = pow(sd.sigma, 1.0 - nn / 2.0);
        Jet lhs = conformal_laplacian(sp, geo);
        Jet rhs = (-(3.0 * nn + 2.0) / (9.0 * (nn + 2.0))) * s2 * sp;
        out.laplace_companion = make_residual(std::abs((lhs - rhs).value()),
                                              std::abs(lhs.value()) + std::abs(rhs.value()));
    }
    {
        TensorJet lhs = tracefree_hessian(sd.sigma, geo);
        TensorJet rhs = (-1.0 / (9.0 * (nn - 2.0))) * tracefree_pair(ss, m, 0, 1) * sd.sigma;
        out.hessian_companion = make_residual(max_abs(tensor_value(lhs - rhs)),
                                              max_abs(tensor_value(lhs)) +
                                                  max_abs(tensor_value(rhs)));
    }
    {
        TensorJet lhs = weyl_connection_derivative(sd.S, sd.tbar, geo);
        TensorJet rhs = (1.0 / 3.0) *
                        young_project(c1 - (4.0 / (nn - 2.0)) * outer(ss, m.g), sym3tf, m);
        out.weyl_derivative_gap = max_abs(tensor_value(lhs - rhs)) /
                                  (1.0 + max_abs(tensor_value(lhs)));
    }
    return out;
}

// Purely algebraic constraints on the cubic part alone; they hold
// identically in dimension three and cut out a proper subvariety above it.
struct AlgebraicConditions {
    Residual square_window; // Riemann-type projection of S_ij^a S_kla
    Residual cubic_window;  // antisymmetrized tracefree cube of S
};

inline AlgebraicConditions check_algebraic_conditions(const TensorValue& S, const Metric& mv) {
    AlgebraicConditions out;
    {
        TensorValue sq = contract(outer(raise_slot(S, 2, mv), S), 2, 5); // S_ij^a S_kla
        YoungSpec window{{{0, 2}, {1, 3}}, true, true};
        out.square_window =
            make_residual(max_abs(young_project(sq, window, mv)), max_abs(sq));
    }
    {
        TensorValue g2 = contract(
            contract(outer(raise_slot(raise_slot(S, 1, mv), 2, mv), S), 2, 5), 1, 3);
        TensorValue x = contract(outer(raise_slot(g2, 1, mv), S), 1, 4); // G_i^a S_jka
        TensorValue xtf = tracefree_part(x, mv, {0, 1, 2});
        out.cubic_window =
            make_residual(max_abs(antisymmetrize(xtf, {0, 1})), max_abs(x));
    }
    return out;
}

inline AlgebraicConditions check_algebraic_conditions(const SystemSpec& sys,
                                                      const std::vector<Cplx>& point) {
    Geometry geo = system_geometry(sys, point);
    StructureData sd = solve_structure_tensors(sys, point);
    return check_algebraic_conditions(tensor_value(sd.S), geo.metric_value());
}

// The conformally invariant stress-energy form of the quadratic S terms.
inline TensorJet stress_energy_tensor(const StructureData& sd, const Geometry& geo) {
    const MetricOf<Jet>& m = geo.metric_jets();
    const double nn = geo.dim();
    TensorJet ss = detail::cubic_square(sd.S, m);
    Jet s2 = trace_slots(ss, 0, 1, m)[0];
    return (-1.0 / 9.0) * (ss - ((3.0 * nn - 2.0) / (2.0 * (nn + 2.0))) * (s2 * m.g));
}

// Residuals of the trimmed field equations: the Einstein tensor equals the
// stress-energy form up to trace-scalar corrections, in two equivalent
// shapes, with the Schouten expressions specialising in the scale where
// the trace part vanishes and the rho form in a flat scale.
struct StressEnergyCheck {
    Residual divergence_free;     // divergence of the stress-energy form (standard scale)
    Residual einstein_trace_form; // Einstein tensor vs the trace-corrected form
    Residual einstein_sigma_form; // the same through derivatives of sigma
    Residual schouten_tracefree;  // tracefree Schouten vs the S square
    Residual schouten_trace;      // Schouten trace vs |S|^2
    Residual trace_differential;  // derivative of the Schouten trace
    Residual flat_form;           // expression through the flat-scale scalar
    bool standard_scale = false;
    bool flat_scale = false;
};

inline StressEnergyCheck stress_energy_and_einstein(const SystemSpec& sys,
                                                    const std::vector<Cplx>& point) {
    Geometry geo = system_geometry(sys, point);
    const MetricOf<Jet>& m = geo.metric_jets();
    const double nn = geo.dim();
    StructureData sd = solve_structure_tensors(sys, point);
    const CurvatureData& curv = geo.curvature();

    TensorJet ss = detail::cubic_square(sd.S, m);
    Jet s2 = trace_slots(ss, 0, 1, m)[0];
    TensorJet tt = stress_energy_tensor(sd, geo);
    TensorJet covtb = cov_derivative(sd.tbar, geo);
    Jet divtb = trace_slots(covtb, 0, 1, m)[0];
    Jet tb2 = trace_slots(outer(sd.tbar, sd.tbar), 0, 1, m)[0];

    StressEnergyCheck out;
    {
        TensorJet rhs = tt + ((nn - 2.0) / 3.0) * (covtb - divtb * m.g) -
                        ((nn - 2.0) / 9.0) * (outer(sd.tbar, sd.tbar) +
                                              ((nn - 3.0) / 2.0) * (tb2 * m.g));
        out.einstein_trace_form =
            make_residual(max_abs(tensor_value(curv.einstein - rhs)),
                          max_abs(tensor_value(curv.einstein)) + max_abs(tensor_value(rhs)));
    }
    {
        Jet invs = pow(sd.sigma, -1.0);
        Jet sh = pow(sd.sigma, (nn - 2.0) / 2.0);
        Jet invsh = pow(sd.sigma, -(nn - 2.0) / 2.0);
        TensorJet hs = tracefree_pair(hessian(sd.sigma, geo), m, 0, 1);
        TensorJet rhs = tt - (nn - 2.0) * (invs * hs) -
                        (2.0 * (nn - 1.0) / nn) * ((laplacian(invsh, geo) * sh) * m.g);
        out.einstein_sigma_form =
            make_residual(max_abs(tensor_value(curv.einstein - rhs)),
                          max_abs(tensor_value(curv.einstein)) + max_abs(tensor_value(rhs)));
    }

    out.standard_scale = max_abs(tensor_value(sd.tbar)) < 1e-6;
    if (out.standard_scale) {
        TensorJet cov = cov_derivative(tt, geo);
        out.divergence_free = make_residual(max_abs(tensor_value(trace_slots(cov, 0, 2, m))),
                                            max_abs(tensor_value(cov)));
        TensorJet ptf = tracefree_pair(curv.schouten, m, 0, 1);
        TensorJet rhs = (-1.0 / (9.0 * (nn - 2.0))) * tracefree_pair(ss, m, 0, 1);
        out.schouten_tracefree =
            make_residual(max_abs(tensor_value(ptf - rhs)),
                          max_abs(tensor_value(ptf)) + max_abs(tensor_value(rhs)));
        Jet pt = trace_slots(curv.schouten, 0, 1, m)[0];
        Jet rt = (-(3.0 * nn + 2.0) / (18.0 * (nn - 1.0) * (nn + 2.0))) * s2;
        out.schouten_trace = make_residual(std::abs((pt - rt).value()),
                                           std::abs(pt.value()) + std::abs(rt.value()));
        TensorJet dpt = gradient(pt, geo);
        TensorJet w2 = tracefree_pair(ss, m, 0, 1);
        TensorJet rhsd = (-(3.0 * nn + 2.0) / (27.0 * (nn - 2.0) * (nn - 1.0))) *
                         contract(contract(outer(raise_slot(raise_slot(sd.S, 1, m), 2, m), w2),
                                           2, 4),
                                  1, 2);
        out.trace_differential = make_residual(max_abs(tensor_value(dpt - rhsd)),
                                               max_abs(tensor_value(dpt)) +
                                                   max_abs(tensor_value(rhsd)));
    }

    double gs = max_abs(tensor_value(m.g));
    out.flat_scale = max_abs(tensor_value(curv.riemann_down)) < 1e-8 * (1.0 + gs);
    if (out.flat_scale) {
        TensorJet rr = covtb - (1.0 / 3.0) * outer(sd.tbar, sd.tbar);
        TensorJet rhs = (-(nn - 2.0) / 3.0) *
                        (tracefree_pair(rr, m, 0, 1) -
                         ((nn - 1.0) / nn) *
                             ((divtb + ((nn - 2.0) / 6.0) * tb2) * m.g));
        out.flat_form = make_residual(max_abs(tensor_value(tt - rhs)),
                                      max_abs(tensor_value(tt)) + max_abs(tensor_value(rhs)));
    }
    return out;
}

// On a constant curvature background the square identity pins |S|^2 against
// the trace one-form, and sigma^(n+2) is a Laplace eigenfunction whose
// eigenvalue matches a polynomial degree; in the flat case it is harmonic.
struct EigenvalueCheck {
    Residual square_identity; // |S|^2 - (n-1)(n+2)|tbar|^2 against 9R
    Residual eigenvalue;      // Laplace eigenvalue of sigma^(n+2)
    int level = 0;            // nonnegative root of mu(mu+n-1) = 2(n+1)R/(n-1)
    double scalar_curvature = 0.0;
};

inline EigenvalueCheck sphere_eigenvalue_check(const SystemSpec& sys,
                                               const std::vector<Cplx>& point) {
    Geometry geo = system_geometry(sys, point);
    const MetricOf<Jet>& m = geo.metric_jets();
    const double nn = geo.dim();
    StructureData sd = solve_structure_tensors(sys, point);

    TensorJet ss = detail::cubic_square(sd.S, m);
    Jet s2 = trace_slots(ss, 0, 1, m)[0];
    Jet tb2 = trace_slots(outer(sd.tbar, sd.tbar), 0, 1, m)[0];
    Jet R = geo.curvature().scalar;

    EigenvalueCheck out;
    out.scalar_curvature = std::real(R.value());
    {
        Jet lhs = s2 - (nn - 1.0) * (nn + 2.0) * tb2;
        Jet rhs = 9.0 * R;
        out.square_identity = make_residual(std::abs((lhs - rhs).value()),
                                            std::abs(s2.value()) + std::abs(rhs.value()) +
                                                (nn - 1.0) * (nn + 2.0) * std::abs(tb2.value()));
    }
    {
        Jet chi = pow(sd.sigma, nn + 2.0);
        Jet lap = laplacian(chi, geo);
        Jet rhs = (-2.0 * (nn + 1.0) / (nn - 1.0)) * R * chi;
        out.eigenvalue = make_residual(std::abs((lap - rhs).value()),
                                       std::abs(lap.value()) + std::abs(rhs.value()) +
                                           std::abs(chi.value()));
    }
    if (std::abs(out.scalar_curvature) > 1e-8) {
        double c = 2.0 * (nn + 1.0) * out.scalar_curvature / (nn - 1.0);
        double disc = (nn - 1.0) * (nn - 1.0) + 4.0 * c;
        if (disc >= 0.0)
            out.level = static_cast<int>(std::lround(0.5 * (std::sqrt(disc) - (nn - 1.0))));
    }
    return out;
}

// Obstruction to trivialising the eigenfunction by a further rescaling.
// The candidate factor maps the metric to g/omega^2; the system admits a
// flat representative under that factor exactly when the carried-along
// eigenfunction sigma^(n+2) omega^-(n+2) is harmonic there.  The residual
// is that flat-scale Laplacian, written through the original connection.
inline Residual flattenability_residual(const SystemSpec& sys,
                                        const std::vector<Cplx>& point, const Jet& w) {
    Geometry geo = system_geometry(sys, point);
    const MetricOf<Jet>& m = geo.metric_jets();
    const double nn = geo.dim();
    StructureData sd = solve_structure_tensors(sys, point);

    if (std::abs(w.value()) < 1e-8)
        throw error("conformal factor vanishes at the sample point");
    Jet u = pow(sd.sigma, nn + 2.0) * pow(w, -(nn + 2.0));
    TensorJet du = gradient(u, geo);
    TensorJet dlnw = gradient(log(w), geo);
    Jet cross = trace_slots(outer(dlnw, du), 0, 1, m)[0];
    Jet lap = laplacian(u, geo);
    Jet lhs = (w * w) * (lap - (nn - 2.0) * cross);
    double scale = std::abs((w * w).value()) *
                   (std::abs(lap.value()) + std::abs(((nn - 2.0) * cross).value())) +
                   std::abs(u.value());
    return make_residual(std::abs(lhs.value()), scale);
}

inline Residual flattenability_check(const SystemSpec& sys, const std::string& omega,
                                     const std::vector<Cplx>& point) {
    Jet w = parse_in_system(sys, omega).eval_jet(point, sys.default_params(), 4);
    return flattenability_residual(sys, point, w);
}

// For a metric of the isotropic shape f(x) delta_ij the natural flattening
// candidate is sqrt(g_00); returns false when the chart is not of that shape.
inline bool isotropic_chart_factor(const Geometry& geo, Jet& w) {
    const TensorJet& g = geo.metric_jets().g;
    const int n = geo.dim();
    Jet g00 = g.at({0, 0});
    double scale = max_abs(tensor_value(g));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Jet d = i == j ? g.at({i, j}) - g00 : g.at({i, j});
            if (d.max_abs() > 1e-9 * (1.0 + scale)) return false;
        }
    if (std::abs(g00.value()) < 1e-10) return false;
    w = sqrt(g00);
    return true;
}

// Canonical flattening candidate of a chart.  A flat row flattens through
// the identity, an isotropic chart through sqrt(g_00), and a polar sphere
// chart (metric proportional to dp^2 + sin^2 p dq^2 + sin^2 p sin^2 q dr^2)
// through sqrt(g_00) (1 + cos p), the stereographic factor.
inline bool flattening_candidate(const Geometry& geo, Jet& w, std::string& how) {
    const TensorJet& g = geo.metric_jets().g;
    const int n = geo.dim();
    double gs = max_abs(tensor_value(g));
    if (max_abs(tensor_value(geo.curvature().riemann_down)) < 1e-8 * (1.0 + gs)) {
        w = Jet::constant(g.at({0, 0}).space(), 1.0);
        how = "identity (chart already flat)";
        return true;
    }
    if (isotropic_chart_factor(geo, w)) {
        how = "sqrt(g_00) of the isotropic chart";
        return true;
    }
    bool diagonal = true;
    for (int i = 0; i < n && diagonal; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && g.at({i, j}).max_abs() > 1e-9 * (1.0 + gs)) {
                diagonal = false;
                break;
            }
    if (diagonal && n == 3) {
        const JetSpace& s = g.at({0, 0}).space();
        Jet p = Jet::coordinate(s, 0, geo.point()[0]);
        Jet q = Jet::coordinate(s, 1, geo.point()[1]);
        Jet sp2 = sin(p) * sin(p);
        Jet sq2 = sin(q) * sin(q);
        Jet g00 = g.at({0, 0});
        if ((g.at({1, 1}) - sp2 * g00).max_abs() < 1e-9 * (1.0 + gs) &&
            (g.at({2, 2}) - sp2 * sq2 * g00).max_abs() < 1e-9 * (1.0 + gs) &&
            std::abs(g00.value()) > 1e-10) {
            w = sqrt(g00) * (Jet::constant(s, 1.0) + cos(p));
            how = "stereographic factor of the polar chart";
            return true;
        }
    }
    return false;
}

// Recovery of the cubic part and the trace one-form from the scalar
// structure function on a constant curvature background.
struct BMachineryCheck {
    Residual cubic_from_scalar; // S from the symmetrized third derivatives
    Residual trace_from_scalar; // d tbar from the Laplace expression
    bool applicable = false;
};

inline BMachineryCheck b_machinery(const SystemSpec& sys, const std::vector<Cplx>& point) {
    BMachineryCheck out;
    if (sys.b_expr.empty())
        return out;
    Geometry geo = system_geometry(sys, point);
    const MetricOf<Jet>& m = geo.metric_jets();
    const double nn = geo.dim();
    StructureData sd = solve_structure_tensors(sys, point);

    Jet B = parse_in_system(sys, sys.b_expr).eval_jet(point, sys.default_params(), 4);
    TensorJet d3 = cov_derivative(cov_derivative(gradient(B, geo), geo), geo);
    YoungSpec sym3tf{{{0, 1, 2}}, false, true};
    TensorJet SB = (1.0 / 6.0) * young_project(d3, sym3tf, m);
    out.cubic_from_scalar = make_residual(max_abs(tensor_value(SB - sd.S)),
                                          max_abs(tensor_value(sd.S)) +
                                              max_abs(tensor_value(SB)));

    Jet R = geo.curvature().scalar;
    Jet tb = (laplacian(B, geo) + (2.0 * (nn + 1.0) / (nn * (nn - 1.0))) * R * B) *
             (1.0 / (nn + 2.0));
    TensorJet dtb = gradient(tb, geo);
    out.trace_from_scalar = make_residual(max_abs(tensor_value(dtb - sd.tbar)),
                                          max_abs(tensor_value(sd.tbar)) +
                                              max_abs(tensor_value(dtb)));
    out.applicable = true;
    return out;
}

// Chart representatives of the weighted objects; the weight is carried by
// powers of |det g|^(1/n), so the representatives agree across conformally
// related entries written in the same coordinates.
struct DensityData {
    TensorJet metric_rep; // g_ij |det g|^(-1/n)
    Jet potential_rep;    // V |det g|^(1/n)
    Jet scalar_rep;       // B |det g|^(-1/n)
    bool has_scalar = false;
};

inline DensityData density_representatives(const SystemSpec& sys,
                                           const std::vector<Cplx>& point) {
    Geometry geo = system_geometry(sys, point);
    const double nn = geo.dim();
    Jet det = geo.det();
    Jet absdet = std::real(det.value()) < 0.0 ? -1.0 * det : det;
    DensityData out;
    out.metric_rep = pow(absdet, -1.0 / nn) * geo.metric_jets().g;
    out.potential_rep = combined_potential_jet(sys, point) * pow(absdet, 1.0 / nn);
    if (!sys.b_expr.empty()) {
        Jet B = parse_in_system(sys, sys.b_expr).eval_jet(point, sys.default_params(), 4);
        out.scalar_rep = B * pow(absdet, -1.0 / nn);
        out.has_scalar = true;
    }
    return out;
}

enum class ScaleChoice { Native, Standard, Flat, Proper };

inline ScaleChoice parse_scale_choice(const std::string& s) {
    if (s == "native") return ScaleChoice::Native;
    if (s == "standard") return ScaleChoice::Standard;
    if (s == "flat") return ScaleChoice::Flat;
    if (s == "proper") return ScaleChoice::Proper;
    throw error("unknown scale choice '" + s + "'");
}

inline std::string scale_choice_name(ScaleChoice c) {
    switch (c) {
    case ScaleChoice::Native: return "native";
    case ScaleChoice::Standard: return "standard";
    case ScaleChoice::Flat: return "flat";
    case ScaleChoice::Proper: return "proper";
    }
    return "native";
}

struct ScaledSystem {
    SystemSpec system;
    ConformalRescaling rescaling; // factor applied, "1" when unchanged
};

// Rescales a catalog entry into the requested gauge when the data on
// record allows it.  The standard scale exponentiates the declared trace
// scalar, the flat scale follows a declared flat partner, and the proper
// scale searches square roots of potential members for a vanishing tau.
inline ScaledSystem make_scale(const SystemSpec& sys, ScaleChoice choice) {
    switch (choice) {
    case ScaleChoice::Native:
        return {sys, {"1"}};
    case ScaleChoice::Standard: {
        if (sys.tbar_expr.empty())
            throw error("no trace scalar on record to build the standard scale for '" +
                        sys.name + "'");
        if (sys.tbar_expr == "0")
            return {sys, {"1"}};
        ConformalRescaling r{"exp(" + detail::paren(sys.tbar_expr) + "/3)"};
        return {apply_conformal_transform(sys, r, sys.name + ":standard"), r};
    }
    case ScaleChoice::Flat: {
        for (const auto& p : sys.partners) {
            const SystemSpec& target = get_system(p.name);
            if (target.curvature_class == "flat") {
                ConformalRescaling r{p.omega};
                return {apply_conformal_transform(sys, r, sys.name + ":flat"), r};
            }
        }
        if (sys.curvature_class == "flat")
            return {sys, {"1"}};
        throw error("no flat-scale realization on record for '" + sys.name + "'");
    }
    case ScaleChoice::Proper: {
        std::vector<Cplx> mid = box_midpoint(sys);
        auto tau_size = [&mid](const SystemSpec& s) {
            StructureData sd = solve_structure_tensors(s, mid);
            return max_abs(tensor_value(sd.tau)) / (1.0 + max_abs(tensor_value(sd.T)));
        };
        if (tau_size(sys) < 1e-7)
            return {sys, {"1"}};
        for (const auto& member : sys.potentials) {
            for (const std::string& form :
                 {"sqrt" + detail::paren(member), "1/sqrt" + detail::paren(member)}) {
                try {
                    ConformalRescaling r{form};
                    SystemSpec cand = apply_conformal_transform(sys, r, sys.name + ":proper");
                    if (tau_size(cand) < 1e-7)
                        return {cand, r};
                } catch (const error&) {
                }
            }
        }
        throw error("no proper-scale realization found for '" + sys.name + "'");
    }
    }
    throw error("unknown scale choice");
}

// Transformation of the one-form -(K dV + omega V) whose potential is the
// scalar companion of a compatible Killing tensor, and of the conformal
// factor one-form itself.  The combined one-form is invariant under a
// rescaling; the weight sits entirely in the omega rule.
struct PotentialFormCheck {
    Residual transformation; // rescaled form agrees with the original
    Residual factor_rule;    // rescaled omega vs Omega^2 (omega + 2 K grad(ln Omega))
    Residual closedness;     // the rescaled form is still exact
};

inline PotentialFormCheck check_potential_form_transform(const SystemSpec& sys,
                                                         const ConformalRescaling& r,
                                                         std::size_t which,
                                                         const std::vector<Cplx>& point) {
    Geometry geo = system_geometry(sys, point);
    const MetricOf<Jet>& m = geo.metric_jets();
    TensorJet K = killing_jets(sys, which, point, 2);
    ConformalKillingCheck ck = check_conformal_killing(K, geo);
    Jet V = combined_potential_jet(sys, point);
    TensorJet F = -1.0 * (contract(outer(raise_slot(K, 1, m), gradient(V, geo)), 1, 2) +
                          V * ck.omega);

    SystemSpec hsys = apply_conformal_transform(sys, r);
    Geometry hgeo = system_geometry(hsys, point);
    const MetricOf<Jet>& hm = hgeo.metric_jets();
    TensorJet hK = killing_jets(hsys, which, point, 2);
    ConformalKillingCheck hck = check_conformal_killing(hK, hgeo);
    Jet hV = combined_potential_jet(hsys, point);
    TensorJet hF = -1.0 * (contract(outer(raise_slot(hK, 1, hm), gradient(hV, hgeo)), 1, 2) +
                           hV * hck.omega);

    Jet w = conformal_factor_jet(sys, r, point);
    TensorJet du = gradient(log(w), geo);
    TensorJet kdu = contract(outer(K, raise_slot(du, 0, m)), 1, 2); // K_ia dUps^a

    PotentialFormCheck out;
    out.transformation = make_residual(max_abs(tensor_value(hF - F)),
                                       max_abs(tensor_value(hF)) + max_abs(tensor_value(F)));
    {
        TensorJet pred = (w * w) * (ck.omega + 2.0 * kdu);
        out.factor_rule = make_residual(max_abs(tensor_value(hck.omega - pred)),
                                        max_abs(tensor_value(hck.omega)) +
                                            max_abs(tensor_value(pred)));
    }
    {
        TensorJet curl = antisymmetrize(cov_derivative(hF, hgeo), {0, 1});
        out.closedness = make_residual(max_abs(tensor_value(curl)),
                                       max_abs(tensor_value(cov_derivative(hF, hgeo))));
    }
    return out;
}

// A Killing tensor with both slots raised has conformal weight zero.
inline Residual check_killing_upper_invariance(const SystemSpec& sys,
                                               const ConformalRescaling& r,
                                               std::size_t which,
                                               const std::vector<Cplx>& point) {
    Geometry geo = system_geometry(sys, point);
    const MetricOf<Jet>& m = geo.metric_jets();
    TensorJet up = raise_slot(raise_slot(killing_jets(sys, which, point, 2), 0, m), 1, m);

    SystemSpec hsys = apply_conformal_transform(sys, r);
    Geometry hgeo = system_geometry(hsys, point);
    const MetricOf<Jet>& hm = hgeo.metric_jets();
    TensorJet hup = raise_slot(raise_slot(killing_jets(hsys, which, point, 2), 0, hm), 1, hm);

    return make_residual(max_abs(tensor_value(hup - up)), max_abs(tensor_value(up)));
}

} // namespace sv
