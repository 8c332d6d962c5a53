#pragma once
// Whole-entry verification batteries.  Every applicable check runs over the
// seeded sample points of a system and the worst residuals are folded into a
// CheckReport; inapplicable checks become skip entries with a reason.

#include <string>
#include <vector>

#include "supiverify/conformal.hpp"
#include "supiverify/report.hpp"

namespace sv {

struct BatteryOptions {
    int points = 20;
    std::uint64_t seed = 42;
    double tol = 1e-8;
    // set when the scalar structure function on record is in the canonical
    // gauge; a rescaled entry only carries it up to a gauge term
    bool canonical_scalar = true;
};

namespace detail {

inline Residual tensor_gap(const TensorJet& a, const TensorJet& b) {
    double raw = max_abs(tensor_value(a - b));
    return make_residual(raw, max_abs(tensor_value(a)) + max_abs(tensor_value(b)));
}

inline Residual jet_gap(const Jet& a, const Jet& b) {
    return make_residual(std::abs((a - b).value()),
                         std::abs(a.value()) + std::abs(b.value()));
}

} // namespace detail

inline void append_check_battery(CheckReport& rep, const SystemSpec& sys,
                                 const BatteryOptions& opt) {
    const double tol = opt.tol;
    const double nn = sys.dim;
    auto pts = sample_points(sys, opt.points, opt.seed);
    const bool have_killing = !sys.killing.empty();
    const std::size_t nk = sys.killing.size();

    ResidualAccumulator recovery, tau_norm;
    bool unique_all = true;
    ResidualAccumulator integ[5];
    ResidualAccumulator prol[6], weyl_gap;
    ResidualAccumulator alg[2];
    ResidualAccumulator se_trace, se_scale, se_div, se_ptf, se_pt, se_dpt, se_flat;
    int std_pts = 0, flat_pts = 0;
    ResidualAccumulator ck_eq, ck_struct, ck_curl, ck_bd, ck_prol, ck_pc, ck_pt;
    int proper_pts = 0;
    ResidualAccumulator ki_curv, ki_recon, ki_structid;
    ResidualAccumulator tr_match, tr_groups, tr_mixed;
    ResidualAccumulator bm_cubic, bm_trace;
    ResidualAccumulator flat_obs;
    std::string flat_how;
    bool flat_have = true;
    std::vector<double> curvatures;

    for (const auto& pt : pts) {
        Geometry geo = system_geometry(sys, pt);
        StructureData sd = solve_structure_tensors(sys, pt);
        recovery.add(sd.residual, sd.normalized_residual);
        unique_all = unique_all && sd.unique;
        double tscale = max_abs(tensor_value(sd.T));
        double traw = max_abs(tensor_value(sd.tau));
        tau_norm.add(traw, traw / (1.0 + tscale));
        bool proper_here = traw / (1.0 + tscale) < 1e-6;
        if (proper_here) ++proper_pts;
        curvatures.push_back(std::real(geo.curvature().scalar.value()));

        DerivedStructure ds = derived_structure(sd, geo);
        PotentialIntegrability pi = check_integrability_V(sd, ds, geo);
        integ[0].add(pi.hessian_coupling);
        integ[1].add(pi.gradient_coupling);
        integ[2].add(pi.zeroth_coupling);
        // the Laplacian exchange laws are stated in a proper gauge
        if (proper_here) {
            integ[3].add(pi.laplacian_gradient);
            integ[4].add(pi.laplacian_zeroth);
        }

        NonlinearProlongation np = check_nonlinear_prolongation(sys, pt);
        prol[0].add(np.trace_gradient);
        prol[1].add(np.trace_divergence);
        prol[2].add(np.cubic_derivative);
        prol[3].add(np.cubic_divergence);
        prol[4].add(np.laplace_companion);
        // the tracefree Hessian law is a proper-gauge statement
        if (proper_here) prol[5].add(np.hessian_companion);
        weyl_gap.add(np.weyl_derivative_gap, np.weyl_derivative_gap);

        AlgebraicConditions ac =
            check_algebraic_conditions(tensor_value(sd.S), geo.metric_value());
        alg[0].add(ac.square_window);
        alg[1].add(ac.cubic_window);

        StressEnergyCheck se = stress_energy_and_einstein(sys, pt);
        se_trace.add(se.einstein_trace_form);
        se_scale.add(se.einstein_sigma_form);
        if (se.standard_scale) {
            ++std_pts;
            se_div.add(se.divergence_free);
            se_ptf.add(se.schouten_tracefree);
            se_pt.add(se.schouten_trace);
            se_dpt.add(se.trace_differential);
        }
        if (se.flat_scale) {
            ++flat_pts;
            se_flat.add(se.flat_form);
        }

        if (have_killing) {
            Jet V = combined_potential_jet(sys, pt);
            for (std::size_t k = 0; k < nk; ++k) {
                TensorJet K = killing_jets(sys, k, pt, 2);
                ConformalKillingCheck ck = check_conformal_killing(K, geo, &sd);
                ck_eq.add(ck.killing_equation);
                ck_struct.add(ck.omega_structure);
                ck_curl.add(check_omega_curl_coupling(K, ck.omega, sd, geo));
                ck_bd.add(check_bertrand_darboux(K, ck.omega, V, geo));
                ProlongationCheck pr = killing_prolongation(K, sd, geo);
                ck_prol.add(pr.prolongation);
                if (proper_here) {
                    ck_pc.add(pr.proper_consistency);
                    ck_pt.add(pr.proper_trace);
                }
            }
            KillingIntegrability ki = check_killing_integrability(sd, geo);
            ki_curv.add(ki.prolongation_curvature);
            ki_recon.add(ki.curvature_reconstruction);
            ki_structid.add(ki.structural_equation);
            TauReconstruction tr = tau_from_structure(sd, geo);
            tr_match.add(tr.tau_match);
            tr_groups.add(tr.group_difference, tr.group_difference / (1.0 + tscale));
            tr_mixed.add(tr.mixed_symmetry);
        }

        // the scalar recovery laws are proper-gauge statements as well
        if (!sys.b_expr.empty() && proper_here) {
            BMachineryCheck bm = b_machinery(sys, pt);
            bm_cubic.add(bm.cubic_from_scalar);
            bm_trace.add(bm.trace_from_scalar);
        }

        if (flat_have) {
            Jet w(jet_space(sys.dim, 0));
            std::string how;
            if (flattening_candidate(geo, w, how)) {
                flat_how = how;
                flat_obs.add(flattenability_residual(sys, pt, w));
            } else {
                flat_have = false;
            }
        }
    }

    rep.checks.push_back(judged_entry(
        "structure-recovery",
        "potential family reproduces the structure tensors through the tracefree "
        "Hessian equations",
        recovery, tol));
    {
        CheckEntry e;
        e.id = "structure-uniqueness";
        e.descriptor = "the structure-tensor least-squares solve has full column rank";
        e.points = static_cast<int>(pts.size());
        e.status = unique_all ? "pass" : "indeterminate";
        if (!unique_all) e.reason = "rank-deficient solve at some sampled point";
        rep.checks.push_back(e);
    }
    if (sys.curvature_class == "flat") {
        rep.checks.push_back(judged_entry(
            "proper-trace", "tau vanishes for a flat, properly superintegrable entry",
            tau_norm, tol));
    } else if (tau_norm.normalized < tol) {
        rep.checks.push_back(judged_entry(
            "proper-trace", "tau vanishes for a flat, properly superintegrable entry",
            tau_norm, tol));
    } else {
        rep.checks.push_back(informational_entry(
            "proper-trace", "tau vanishes for a flat, properly superintegrable entry",
            tau_norm, "trace part nonzero away from a proper gauge"));
    }

    static const char* integ_ids[5] = {
        "integrability-hessian-coupling", "integrability-gradient-coupling",
        "integrability-zeroth-coupling", "integrability-laplacian-gradient",
        "integrability-laplacian-zeroth"};
    static const char* integ_desc[5] = {
        "trace completion of the Hessian coupling is symmetric",
        "trace completion of the gradient coupling is symmetric",
        "trace completion of the zeroth-order coupling is symmetric",
        "derivative exchange of the Laplacian gradient closes",
        "derivative exchange of the Laplacian zeroth term closes"};
    for (int i = 0; i < 5; ++i) {
        if (i >= 3 && proper_pts == 0)
            rep.checks.push_back(skipped_entry(integ_ids[i], integ_desc[i],
                                               "no sampled point is in a proper gauge"));
        else
            rep.checks.push_back(judged_entry(integ_ids[i], integ_desc[i], integ[i], tol));
    }

    // standard-gauge theorem block, on a few points since one check runs a
    // finite-difference closedness probe
    {
        static const char* std_ids[7] = {
            "standard-hook-projection",     "standard-weyl-square",
            "standard-derivative-symmetry", "standard-exchange-tracefree",
            "standard-scalar-exchange",     "standard-schouten-exchange",
            "standard-divergence-closure"};
        static const char* std_desc[7] = {
            "hook projection of the pair coupling vanishes in the standard gauge",
            "Riemann-type projection of the cubic square vanishes",
            "projected covariant derivative of the cubic part closes",
            "antisymmetrized tracefree derivative of the trace coupling vanishes",
            "gradient identity with the eliminated scalar holds",
            "Schouten-coupled contraction is symmetric",
            "divergence one-form of the Z tensor is closed"};
        StandardScaleReport probe = standard_scale_check(sys, pts.front());
        if (!probe.applicable) {
            for (int i = 0; i < 7; ++i)
                rep.checks.push_back(
                    skipped_entry(std_ids[i], std_desc[i], "chart is not conformally flat"));
        } else if (probe.tbar_norm > 1e-6) {
            for (int i = 0; i < 7; ++i)
                rep.checks.push_back(
                    skipped_entry(std_ids[i], std_desc[i], "not in the standard gauge"));
        } else {
            ResidualAccumulator acc[7];
            std::size_t nstd = std::min<std::size_t>(pts.size(), 3);
            for (std::size_t p = 0; p < nstd; ++p) {
                StandardScaleReport sr =
                    p == 0 ? probe : standard_scale_check(sys, pts[p]);
                acc[0].add(sr.hook_tracefree);
                acc[1].add(sr.weyl_square);
                acc[2].add(sr.derivative_sym);
                acc[3].add(sr.exchange_tracefree);
                acc[4].add(sr.scalar_exchange);
                acc[5].add(sr.schouten_exchange);
                acc[6].add(sr.divergence_closed);
            }
            for (int i = 0; i < 7; ++i)
                rep.checks.push_back(judged_entry(std_ids[i], std_desc[i], acc[i],
                                                  i == 6 ? std::max(tol, 1e-6) : tol));
        }
    }

    if (have_killing) {
        rep.checks.push_back(judged_entry(
            "killing-conformal-equation",
            "symmetrized derivative of each Killing tensor is pure trace", ck_eq, tol));
        rep.checks.push_back(judged_entry(
            "killing-factor-structure",
            "conformal factor one-form agrees with the structure-tensor route", ck_struct,
            tol));
        rep.checks.push_back(judged_entry(
            "killing-factor-curl",
            "antisymmetrized factor derivative couples through tau", ck_curl, tol));
        rep.checks.push_back(judged_entry(
            "killing-compatibility",
            "exterior derivative of K dV plus omega V vanishes", ck_bd, tol));
        rep.checks.push_back(judged_entry(
            "killing-prolongation",
            "derivative of the tracefree part follows the prolongation coefficients",
            ck_prol, tol));
        if (proper_pts > 0) {
            rep.checks.push_back(judged_entry(
                "killing-proper-consistency",
                "derivative couples through the bare pair coupling in a proper gauge",
                ck_pc, tol));
            rep.checks.push_back(judged_entry(
                "killing-proper-trace",
                "trace gradient couples through the adjusted pair coupling", ck_pt, tol));
        } else {
            rep.checks.push_back(skipped_entry(
                "killing-proper-consistency",
                "derivative couples through the bare pair coupling in a proper gauge",
                "no sampled point is in a proper gauge"));
            rep.checks.push_back(skipped_entry(
                "killing-proper-trace",
                "trace gradient couples through the adjusted pair coupling",
                "no sampled point is in a proper gauge"));
        }
        rep.checks.push_back(judged_entry(
            "killing-curvature-integrability",
            "curvature-coupled integrability of the prolongation holds", ki_curv, tol));
        rep.checks.push_back(judged_entry(
            "killing-curvature-reconstruction",
            "Riemann tensor rebuilt from the prolongation matches the geometry", ki_recon,
            tol));
        rep.checks.push_back(judged_entry(
            "killing-structural-identity", "curvature-free structural identity holds",
            ki_structid, tol));
        rep.checks.push_back(judged_entry(
            "killing-trace-rebuild",
            "tau rebuilt from the structure tensor matches the solved tau", tr_match, tol));
        rep.checks.push_back(judged_entry(
            "killing-group-agreement", "the two displayed contraction groups agree",
            tr_groups, tol));
        rep.checks.push_back(judged_entry(
            "killing-mixed-closure", "mixed-symmetry closure of the factor prolongation",
            tr_mixed, tol));
        {
            AbundanceReport ab = check_abundance(sys, -1, opt.seed);
            CheckEntry e;
            e.id = "killing-abundance";
            e.descriptor = "span of the Killing collection over sampled points";
            e.points = static_cast<int>(pts.size());
            int full = sys.dim * (sys.dim + 1) / 2;
            if (static_cast<int>(nk) < full) {
                e.status = "indeterminate";
                e.reason = "collection of " + std::to_string(nk) +
                           " spans dimension " + std::to_string(ab.count) +
                           ", smaller than the abundant size " + std::to_string(full);
            } else if (ab.indeterminate) {
                e.status = "indeterminate";
                e.reason = "borderline singular values in the span test";
            } else {
                e.status = (ab.linearly_independent && ab.conformally_independent)
                               ? "pass"
                               : "fail";
                if (e.status == "fail") e.reason = "declared collection is degenerate";
            }
            rep.checks.push_back(e);
        }
    } else {
        static const char* kid[] = {
            "killing-conformal-equation", "killing-factor-structure",
            "killing-factor-curl",        "killing-compatibility",
            "killing-prolongation",       "killing-proper-consistency",
            "killing-proper-trace",       "killing-curvature-integrability",
            "killing-curvature-reconstruction", "killing-structural-identity",
            "killing-trace-rebuild",      "killing-group-agreement",
            "killing-mixed-closure",      "killing-abundance"};
        for (const char* id : kid)
            rep.checks.push_back(
                skipped_entry(id, "Killing-tensor battery", "no Killing data on record"));
    }

    static const char* prol_ids[6] = {
        "prolongation-trace-gradient",   "prolongation-trace-divergence",
        "prolongation-cubic-derivative", "prolongation-cubic-divergence",
        "prolongation-laplace-companion", "prolongation-hessian-companion"};
    static const char* prol_desc[6] = {
        "covariant derivative of the trace one-form closes",
        "divergence of the trace one-form matches curvature and the cubic square",
        "covariant derivative of the cubic part closes",
        "divergence of the cubic part follows from its derivative law",
        "conformal Laplacian law on the scale-function power",
        "tracefree Hessian law for the scale function"};
    for (int i = 0; i < 6; ++i) {
        if (i == 5 && proper_pts == 0)
            rep.checks.push_back(skipped_entry(prol_ids[i], prol_desc[i],
                                               "no sampled point is in a proper gauge"));
        else
            rep.checks.push_back(judged_entry(prol_ids[i], prol_desc[i], prol[i], tol));
    }
    rep.checks.push_back(informational_entry(
        "prolongation-weyl-gap",
        "gap of the corrected-connection derivative of the cubic part", weyl_gap,
        "diagnostic, no tolerance"));

    rep.checks.push_back(judged_entry(
        "algebraic-square-window",
        "window projection of the cubic square vanishes", alg[0], tol));
    rep.checks.push_back(judged_entry(
        "algebraic-cubic-window",
        "antisymmetrized tracefree cube of the cubic part vanishes", alg[1], tol));

    rep.checks.push_back(judged_entry(
        "stress-einstein-trace",
        "Einstein tensor equals the trace-corrected stress-energy form", se_trace, tol));
    rep.checks.push_back(judged_entry(
        "stress-einstein-scale",
        "the same field equation through derivatives of the scale function", se_scale,
        tol));
    {
        static const char* sid[5] = {"stress-divergence", "stress-schouten-tracefree",
                                     "stress-schouten-trace", "stress-trace-differential",
                                     "stress-flat-form"};
        static const char* sdesc[5] = {
            "stress-energy form is divergence-free in the standard scale",
            "tracefree Schouten tensor matches the cubic square",
            "Schouten trace matches the cubic square norm",
            "gradient of the Schouten trace follows the cubic contraction",
            "stress-energy form through the flat-scale one-form"};
        ResidualAccumulator* sacc[5] = {&se_div, &se_ptf, &se_pt, &se_dpt, &se_flat};
        int counts[5] = {std_pts, std_pts, std_pts, std_pts, flat_pts};
        const char* why[5] = {"not in the standard scale", "not in the standard scale",
                              "not in the standard scale", "not in the standard scale",
                              "not in a flat scale"};
        for (int i = 0; i < 5; ++i) {
            if (counts[i] > 0)
                rep.checks.push_back(judged_entry(sid[i], sdesc[i], *sacc[i], tol));
            else
                rep.checks.push_back(skipped_entry(sid[i], sdesc[i], why[i]));
        }
    }

    {
        double r0 = curvatures.front();
        double spread = 0.0;
        for (double r : curvatures) spread = std::max(spread, std::abs(r - r0));
        static const char* eid[2] = {"curvature-square-identity", "curvature-eigenvalue"};
        static const char* edesc[2] = {
            "cubic square minus the weighted trace square equals nine times the scalar "
            "curvature",
            "sigma^(n+2) is a Laplace eigenfunction with the constant-curvature "
            "eigenvalue"};
        if (spread > 1e-6 * (1.0 + std::abs(r0))) {
            for (int i = 0; i < 2; ++i)
                rep.checks.push_back(skipped_entry(
                    eid[i], edesc[i], "scalar curvature is not constant over the box"));
            rep.checks.push_back(skipped_entry(
                "curvature-eigenvalue-level", "integer level solving the eigenvalue relation",
                "scalar curvature is not constant over the box"));
        } else {
            ResidualAccumulator sq, ev;
            int level = 0;
            double level_gap = 0.0;
            for (const auto& pt : pts) {
                EigenvalueCheck ec = sphere_eigenvalue_check(sys, pt);
                sq.add(ec.square_identity);
                ev.add(ec.eigenvalue);
                level = ec.level;
                double c = 2.0 * (nn + 1.0) * ec.scalar_curvature / (nn - 1.0);
                level_gap = std::max(level_gap,
                                     std::abs(level * (level + nn - 1.0) - c) /
                                         (1.0 + std::abs(c)));
            }
            rep.checks.push_back(judged_entry(eid[0], edesc[0], sq, tol));
            rep.checks.push_back(judged_entry(eid[1], edesc[1], ev, tol));
            ResidualAccumulator lv;
            lv.add(level_gap, level_gap);
            lv.points = static_cast<int>(pts.size());
            CheckEntry e = judged_entry("curvature-eigenvalue-level",
                                        "integer level solving the eigenvalue relation",
                                        lv, 1e-6);
            e.reason = "mu = " + std::to_string(level);
            rep.checks.push_back(e);
        }
    }

    if (!sys.b_expr.empty() && proper_pts == 0) {
        rep.checks.push_back(skipped_entry(
            "scalar-cubic-recovery",
            "symmetrized third derivatives of the scalar function rebuild the cubic part",
            "no sampled point is in a proper gauge"));
        rep.checks.push_back(skipped_entry(
            "scalar-trace-recovery",
            "Laplace expression of the scalar function rebuilds the trace one-form",
            "no sampled point is in a proper gauge"));
    } else if (!sys.b_expr.empty()) {
        rep.checks.push_back(judged_entry(
            "scalar-cubic-recovery",
            "symmetrized third derivatives of the scalar function rebuild the cubic part",
            bm_cubic, tol));
        if (opt.canonical_scalar)
            rep.checks.push_back(judged_entry(
                "scalar-trace-recovery",
                "Laplace expression of the scalar function rebuilds the trace one-form",
                bm_trace, tol));
        else
            rep.checks.push_back(skipped_entry(
                "scalar-trace-recovery",
                "Laplace expression of the scalar function rebuilds the trace one-form",
                "scalar representative is defined up to a gauge term after a rescaling"));
    } else {
        rep.checks.push_back(skipped_entry("scalar-cubic-recovery",
                                           "cubic part from the scalar structure function",
                                           "no scalar structure function on record"));
        rep.checks.push_back(skipped_entry("scalar-trace-recovery",
                                           "trace one-form from the scalar structure function",
                                           "no scalar structure function on record"));
    }

    {
        const char* fid = "flattenability-obstruction";
        const char* fdesc =
            "carried eigenfunction is harmonic in the flat representative of the "
            "candidate factor";
        if (!flat_have) {
            rep.checks.push_back(
                skipped_entry(fid, fdesc, "no canonical flattening candidate for this chart"));
        } else if (flat_obs.normalized < tol) {
            CheckEntry e = judged_entry(fid, fdesc, flat_obs, tol);
            e.reason = flat_how;
            rep.checks.push_back(e);
        } else {
            rep.checks.push_back(informational_entry(
                fid, fdesc,
                flat_obs, "nonzero obstruction through " + flat_how +
                              "; no flat properly superintegrable realization this way"));
        }
    }
}

inline CheckReport run_check_battery(const std::string& shown_name, const ScaledSystem& ss,
                                     ScaleChoice choice, const BatteryOptions& opt) {
    CheckReport rep;
    rep.command = "check";
    rep.system = shown_name;
    rep.scale = scale_choice_name(choice);
    rep.scale_factor = ss.rescaling.omega;
    rep.environment.seed = opt.seed;
    rep.environment.points = opt.points;
    rep.environment.tolerance = opt.tol;
    for (const auto& [k, v] : ss.system.params) rep.environment.parameters.emplace_back(k, v);
    BatteryOptions local = opt;
    local.canonical_scalar = ss.rescaling.omega == "1";
    append_check_battery(rep, ss.system, local);
    return rep;
}

// Residuals of the transformation laws plus a full re-check of the rescaled
// entry.  The rule block runs on a few points; the re-check uses them all.
inline CheckReport run_transform_battery(const SystemSpec& sys, const ConformalRescaling& r,
                                         const BatteryOptions& opt) {
    CheckReport rep;
    rep.command = "transform";
    rep.system = sys.name;
    rep.scale = "native";
    rep.scale_factor = r.omega;
    rep.environment.seed = opt.seed;
    rep.environment.points = opt.points;
    rep.environment.tolerance = opt.tol;
    for (const auto& [k, v] : sys.params) rep.environment.parameters.emplace_back(k, v);

    const double tol = opt.tol;
    auto pts = sample_points(sys, opt.points, opt.seed);
    std::size_t nrule = std::min<std::size_t>(pts.size(), 5);

    ResidualAccumulator rule[6];
    ResidualAccumulator upper, pform, pfactor, pclosed;
    ResidualAccumulator dens_g, dens_v, dens_b;
    bool dens_has_b = true;
    SystemSpec hsys = apply_conformal_transform(sys, r);
    for (std::size_t p = 0; p < nrule; ++p) {
        const auto& pt = pts[p];
        StructureTransformCheck tc = check_structure_transform_rules(sys, r, pt);
        rule[0].add(tc.pair_rule);
        rule[1].add(tc.tracefree_rule);
        rule[2].add(tc.trace_rule);
        rule[3].add(tc.cubic_rule);
        rule[4].add(tc.scale_function);
        rule[5].add(tc.round_trip);
        for (std::size_t k = 0; k < sys.killing.size(); ++k) {
            upper.add(check_killing_upper_invariance(sys, r, k, pt));
            PotentialFormCheck pf = check_potential_form_transform(sys, r, k, pt);
            pform.add(pf.transformation);
            pfactor.add(pf.factor_rule);
            pclosed.add(pf.closedness);
        }
        DensityData da = density_representatives(sys, pt);
        DensityData db = density_representatives(hsys, pt);
        dens_g.add(detail::tensor_gap(da.metric_rep, db.metric_rep));
        dens_v.add(detail::jet_gap(da.potential_rep, db.potential_rep));
        if (da.has_scalar && db.has_scalar)
            dens_b.add(detail::jet_gap(da.scalar_rep, db.scalar_rep));
        else
            dens_has_b = false;
    }

    static const char* rid[6] = {"transform-pair-rule",  "transform-tracefree-rule",
                                 "transform-trace-rule", "transform-cubic-rule",
                                 "transform-scale-function", "transform-round-trip"};
    static const char* rdesc[6] = {
        "pair coupling shifts by derivatives of the factor logarithm",
        "tau shifts through the Hessian of the factor logarithm",
        "trace one-form shifts by the factor logarithm gradient",
        "cubic part picks up the squared factor",
        "scale-function ratio reduces to a constant",
        "transforming back restores the structure tensors"};
    for (int i = 0; i < 6; ++i)
        rep.checks.push_back(judged_entry(rid[i], rdesc[i], rule[i], tol));

    if (!sys.killing.empty()) {
        rep.checks.push_back(judged_entry(
            "transform-killing-upper",
            "Killing tensors with both slots raised are unchanged", upper, tol));
        rep.checks.push_back(judged_entry(
            "transform-potential-form",
            "the one-form K dV plus omega V is unchanged", pform, tol));
        rep.checks.push_back(judged_entry(
            "transform-factor-rule",
            "conformal factor one-form picks up the squared factor and the coupling term",
            pfactor, tol));
        rep.checks.push_back(judged_entry(
            "transform-potential-closedness",
            "the rescaled one-form is still closed", pclosed, tol));
    } else {
        for (const char* id : {"transform-killing-upper", "transform-potential-form",
                               "transform-factor-rule", "transform-potential-closedness"})
            rep.checks.push_back(
                skipped_entry(id, "Killing transformation rules", "no Killing data on record"));
    }

    rep.checks.push_back(judged_entry(
        "transform-metric-density",
        "weighted metric representative is unchanged", dens_g, tol));
    rep.checks.push_back(judged_entry(
        "transform-potential-density",
        "weighted potential representative is unchanged", dens_v, tol));
    if (dens_has_b)
        rep.checks.push_back(judged_entry(
            "transform-scalar-density",
            "weighted scalar-function representative is unchanged", dens_b, tol));
    else
        rep.checks.push_back(skipped_entry("transform-scalar-density",
                                           "weighted scalar-function representative",
                                           "no scalar structure function on record"));

    BatteryOptions local = opt;
    local.canonical_scalar = false;
    append_check_battery(rep, hsys, local);
    return rep;
}

inline CheckReport run_partner_battery(const SystemSpec& sys, const BatteryOptions& opt) {
    CheckReport rep;
    rep.command = "partner";
    rep.system = sys.name;
    rep.scale = "native";
    rep.environment.seed = opt.seed;
    rep.environment.points = opt.points;
    rep.environment.tolerance = opt.tol;
    for (const auto& [k, v] : sys.params) rep.environment.parameters.emplace_back(k, v);

    if (sys.partners.empty()) {
        rep.checks.push_back(skipped_entry("partner-comparisons",
                                           "declared equivalent-entry comparisons",
                                           "no declared partners"));
        return rep;
    }

    const double tol = opt.tol;
    auto pts = sample_points(sys, opt.points, opt.seed);
    for (const auto& partner : sys.partners) {
        SystemSpec target = get_system(partner.name);
        ConformalRescaling r{partner.omega};
        SystemSpec image = apply_conformal_transform(sys, r, sys.name + ">" + partner.name);
        std::string prefix = "partner-" + partner.name + "-";

        ResidualAccumulator metric_gap, flatness, mixed_s, structure, db, dg;
        bool both_b = true;
        for (const auto& pt : pts) {
            Geometry gi = system_geometry(image, pt);
            Geometry gt = system_geometry(target, pt);
            metric_gap.add(detail::tensor_gap(gi.metric_jets().g, gt.metric_jets().g));
            double gs = max_abs(tensor_value(gi.metric_jets().g));
            double riem = max_abs(tensor_value(gi.curvature().riemann_down));
            flatness.add(riem, riem / (1.0 + gs));
            StructureData si = solve_structure_tensors(image, pt);
            StructureData st = solve_structure_tensors(target, pt);
            TensorJet mi = raise_slot(si.S, 2, gi.metric_jets());
            TensorJet mt = raise_slot(st.S, 2, gt.metric_jets());
            mixed_s.add(detail::tensor_gap(mi, mt));
            // same metric and same full coupling tensor mean the two potential
            // families solve one and the same equation
            structure.add(detail::tensor_gap(si.T, st.T));
            DensityData da = density_representatives(image, pt);
            DensityData dc = density_representatives(target, pt);
            dg.add(detail::tensor_gap(da.metric_rep, dc.metric_rep));
            if (da.has_scalar && dc.has_scalar)
                db.add(detail::jet_gap(da.scalar_rep, dc.scalar_rep));
            else
                both_b = false;
        }
        rep.checks.push_back(judged_entry(
            prefix + "metric", "transformed metric agrees with the declared partner",
            metric_gap, tol));
        if (target.curvature_class == "flat")
            rep.checks.push_back(judged_entry(
                prefix + "flatness", "transformed metric is flat", flatness, tol));
        rep.checks.push_back(judged_entry(
            prefix + "mixed-cubic",
            "mixed-position cubic part agrees with the declared partner", mixed_s, tol));
        rep.checks.push_back(judged_entry(
            prefix + "structure",
            "full potential-coupling tensor agrees with the declared partner", structure,
            tol));
        rep.checks.push_back(judged_entry(
            prefix + "metric-density", "weighted metric representatives agree", dg, tol));
        if (both_b)
            rep.checks.push_back(judged_entry(
                prefix + "scalar-density", "weighted scalar-function representatives agree",
                db, tol));
        else
            rep.checks.push_back(skipped_entry(prefix + "scalar-density",
                                               "weighted scalar-function representatives",
                                               "scalar function missing on one side"));
    }
    return rep;
}

} // namespace sv
