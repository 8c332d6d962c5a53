#include "supiverify/tensor.hpp"

#include "supiverify/jetlinalg.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using sv::Cplx;
using sv::Jet;
using sv::JetSpace;
using sv::Metric;
using sv::TensorValue;
using sv::Var;
using sv::YoungSpec;

namespace {

const std::vector<Var> dd = {Var::Down, Var::Down};
const std::vector<Var> ddd = {Var::Down, Var::Down, Var::Down};
const std::vector<Var> dddd = {Var::Down, Var::Down, Var::Down, Var::Down};

Metric random_metric(int n) {
    // symmetric with a dominant diagonal so it stays invertible
    TensorValue g(n, dd, Cplx(0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            Cplx v = oracle::random_cplx(0.2);
            if (i == j) v += Cplx(2.0 + i);
            g.at({i, j}) = v;
            g.at({j, i}) = v;
        }
    }
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = g.at({i, j});
    Eigen::MatrixXcd mi = m.inverse();
    TensorValue ginv(n, {Var::Up, Var::Up}, Cplx(0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ginv.at({i, j}) = mi(i, j);
    return {g, ginv};
}

} // namespace

TEST_CASE("permuted moves slot data") {
    TensorValue t(2, dd, Cplx(0.0));
    t.at({0, 1}) = Cplx(5.0);
    TensorValue p = sv::permuted(t, {1, 0});
    CHECK(std::abs(p.at({1, 0}) - Cplx(5.0)) < 1e-15);
    CHECK(std::abs(p.at({0, 1})) < 1e-15);
}

TEST_CASE("symmetrizers match brute-force sums") {
    for (int n : {2, 3}) {
        TensorValue t = oracle::random_tensor(n, ddd);
        TensorValue s = sv::symmetrize(t, {0, 1, 2});
        TensorValue sb = oracle::brute_group_sum(t, {0, 1, 2}, false);
        CHECK(sv::max_abs(s - sb) < 1e-13);

        TensorValue a = sv::antisymmetrize(t, {0, 2});
        TensorValue ab = oracle::brute_group_sum(t, {0, 2}, true);
        CHECK(sv::max_abs(a - ab) < 1e-13);
    }
}

TEST_CASE("young projectors match sequential brute force") {
    Metric m = random_metric(3);
    struct Case {
        std::vector<std::vector<int>> rows;
        bool adjoint;
    };
    std::vector<Case> cases = {
        {{{0, 1}, {2}}, false},
        {{{1, 0}, {2}}, false},
        {{{0, 1, 2}}, false},
        {{{0, 2}, {1, 3}}, true},
        {{{0, 1}, {2}}, true},
    };
    for (const Case& c : cases) {
        int rank = (c.rows.size() == 2 && c.rows[0].size() == 2 && c.rows[1].size() == 2) ? 4 : 3;
        TensorValue t = oracle::random_tensor(3, rank == 4 ? dddd : ddd);
        YoungSpec spec{c.rows, c.adjoint, false};
        TensorValue got = sv::young_project(t, spec, m);
        TensorValue want = oracle::brute_young(t, c.rows, c.adjoint);
        CHECK(sv::max_abs(got - want) < 1e-12);
    }
}

TEST_CASE("hook decomposition of a tensor symmetric in its first slots") {
    Metric m = random_metric(3);
    TensorValue k0 = oracle::random_tensor(3, ddd);
    TensorValue k = sv::symmetrize(k0, {0, 1}); // K_(ij),k
    YoungSpec hook{{{1, 0}, {2}}, false, false};
    YoungSpec full{{{0, 1, 2}}, false, false};
    TensorValue recon = (1.0 / 3.0) * sv::young_project(k, hook, m) +
                        (1.0 / 6.0) * sv::young_project(k, full, m);
    CHECK(sv::max_abs(recon - k) < 1e-12 * (1.0 + sv::max_abs(k)));
}

TEST_CASE("projector idempotence scalars") {
    Metric m = random_metric(3);

    TensorValue t3 = oracle::random_tensor(3, ddd);
    YoungSpec hook{{{1, 0}, {2}}, false, false};
    TensorValue once = sv::young_project(t3, hook, m);
    TensorValue twice = sv::young_project(once, hook, m);
    CHECK(sv::max_abs(twice - 3.0 * once) < 1e-11 * (1.0 + sv::max_abs(once)));

    YoungSpec full{{{0, 1, 2}}, false, false};
    TensorValue s1 = sv::young_project(t3, full, m);
    TensorValue s2 = sv::young_project(s1, full, m);
    CHECK(sv::max_abs(s2 - 6.0 * s1) < 1e-11 * (1.0 + sv::max_abs(s1)));

    YoungSpec pair_sym{{{0, 1}}, false, false};
    YoungSpec pair_anti{{{0}, {1}}, false, false};
    TensorValue t2 = oracle::random_tensor(3, dd);
    for (const YoungSpec& spec : {pair_sym, pair_anti}) {
        TensorValue a1 = sv::young_project(t2, spec, m);
        TensorValue a2 = sv::young_project(a1, spec, m);
        CHECK(sv::max_abs(a2 - 2.0 * a1) < 1e-12 * (1.0 + sv::max_abs(a1)));
    }
}

TEST_CASE("adjoint curvature projector on the metric square") {
    Metric m = random_metric(3);
    TensorValue gg = sv::outer(m.g, m.g);          // slots a b c d = g_ab g_cd
    TensorValue x = sv::permuted(gg, {0, 2, 1, 3}); // X_ijkl = g_ik g_jl
    YoungSpec spec{{{0, 2}, {1, 3}}, true, false};
    TensorValue got = sv::young_project(x, spec, m);

    TensorValue y = sv::permuted(gg, {0, 2, 3, 1}); // g_il g_jk
    TensorValue want = 8.0 * (x - y);
    CHECK(sv::max_abs(got - want) < 1e-12 * (1.0 + sv::max_abs(want)));
}

TEST_CASE("tracefree part of a symmetric pair") {
    Metric m = random_metric(3);
    TensorValue t = sv::symmetrize(oracle::random_tensor(3, dd), {0, 1});
    TensorValue tf = sv::tracefree_part(t, m);
    TensorValue tr = sv::trace_slots(tf, 0, 1, m);
    CHECK(sv::max_abs(tr) < 1e-13);
    // removing the trace twice changes nothing
    CHECK(sv::max_abs(sv::tracefree_part(tf, m) - tf) < 1e-13);
}

TEST_CASE("tracefree part of a fully symmetric 3-tensor") {
    Metric m = random_metric(3);
    TensorValue t = sv::symmetrize(oracle::random_tensor(3, ddd), {0, 1, 2});
    TensorValue tf = sv::tracefree_part(t, m);
    for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}})
        CHECK(sv::max_abs(sv::trace_slots(tf, a, b, m)) < 1e-12);
}

TEST_CASE("tracefree part of a curvature-type tensor via the linear system") {
    Metric m = random_metric(3);
    TensorValue r0 = oracle::random_tensor(3, dddd);
    YoungSpec spec{{{0, 2}, {1, 3}}, true, false};
    TensorValue r = sv::young_project(r0, spec, m); // curvature symmetries
    TensorValue w = sv::tracefree_part(r, m, {0, 1, 2, 3});
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
            CHECK(sv::max_abs(sv::trace_slots(w, a, b, m)) < 1e-10 * (1.0 + sv::max_abs(r)));
}

TEST_CASE("tracefree projection of a partially symmetric 3-tensor") {
    Metric m = random_metric(3);
    TensorValue t = sv::symmetrize(oracle::random_tensor(3, ddd), {1, 2});
    TensorValue tf = sv::tracefree_part(t, m, {0, 1, 2});
    for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}})
        CHECK(sv::max_abs(sv::trace_slots(tf, a, b, m)) < 1e-10 * (1.0 + sv::max_abs(t)));
}

TEST_CASE("raise and lower are inverse") {
    Metric m = random_metric(3);
    TensorValue t = oracle::random_tensor(3, ddd);
    TensorValue up = sv::raise_slot(t, 1, m);
    CHECK(up.valence(1) == Var::Up);
    TensorValue back = sv::lower_slot(up, 1, m);
    CHECK(sv::max_abs(back - t) < 1e-13);

    // g^{ij} g_ij = n
    TensorValue tr = sv::trace_slots(m.g, 0, 1, m);
    CHECK(std::abs(tr[0] - Cplx(3.0)) < 1e-13);
}

TEST_CASE("contract requires opposite positions") {
    Metric m = random_metric(2);
    TensorValue t = oracle::random_tensor(2, dd);
    CHECK_THROWS_AS(sv::contract(t, 0, 1), sv::error);
    TensorValue mixed = sv::raise_slot(t, 0, m);
    TensorValue c = sv::contract(mixed, 0, 1);
    CHECK(c.rank() == 0);
}

TEST_CASE("jet-valued metric inverse and determinant") {
    const JetSpace& s = sv::jet_space(2, 3);
    Jet x = Jet::coordinate(s, 0, Cplx(0.3, 0.1));
    Jet y = Jet::coordinate(s, 1, Cplx(1.2, -0.4));

    sv::JetMatrix g = {{exp(x) + y * y, x * y}, {x * y, Cplx(2.0) + sin(y)}};
    sv::JetMatrix gi = sv::jet_matrix_inverse(g);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            Jet acc(s);
            for (int k = 0; k < 2; ++k) acc += g[i][k] * gi[k][j];
            Jet want = Jet::constant(s, i == j ? Cplx(1.0) : Cplx(0.0));
            CHECK((acc - want).max_abs() < 1e-12);
        }
    }

    Jet det = sv::jet_matrix_det(g);
    Jet want = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    CHECK((det - want).max_abs() < 1e-13);
}

TEST_CASE("jet least squares recovers a jet-valued solution") {
    const JetSpace& s = sv::jet_space(2, 2);
    Jet x = Jet::coordinate(s, 0, Cplx(0.2));
    Jet y = Jet::coordinate(s, 1, Cplx(-0.1));

    std::vector<Jet> truth = {sin(x) + y, exp(x * y)};
    std::vector<std::vector<Jet>> a = {
        {Jet::constant(s, Cplx(2.0)) + x, Jet::constant(s, Cplx(0.5)) * y},
        {x * y, Jet::constant(s, Cplx(3.0)) + sin(y)},
        {Jet::constant(s, Cplx(1.0)), Jet::constant(s, Cplx(1.0)) + x},
    };
    std::vector<Jet> b(3, Jet(s));
    for (int r = 0; r < 3; ++r)
        b[r] = a[r][0] * truth[0] + a[r][1] * truth[1];

    sv::JetLeastSquares sol = sv::jet_least_squares(a, b);
    REQUIRE(sol.solution.size() == 2);
    CHECK(sol.unique);
    CHECK(sol.rank == 2);
    CHECK((sol.solution[0] - truth[0]).max_abs() < 1e-11);
    CHECK((sol.solution[1] - truth[1]).max_abs() < 1e-11);
    CHECK(sol.value_residual < 1e-12);
}

TEST_CASE("jet least squares on an overdetermined inconsistent system") {
    const JetSpace& s = sv::jet_space(1, 1);
    Jet x = Jet::coordinate(s, 0, Cplx(0.0));
    std::vector<std::vector<Jet>> a = {
        {Jet::constant(s, Cplx(1.0))},
        {Jet::constant(s, Cplx(1.0))},
    };
    std::vector<Jet> b = {Jet::constant(s, Cplx(1.0)), Jet::constant(s, Cplx(3.0)) + x};
    sv::JetLeastSquares sol = sv::jet_least_squares(a, b);
    // least squares average of the two rows
    CHECK(std::abs(sol.solution[0].value() - Cplx(2.0)) < 1e-12);
    CHECK(sol.value_residual > 0.5);
}
