#include "supiverify/geometry.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using sv::Cplx;
using sv::Expression;
using sv::Geometry;
using sv::Jet;
using sv::TensorJet;
using sv::TensorValue;
using sv::Var;
using sv::parse_expression;

namespace {

const std::map<std::string, Cplx> nopar;

std::vector<std::vector<Expression>> metric_from_strings(
    const std::vector<std::vector<std::string>>& rows,
    const std::vector<std::string>& coords) {
    std::vector<std::vector<Expression>> out;
    for (const auto& r : rows) {
        out.emplace_back();
        for (const auto& e : r) out.back().push_back(parse_expression(e, coords, {}));
    }
    return out;
}

Geometry euclidean3(const std::vector<Cplx>& p) {
    auto g = metric_from_strings({{"1", "0", "0"}, {"0", "1", "0"}, {"0", "0", "1"}},
                                 {"x", "y", "z"});
    return sv::make_geometry(g, p, nopar);
}

Geometry sphere3(const std::vector<Cplx>& p) {
    auto g = metric_from_strings({{"1", "0", "0"},
                                  {"0", "sin(p)^2", "0"},
                                  {"0", "0", "sin(p)^2 * sin(q)^2"}},
                                 {"p", "q", "r"});
    return sv::make_geometry(g, p, nopar);
}

Geometry halfplane3(const std::vector<Cplx>& p) {
    // ds^2 = (dx^2 + dz dw) / z^2 with w playing the role of the conjugate
    auto g = metric_from_strings({{"z^(-2)", "0", "0"},
                                  {"0", "0", "1/(2*z^2)"},
                                  {"0", "1/(2*z^2)", "0"}},
                                 {"x", "z", "w"});
    return sv::make_geometry(g, p, nopar);
}

// finite-difference curvature oracle built directly from metric values
using MatFn = std::function<std::vector<std::vector<Cplx>>(const std::vector<Cplx>&)>;

std::vector<std::vector<Cplx>> fd_dmetric(const MatFn& g, const std::vector<Cplx>& p,
                                          int k, int n, double h) {
    auto shift = [&](double s) {
        std::vector<Cplx> q = p;
        q[static_cast<std::size_t>(k)] += s;
        return g(q);
    };
    auto d = [&](double step) {
        auto plus = shift(step);
        auto minus = shift(-step);
        std::vector<std::vector<Cplx>> out(static_cast<std::size_t>(n),
                                           std::vector<Cplx>(static_cast<std::size_t>(n)));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out[i][j] = (plus[i][j] - minus[i][j]) / (2.0 * step);
        return out;
    };
    auto coarse = d(h), fine = d(h / 2.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            fine[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
    return fine;
}

std::vector<std::vector<std::vector<Cplx>>> fd_christoffel(const MatFn& g,
                                                           const std::vector<Cplx>& p,
                                                           int n, double h) {
    auto gv = g(p);
    Eigen::MatrixXcd gm(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gm(i, j) = gv[i][j];
    Eigen::MatrixXcd gi = gm.inverse();
    std::vector<std::vector<std::vector<Cplx>>> dg;
    for (int k = 0; k < n; ++k) dg.push_back(fd_dmetric(g, p, k, n, h));
    std::vector<std::vector<std::vector<Cplx>>> gamma(
        static_cast<std::size_t>(n),
        std::vector<std::vector<Cplx>>(static_cast<std::size_t>(n),
                                       std::vector<Cplx>(static_cast<std::size_t>(n), Cplx(0.0))));
    for (int m = 0; m < n; ++m)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Cplx acc(0.0);
                for (int a = 0; a < n; ++a)
                    acc += gi(m, a) * (dg[i][a][j] + dg[j][a][i] - dg[a][i][j]);
                gamma[m][i][j] = 0.5 * acc;
            }
    return gamma;
}

Cplx fd_scalar_curvature(const MatFn& g, const std::vector<Cplx>& p, int n, double h) {
    auto gamma = fd_christoffel(g, p, n, h);
    // dGamma by finite differences of the Christoffel oracle
    std::vector<std::vector<std::vector<std::vector<Cplx>>>> dgamma;
    for (int k = 0; k < n; ++k) {
        auto central = [&](double step) {
            std::vector<Cplx> plus = p, minus = p;
            plus[static_cast<std::size_t>(k)] += step;
            minus[static_cast<std::size_t>(k)] -= step;
            auto gp = fd_christoffel(g, plus, n, h);
            auto gm = fd_christoffel(g, minus, n, h);
            std::vector<std::vector<std::vector<Cplx>>> d(
                static_cast<std::size_t>(n),
                std::vector<std::vector<Cplx>>(static_cast<std::size_t>(n),
                                               std::vector<Cplx>(static_cast<std::size_t>(n))));
            for (int m = 0; m < n; ++m)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        d[m][i][j] = (gp[m][i][j] - gm[m][i][j]) / (2.0 * step);
            return d;
        };
        auto coarse = central(h), fine = central(h / 2.0);
        for (int m = 0; m < n; ++m)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    fine[m][i][j] = (4.0 * fine[m][i][j] - coarse[m][i][j]) / 3.0;
        dgamma.push_back(fine);
    }
    auto gv = g(p);
    Eigen::MatrixXcd gm(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gm(i, j) = gv[i][j];
    Eigen::MatrixXcd gi = gm.inverse();
    Cplx scalar(0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            // Ricci_ij = R^a_iaj
            Cplx ric(0.0);
            for (int a = 0; a < n; ++a) {
                Cplx r = dgamma[a][a][i][j] - dgamma[j][a][i][a];
                for (int b = 0; b < n; ++b)
                    r += gamma[a][a][b] * gamma[b][i][j] - gamma[a][j][b] * gamma[b][i][a];
                ric += r;
            }
            scalar += gi(i, j) * ric;
        }
    return scalar;
}

} // namespace

TEST_CASE("euclidean space is flat") {
    Geometry geo = euclidean3({Cplx(0.4), Cplx(-1.2), Cplx(2.0)});
    CHECK(sv::max_abs(geo.curvature().christoffel) < 1e-13);
    CHECK(sv::max_abs(geo.curvature().riemann) < 1e-13);
    CHECK(sv::max_abs(geo.curvature().ricci) < 1e-13);
    CHECK(geo.curvature().scalar.max_abs() < 1e-13);
    CHECK(sv::max_abs(geo.curvature().weyl) < 1e-13);
}

TEST_CASE("unit sphere curvature") {
    std::vector<Cplx> p = {Cplx(1.1), Cplx(0.8), Cplx(0.4)};
    Geometry geo = sphere3(p);
    CHECK(std::abs(geo.curvature().scalar.value() - Cplx(6.0)) < 1e-10);

    // Ricci = (n-1) g on the unit sphere
    TensorValue ric = tensor_value(geo.curvature().ricci);
    TensorValue g = tensor_value(geo.metric_jets().g);
    CHECK(sv::max_abs(ric - 2.0 * g) < 1e-10);

    // first Bianchi identity
    TensorJet cyc = sv::antisymmetrize(geo.curvature().riemann_down, {1, 2, 3});
    CHECK(sv::max_abs(cyc) < 1e-9);

    // scalar curvature is constant: jet coefficients beyond the value vanish
    Jet r = geo.curvature().scalar;
    for (int k = 1; k < r.size(); ++k) CHECK(std::abs(r.coeff(k)) < 1e-9);
}

TEST_CASE("half-plane style metric: flat with vanishing Weyl") {
    std::vector<Cplx> p = {Cplx(0.5, -0.2), Cplx(0.8, 0.3), Cplx(1.1, 0.4)};
    Geometry geo = halfplane3(p);
    CHECK(sv::max_abs(geo.curvature().weyl) < 1e-10);
    // this metric is conformally and in fact properly flat
    CHECK(sv::max_abs(geo.curvature().riemann) < 1e-9);

    auto fn = [&](const std::vector<Cplx>& q) {
        Cplx z2 = q[1] * q[1];
        return std::vector<std::vector<Cplx>>{
            {1.0 / z2, Cplx(0.0), Cplx(0.0)},
            {Cplx(0.0), Cplx(0.0), 0.5 / z2},
            {Cplx(0.0), 0.5 / z2, Cplx(0.0)}};
    };
    Cplx fd = fd_scalar_curvature(fn, p, 3, 1e-3);
    CHECK(std::abs(geo.curvature().scalar.value() - fd) < 1e-6);
}

TEST_CASE("scalar curvature matches the finite-difference oracle on the sphere") {
    std::vector<Cplx> p = {Cplx(1.2), Cplx(0.9), Cplx(0.5)};
    Geometry geo = sphere3(p);
    auto fn = [](const std::vector<Cplx>& q) {
        Cplx s1 = std::sin(q[0]), s2 = std::sin(q[1]);
        return std::vector<std::vector<Cplx>>{
            {Cplx(1.0), Cplx(0.0), Cplx(0.0)},
            {Cplx(0.0), s1 * s1, Cplx(0.0)},
            {Cplx(0.0), Cplx(0.0), s1 * s1 * s2 * s2}};
    };
    Cplx fd = fd_scalar_curvature(fn, p, 3, 1e-3);
    CHECK(std::abs(geo.curvature().scalar.value() - fd) < 1e-6);
}

TEST_CASE("metricity and torsion-free") {
    std::vector<Cplx> p = {Cplx(1.0), Cplx(0.7), Cplx(0.3)};
    Geometry geo = sphere3(p);
    TensorJet dg = sv::cov_derivative(geo.metric_jets().g, geo);
    CHECK(sv::max_abs(dg) < 1e-10);

    Expression f = parse_expression("p^2*q + sin(p*r)", {"p", "q", "r"}, {});
    Jet fj = f.eval_jet(p, nopar, 3);
    TensorJet hess = sv::hessian(fj, geo);
    TensorJet anti = hess - sv::permuted(hess, {1, 0});
    CHECK(sv::max_abs(anti) < 1e-10);
}

TEST_CASE("Ricci identity on the sphere") {
    std::vector<Cplx> p = {Cplx(1.05), Cplx(0.75), Cplx(0.35)};
    Geometry geo = sphere3(p);
    Expression f = parse_expression("p^2*q + sin(p*r) + cos(q)", {"p", "q", "r"}, {});
    Jet fj = f.eval_jet(p, nopar, 3);

    TensorJet v1 = sv::gradient(fj, geo);
    TensorJet v3 = sv::cov_derivative(sv::cov_derivative(v1, geo), geo);
    TensorValue lhs = tensor_value(v3 - sv::permuted(v3, {0, 2, 1}));

    TensorValue riem = tensor_value(geo.curvature().riemann);
    TensorValue grad = tensor_value(v1);
    TensorValue rhs(3, lhs.valence(), Cplx(0.0));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                Cplx acc(0.0);
                for (int m = 0; m < 3; ++m) acc += riem.at({m, i, j, k}) * grad.at({m});
                rhs.at({i, j, k}) = acc;
            }
    CHECK(sv::max_abs(lhs - rhs) < 1e-7);
}

TEST_CASE("contracted Bianchi identity") {
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<Cplx> p = {Cplx(0.9 + 0.1 * trial), Cplx(0.6 + 0.05 * trial),
                               Cplx(0.3)};
        Geometry geo = sphere3(p);
        TensorJet de = sv::cov_derivative(geo.curvature().einstein, geo);
        TensorValue div = tensor_value(sv::trace_slots(de, 0, 2, geo.metric_jets()));
        CHECK(sv::max_abs(div) < 1e-7);
    }
    std::vector<Cplx> p = {Cplx(0.5, -0.2), Cplx(0.8, 0.3), Cplx(1.1, 0.4)};
    Geometry geo = halfplane3(p);
    TensorJet de = sv::cov_derivative(geo.curvature().einstein, geo);
    CHECK(sv::max_abs(tensor_value(sv::trace_slots(de, 0, 2, geo.metric_jets()))) < 1e-7);
}

TEST_CASE("Ricci decomposition reconstructs the curvature tensor") {
    std::vector<Cplx> p = {Cplx(1.15), Cplx(0.65), Cplx(0.45)};
    // the conformal factor makes the tracefree Ricci part nonzero, so the
    // middle coefficient of the decomposition is actually exercised
    auto gm = metric_from_strings({{"exp(2*x)", "0", "0"},
                                   {"0", "exp(2*x)", "0"},
                                   {"0", "0", "exp(2*x)"}},
                                  {"x", "y", "z"});
    for (Geometry geo : {sphere3(p), sv::make_geometry(gm, p, nopar)}) {
        const auto& c = geo.curvature();
        const auto& m = geo.metric_jets();
        double n = geo.dim();
        sv::YoungSpec spec{{{0, 2}, {1, 3}}, true, false};
        TensorJet rg = sv::permuted(sv::outer(c.ricci_tracefree, m.g), {0, 2, 1, 3});
        TensorJet gg = sv::permuted(sv::outer(m.g, m.g), {0, 2, 1, 3});
        TensorJet recon = c.weyl + (1.0 / (4.0 * (n - 2.0))) * sv::young_project(rg, spec, m) +
                          (c.scalar / (8.0 * n * (n - 1.0))) * sv::young_project(gg, spec, m);
        CHECK(sv::max_abs(tensor_value(recon - c.riemann_down)) < 1e-8);

        // Weyl is fully tracefree, and vanishes identically in dimension three
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                CHECK(sv::max_abs(tensor_value(sv::trace_slots(c.weyl, a, b, m))) < 1e-9);
        CHECK(sv::max_abs(tensor_value(c.weyl)) < 1e-9);
    }
}

TEST_CASE("flat Laplacian and invariant operators") {
    std::vector<Cplx> p = {Cplx(0.3), Cplx(-0.4), Cplx(0.9)};
    Geometry geo = euclidean3(p);
    Expression f = parse_expression("x^2 + y^2 + z^2", {"x", "y", "z"}, {});
    Jet fj = f.eval_jet(p, nopar, 4);
    CHECK(std::abs(sv::laplacian(fj, geo).value() - Cplx(6.0)) < 1e-12);

    Expression x2 = parse_expression("x^2", {"x", "y", "z"}, {});
    TensorJet h = sv::tracefree_hessian(x2.eval_jet(p, nopar, 4), geo);
    TensorValue hv = tensor_value(h);
    CHECK(std::abs(hv.at({0, 0}) - Cplx(4.0 / 3.0)) < 1e-12);
    CHECK(std::abs(hv.at({1, 1}) + Cplx(2.0 / 3.0)) < 1e-12);
    CHECK(std::abs(hv.at({2, 2}) + Cplx(2.0 / 3.0)) < 1e-12);
    CHECK(std::abs(hv.at({0, 1})) < 1e-12);

    Geometry sph = sphere3({Cplx(1.0), Cplx(0.7), Cplx(0.3)});
    Jet one = Jet::constant(sv::jet_space(3, 4), Cplx(1.0));
    CHECK(std::abs(sv::conformal_laplacian(one, sph).value() - Cplx(6.0)) < 1e-10);
}

TEST_CASE("conformal covariance of the conformal Laplacian") {
    std::vector<Cplx> p = {Cplx(1.1), Cplx(0.8), Cplx(0.4)};
    std::vector<std::string> co = {"p", "q", "r"};
    Geometry geo = sphere3(p);

    Expression om = parse_expression("exp(0.1*p + 0.2*q - 0.15*r)", co, {});
    Expression f = parse_expression("1 + p*q + sin(r)", co, {});
    Jet omj = om.eval_jet(p, nopar, 4);
    Jet fj = f.eval_jet(p, nopar, 4);

    std::vector<std::vector<Jet>> ghat(3, std::vector<Jet>(3));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            ghat[i][j] = omj * omj * geo.metric_jets().g.at({i, j});
    Geometry hat(ghat, p);

    Jet lhs = sv::conformal_laplacian(pow(omj, -0.5) * fj, hat);
    Cplx rhs = std::pow(omj.value(), Cplx(-2.5)) *
               sv::conformal_laplacian(fj, geo).value();
    CHECK(std::abs(lhs.value() - rhs) < 1e-6);
}

TEST_CASE("Weyl connection with vanishing gradient reduces to the Levi-Civita derivative") {
    std::vector<Cplx> p = {Cplx(1.0), Cplx(0.7), Cplx(0.3)};
    Geometry geo = sphere3(p);
    const sv::JetSpace& s2 = sv::jet_space(3, 2);

    // a symmetric tracefree jet-valued 3-tensor with polynomial entries
    TensorJet s0 = sv::make_jet_tensor(3, {Var::Down, Var::Down, Var::Down}, s2);
    for (std::size_t k = 0; k < s0.size(); ++k)
        s0[k] = Jet::coordinate(s2, static_cast<int>(k % 3), p[k % 3]) *
                oracle::random_cplx();
    TensorJet s = sv::tracefree_part(sv::symmetrize(s0, {0, 1, 2}), geo.metric_jets(),
                                     {0, 1, 2});
    TensorJet zero = sv::make_jet_tensor(3, {Var::Down}, s2);
    TensorJet lhs = sv::weyl_connection_derivative(s, zero, geo);
    TensorJet rhs = sv::cov_derivative(s, geo);
    CHECK(sv::max_abs(tensor_value(lhs - rhs)) < 1e-10);
}

TEST_CASE("low dimension and singular metrics are rejected") {
    auto g2 = metric_from_strings({{"1", "0"}, {"0", "1"}}, {"x", "y"});
    CHECK_THROWS_AS(sv::make_geometry(g2, {Cplx(0.0), Cplx(0.0)}, nopar), sv::error);

    auto gs = metric_from_strings({{"x", "0", "0"}, {"0", "x", "0"}, {"0", "0", "x"}},
                                  {"x", "y", "z"});
    CHECK_THROWS_AS(sv::make_geometry(gs, {Cplx(0.0), Cplx(1.0), Cplx(1.0)}, nopar),
                    sv::error);
}
