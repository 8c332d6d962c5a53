#include "supiverify/catalog.hpp"

#include <catch2/catch_amalgamated.hpp>

using sv::Cplx;
using sv::Geometry;
using sv::Jet;
using sv::SystemSpec;
using sv::TensorJet;
using sv::TensorValue;

namespace {

double killing_equation_residual(const SystemSpec& sys, std::size_t k,
                                 const std::vector<Cplx>& pt) {
    Geometry geo = sv::system_geometry(sys, pt);
    TensorJet kt = sv::killing_jets(sys, k, pt, 2);
    TensorJet dk = sv::cov_derivative(kt, geo);
    TensorValue sym = sv::symmetrize(tensor_value(dk), {0, 1, 2});
    return sv::max_abs(sym) / (1.0 + sv::max_abs(tensor_value(kt)));
}

} // namespace

TEST_CASE("catalog lists eleven systems and validates each") {
    REQUIRE(sv::catalog_names().size() == 11);
    for (const auto& name : sv::catalog_names()) {
        SystemSpec sys = sv::get_system(name);
        REQUIRE(sys.name == name);
        REQUIRE_NOTHROW(sv::validate_system(sys));
        REQUIRE(sys.potentials.size() == static_cast<std::size_t>(sys.dim) + 2);
        REQUIRE(sys.params.size() == sys.potentials.size());
    }
}

TEST_CASE("unknown system names come back with suggestions") {
    try {
        sv::get_system("sphere-generic");
        FAIL("expected an error");
    } catch (const sv::error& e) {
        std::string msg = e.what();
        REQUIRE(msg.find("sphere-generic-3") != std::string::npos);
    }
    REQUIRE_THROWS_AS(sv::get_system("XIV"), sv::error);
}

TEST_CASE("lookup is case insensitive") {
    REQUIRE(sv::get_system("iii").name == "III");
    REQUIRE(sv::get_system("Oo").name == "OO");
}

TEST_CASE("spec serialization round-trips") {
    for (const auto& name : {"I", "III", "sphere-generic-3"}) {
        SystemSpec sys = sv::get_system(name);
        std::string text = sv::serialize_spec(sys);
        SystemSpec back = sv::parse_spec(text);
        REQUIRE(sv::serialize_spec(back) == text);
        REQUIRE(back.coords == sys.coords);
        REQUIRE(back.killing.size() == sys.killing.size());
    }
}

TEST_CASE("sample spec file loads and matches the built-in system IV") {
    SystemSpec file = sv::load_spec_file("samples/system-iv.json");
    SystemSpec builtin = sv::get_system("IV");
    REQUIRE(file.potentials == builtin.potentials);
    REQUIRE(file.tbar_expr == builtin.tbar_expr);
    std::vector<Cplx> pt = sv::box_midpoint(builtin);
    auto a = sv::potential_jets(file, pt, 2);
    auto b = sv::potential_jets(builtin, pt, 2);
    for (std::size_t m = 0; m < a.size(); ++m)
        REQUIRE((a[m] - b[m]).max_abs() < 1e-14);
}

TEST_CASE("schema violations name the offending field") {
    SystemSpec sys = sv::get_system("IV");
    sys.potentials.pop_back();
    try {
        sv::validate_system(sys);
        FAIL("expected an error");
    } catch (const sv::error& e) {
        REQUIRE(std::string(e.what()).find("potentials") != std::string::npos);
    }

    sys = sv::get_system("IV");
    sys.metric[0][1] = "1 +";
    try {
        sv::validate_system(sys);
        FAIL("expected an error");
    } catch (const sv::error& e) {
        std::string msg = e.what();
        REQUIRE(msg.find("metric[0][1]") != std::string::npos);
        REQUIRE(msg.find("position") != std::string::npos);
    }

    REQUIRE_THROWS_AS(sv::parse_spec("{\"name\": \"x\"}"), sv::error);
    REQUIRE_THROWS_AS(sv::parse_spec("not json"), sv::error);
}

TEST_CASE("point sampling is seeded and stays inside the box") {
    SystemSpec sys = sv::get_system("I");
    auto a = sv::sample_points(sys, 5, 42);
    auto b = sv::sample_points(sys, 5, 42);
    auto c = sv::sample_points(sys, 5, 43);
    REQUIRE(a == b);
    REQUIRE(a != c);
    for (const auto& pt : a) {
        REQUIRE(pt.size() == 3);
        for (std::size_t k = 0; k < 3; ++k) {
            REQUIRE(pt[k].real() >= sys.box[k][0]);
            REQUIRE(pt[k].real() <= sys.box[k][1]);
            REQUIRE(pt[k].imag() == 0.0);
        }
    }
}

TEST_CASE("shipped Killing tensors satisfy the Killing equation") {
    for (const auto& name : {"I", "O", "sphere-generic-3"}) {
        SystemSpec sys = sv::get_system(name);
        REQUIRE(sys.killing.size() == 6);
        auto pts = sv::sample_points(sys, 3, 42);
        for (std::size_t k = 0; k < sys.killing.size(); ++k)
            for (const auto& pt : pts)
                REQUIRE(killing_equation_residual(sys, k, pt) < 1e-10);
    }
}

TEST_CASE("sphere Killing tensors sum to the round metric") {
    SystemSpec sys = sv::get_system("sphere-generic-3");
    auto pts = sv::sample_points(sys, 3, 7);
    for (const auto& pt : pts) {
        Geometry geo = sv::system_geometry(sys, pt);
        TensorJet sum = sv::killing_jets(sys, 0, pt, 0);
        for (std::size_t k = 1; k < sys.killing.size(); ++k)
            sum += sv::killing_jets(sys, k, pt, 0);
        sv::TensorValue diff = tensor_value(sum) - tensor_value(geo.metric_jets().g);
        REQUIRE(sv::max_abs(diff) < 1e-12);
    }
}

TEST_CASE("combined potential is the default-parameter family member") {
    SystemSpec sys = sv::get_system("I");
    std::vector<Cplx> pt = sv::box_midpoint(sys);
    Jet v = sv::combined_potential_jet(sys, pt, 2);
    auto basis = sv::potential_jets(sys, pt, 2);
    Jet acc = basis[0] * Cplx(sys.params[0].second);
    for (std::size_t m = 1; m < basis.size(); ++m) acc += basis[m] * Cplx(sys.params[m].second);
    REQUIRE((v - acc).max_abs() == 0.0);
}
