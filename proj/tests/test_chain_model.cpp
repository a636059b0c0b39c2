#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "chainexit/chain_model.hpp"
#include "chainexit/error.hpp"
#include "fixtures.hpp"

using namespace chainexit;
using namespace chainexit::testing;

TEST_CASE("spec construction rejects undefined variables")
{
    auto def = pair_definition("-x1", "x1 - x3", 0.1);
    CHECK_THROWS_WITH_AS(ChainSpec{def}, doctest::Contains("m_2"), SpecError);
    def = pair_definition("-x1 + u2", "x1", 0.1);
    CHECK_THROWS_WITH_AS(ChainSpec{def}, doctest::Contains("m_1"), SpecError);
    def = pair_definition("sin(x1", "x1", 0.1);
    CHECK_THROWS_WITH_AS(ChainSpec{def}, doctest::Contains("m_1"), SpecError);
    auto sdef = scalar_definition("0", "u1");
    CHECK_THROWS_AS(ChainSpec{sdef}, SpecError);
}

TEST_CASE("spec defaults")
{
    auto spec = ChainSpec(pair_definition("-x1", "x1 - x2", 0.25, Box{{0}, {2}}, Box{{-1}, {3}}));
    CHECK(spec.state_dim() == 2);
    CHECK(spec.eps() == std::vector<double>{0, 0.25});
    CHECK(spec.x0() == std::vector<double>{1, 1});
    auto omega = spec.product_domain(2);
    CHECK(omega.lower == std::vector<double>{0, -1});
    CHECK(omega.upper == std::vector<double>{2, 3});
    CHECK(spec.uniform_eps(0.5) == std::vector<double>{0, 0.5});
}

TEST_CASE("validate: triangular structure")
{
    auto ok = validate_spec(kolmogorov_chain(0.1));
    CHECK(ok.passed());
    CHECK(ok.find("triangular")->passed);

    auto bad = validate_spec(ChainSpec(pair_definition("x2", "x1 - x2", 0.1)));
    CHECK_FALSE(bad.passed());
    const auto* c = bad.find("triangular");
    REQUIRE(c != nullptr);
    CHECK_FALSE(c->passed);
    CHECK(c->detail.find("m_1 references x2") != std::string::npos);
    CHECK(c->witness.size() == 2);
}

TEST_CASE("validate: zero sigma fails ellipticity with a witness in D_1")
{
    auto report = validate_spec(scalar_chain("0", "0"));
    const auto* c = report.find("ellipticity");
    REQUIRE(c != nullptr);
    CHECK_FALSE(c->passed);
    CHECK(c->value == 0.0);
    REQUIRE(c->witness.size() == 1);
    CHECK(c->witness[0] > -1);
    CHECK(c->witness[0] < 1);
}

TEST_CASE("validate: other structural checks")
{
    auto def = scalar_definition("-x1 + t");
    CHECK_FALSE(validate_spec(ChainSpec(def)).find("autonomous")->passed);

    def = scalar_definition("-x1");
    def.x0 = {2.0};
    auto r = validate_spec(ChainSpec(def));
    CHECK_FALSE(r.find("initial_point")->passed);
    CHECK(r.find("initial_point")->witness == std::vector<double>{0.0});

    def = scalar_definition("-x1");
    def.controls[0].values.clear();
    CHECK_FALSE(validate_spec(ChainSpec(def)).find("control_sets")->passed);

    def = scalar_definition("-x1");
    def.domains[0] = Box{{1}, {1}};
    def.x0 = {1};
    CHECK_FALSE(validate_spec(ChainSpec(def)).find("domains")->passed);

    auto pdef = pair_definition("-x1", "x1", -0.1);
    CHECK_FALSE(validate_spec(ChainSpec(pdef)).find("parameters")->passed);

    auto sdef = pair_definition("-x1", "x1", 0.1);
    sdef.sigma = {{"1 + x2"}};
    CHECK_FALSE(validate_spec(ChainSpec(sdef)).find("sigma_first_block")->passed);
}

TEST_CASE("validate is pure and idempotent")
{
    auto spec = kolmogorov_chain(0.1);
    auto a = validate_spec(spec);
    auto b = validate_spec(spec);
    CHECK(a == b);
    CHECK(spec.eps() == std::vector<double>{0, 0.1});
}

TEST_CASE("outward drift")
{
    auto spec = kolmogorov_chain(0.1);
    auto pol = zero_policy(2);
    auto r = check_outward_drift(spec, pol, 2, 10000, 5);
    const auto& c = r.checks.at(0);
    CHECK(c.name == "outward_drift_level_2");
    CHECK_FALSE(c.passed);
    CHECK(c.value < -1.9);
    CHECK(c.value >= -2.0);
    REQUIRE(c.witness.size() == 2);
    CHECK(std::abs(std::abs(c.witness[1]) - 1) < 1e-15);

    // At y = 1, x1 = 0 the inner product is -1.
    ChainEvaluator eval(spec, pol);
    std::vector<double> x{0, 1}, m(1);
    eval.drift(1, x, m);
    CHECK(m[0] == -1.0);

    auto good = ChainSpec(pair_definition("-x1", "x1 + 2*x2", 0.1, Box{{-0.5}, {0.5}}));
    auto g = check_outward_drift(good, pol, 2, 2000, 1);
    CHECK(g.passed());
    CHECK(g.checks[0].value >= 1.5);

    CHECK_THROWS_AS(check_outward_drift(spec, pol, 1, 10, 0), SpecError);
    CHECK_THROWS_AS(check_outward_drift(spec, pol, 3, 10, 0), SpecError);
}

TEST_CASE("rank condition")
{
    auto pol = zero_policy(2);
    auto pass = check_rank_condition(kolmogorov_chain(0), pol, 100, 0);
    CHECK(pass.passed());
    CHECK(pass.checks[0].value == doctest::Approx(1.0));

    auto fail = check_rank_condition(ChainSpec(pair_definition("-x1", "x2", 0)), pol, 100, 0);
    CHECK_FALSE(fail.passed());
    CHECK(fail.checks[0].value == 0.0);
    CHECK(fail.checks[0].witness.size() == 2);

    auto sine = check_rank_condition(ChainSpec(pair_definition("-x1", "sin(x1) - x2", 0)),
                                     pol, 10000, 3);
    CHECK(sine.checks[0].value == doctest::Approx(std::cos(1.0)).epsilon(1e-3));
    CHECK(sine.checks[0].value >= std::cos(1.0));
}

TEST_CASE("property: rank fails whenever a level ignores x^1")
{
    const char* decoupled[] = {"x2", "-x2 + 3", "sin(x2)", "x2*x2 - 1", "0"};
    for (const char* m2 : decoupled)
    {
        auto r = check_rank_condition(ChainSpec(pair_definition("-x1", m2, 0)), zero_policy(2),
                                      50, 1);
        CHECK_MESSAGE(!r.passed(), m2);
    }
}

TEST_CASE("skeleton: stable linear chain settles")
{
    auto spec = kolmogorov_chain(0);
    std::vector<double> x0{1, 1};
    auto traj = simulate_deterministic(spec, zero_policy(2), x0, 0.01, 20);
    CHECK(traj.settled);
    CHECK(traj.terminal_norm < 1e-6);
    CHECK_FALSE(traj.escape_time.has_value());
    CHECK(traj.times.back() == 20.0);
}

TEST_CASE("skeleton: unstable drift blows up")
{
    auto spec = ChainSpec(pair_definition("x1", "x1 - x2", 0));
    std::vector<double> x0{1, 0};
    auto traj = simulate_deterministic(spec, zero_policy(2), x0, 0.01, 100);
    REQUIRE(traj.escape_time.has_value());
    CHECK(*traj.escape_time == doctest::Approx(std::log(1e6)).epsilon(0.02));
    CHECK_FALSE(traj.settled);
}

TEST_CASE("skeleton: exponential decay and RK4 order")
{
    auto spec = ChainSpec(pair_definition("-x1", "x1 - x2", 0));
    std::vector<double> x0{1, 0};
    auto traj = simulate_deterministic(spec, zero_policy(2), x0, 0.01, 1);
    CHECK(std::abs(traj.states.back()[0] - std::exp(-1.0)) < 1e-6);

    // x2(t) = t e^{-t} for this chain.
    auto err = [&](double dt) {
        auto tr = simulate_deterministic(spec, zero_policy(2), x0, dt, 1);
        return std::abs(tr.states.back()[1] - std::exp(-1.0));
    };
    double order = std::log2(err(0.1) / err(0.05));
    CHECK(order >= 3.5);
    CHECK_THROWS_AS(simulate_deterministic(spec, zero_policy(2), x0, 0, 1), SpecError);
}

TEST_CASE("policies: checks and lookup")
{
    auto spec = ChainSpec(scalar_definition("u1", "1", -1, 1, {-1, 1}));
    CHECK_NOTHROW(check_policy(spec, PolicyTable::constant(std::vector<std::size_t>{1})));
    CHECK_THROWS_AS(check_policy(spec, PolicyTable::constant(std::vector<std::size_t>{2})),
                    SpecError);
    CHECK_THROWS_AS(check_policy(spec, zero_policy(2)), SpecError);

    SubsystemPolicy sp;
    sp.axes = {PolicyAxis{0, -0.5, 0.5, 3}};
    sp.choice = {1, 0, 1};
    PolicyTable table({sp});
    std::vector<double> x{-0.6};
    CHECK(table.choose(0, x) == 1);
    x[0] = 0.2;
    CHECK(table.choose(0, x) == 0);
    x[0] = 9;
    CHECK(table.choose(0, x) == 1);
    sp.choice = {0, 1};
    CHECK_THROWS_AS(PolicyTable({sp}), SpecError);
}
