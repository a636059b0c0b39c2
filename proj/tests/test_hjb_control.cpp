#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "chainexit/error.hpp"
#include "chainexit/hjb_control.hpp"
#include "fixtures.hpp"

using namespace chainexit;
using namespace chainexit::testing;

namespace
{
TensorGrid grid_1d(const ChainSpec& spec, std::size_t nodes)
{
    std::vector<std::size_t> n{nodes};
    return build_grid(spec, 1, n);
}

double eigenvalue(const ChainSpec& spec, const PolicyTable& policy, const TensorGrid& grid)
{
    EigenOptions o;
    o.tol = 1e-11;
    o.max_iter = 2000;
    return principal_eigenpair(assemble_generator(spec, policy, grid, spec.eps()), o).lambda;
}

//! Continuum optimum of m = u, |u| <= b: bang-bang toward the centre, tan(w) = w / b.
double bang_bang_rate(double b)
{
    double lo = 1e-9, hi = std::numbers::pi / 2 - 1e-12;
    for (int it = 0; it < 200; ++it)
    {
        double mid = 0.5 * (lo + hi);
        (std::tan(mid) - mid / b < 0 ? lo : hi) = mid;
    }
    double w = 0.5 * (lo + hi);
    return (w * w + b * b) / 2;
}

ChainSpec controlled_kolmogorov()
{
    auto def = pair_definition("-x1", "x1 - x2 + u1", 0.05);
    def.controls[1] = scalar_controls({-0.5, 0, 0.5});
    return ChainSpec(def);
}
}  // namespace

TEST_CASE("singleton control sets")
{
    auto spec = scalar_chain("x1 + u1", "1", -1, 1, {0.3});
    auto grid = grid_1d(spec, 41);
    auto res = policy_iteration(spec, zero_policy(1), grid, spec.eps());
    CHECK(res.sweeps == 1);
    CHECK(res.converged);
    CHECK(res.fixed_point);
    CHECK(res.lambda == doctest::Approx(eigenvalue(spec, zero_policy(1), grid)).epsilon(1e-8));
    for (auto c : res.policy.subsystem(0).choice)
        CHECK(c == 0);
}

TEST_CASE("improvement follows the gradient of a hat function")
{
    auto spec = scalar_chain("u1", "1", -1, 1, {-1, 1});
    auto grid = grid_1d(spec, 11);
    std::vector<double> psi(grid.interior_size()), pt(1);
    for (std::size_t p = 0; p < psi.size(); ++p)
    {
        grid.interior_point(p, pt);
        psi[p] = 1 - std::abs(pt[0]);
    }
    auto pol = policy_improve(spec, zero_policy(1), grid, psi);
    const auto& choice = pol.subsystem(0).choice;
    for (std::size_t p = 0; p < psi.size(); ++p)
    {
        grid.interior_point(p, pt);
        CAPTURE(pt[0]);
        if (pt[0] < -1e-12)
            CHECK(choice[p] == 1);
        else
            CHECK(choice[p] == 0);
    }
    std::vector<double> x{-0.55};
    CHECK(pol.choose(0, x) == 1);
    x[0] = 0.55;
    CHECK(pol.choose(0, x) == 0);

    psi[3] = 0;
    CHECK_THROWS_AS(policy_improve(spec, zero_policy(1), grid, psi), NumericError);
    psi.pop_back();
    CHECK_THROWS_AS(policy_improve(spec, zero_policy(1), grid, psi), SpecError);
}

TEST_CASE("controlled Brownian motion reaches the bang-bang optimum")
{
    auto spec = scalar_chain("u1", "1", -1, 1, {-0.5, 0, 0.5});
    const double oracle = bang_bang_rate(0.5);
    CHECK(oracle == doctest::Approx(0.8043).epsilon(1e-3));
    double prev_err = 1;
    for (std::size_t nodes : {101u, 201u, 401u})
    {
        auto grid = grid_1d(spec, nodes);
        auto res = policy_iteration(spec, zero_policy(1), grid, spec.eps());
        CAPTURE(nodes);
        CHECK(res.converged);
        std::vector<std::size_t> centre{1};
        CHECK(res.history.front()
              == doctest::Approx(eigenvalue(spec, PolicyTable::constant(centre), grid)));
        for (std::size_t k = 1; k < res.history.size(); ++k)
            CHECK(res.history[k] <= res.history[k - 1] + 1e-9);
        CHECK(res.lambda < pi2_8 - 0.4);
        const double err = std::abs(res.lambda - oracle);
        CHECK(err < 0.02 * oracle);
        CHECK(err < prev_err);
        prev_err = err;

        // The centre node keeps u = 0 by the tie rule; the rest push inward at full strength.
        const auto& choice = res.policy.subsystem(0).choice;
        std::vector<double> pt(1);
        for (std::size_t p = 0; p < choice.size(); ++p)
        {
            grid.interior_point(p, pt);
            if (std::abs(pt[0]) < 1e-12)
                CHECK(choice[p] == 1);
            else
                CHECK(choice[p] == (pt[0] < 0 ? 2u : 0u));
        }
    }
}

TEST_CASE("fixed point is stable under re-improvement")
{
    auto spec = scalar_chain("u1 + 0.4*sin(2*x1)", "1", -1, 1, {-0.5, 0, 0.5});
    auto grid = grid_1d(spec, 81);
    auto res = policy_iteration(spec, zero_policy(1), grid, spec.eps());
    REQUIRE(res.converged);
    auto again = policy_improve(spec, res.policy, grid, res.eigen.psi);
    CHECK(again == res.policy);
}

TEST_CASE("brute force over all node assignments")
{
    auto spec = scalar_chain("u1 + 0.3*x1", "0.8", -1, 1, {-0.5, 0, 0.5});
    auto grid = grid_1d(spec, 7);
    REQUIRE(grid.interior_size() == 5);
    auto res = policy_iteration(spec, zero_policy(1), grid, spec.eps());
    double best = std::numeric_limits<double>::infinity();
    SubsystemPolicy sp;
    sp.axes = grid.policy_axes(0, 1);
    sp.choice.assign(5, 0);
    for (int code = 0; code < 243; ++code)
    {
        int c = code;
        for (auto& v : sp.choice)
        {
            v = static_cast<std::uint32_t>(c % 3);
            c /= 3;
        }
        PolicyTable table(std::vector<SubsystemPolicy>{sp});
        best = std::min(best, eigenvalue(spec, table, grid));
    }
    CHECK(res.lambda <= best + 1e-6);
    CHECK(res.lambda >= best - 1e-6);
}

TEST_CASE("ties resolve to the smallest index")
{
    // m depends on u only through u^2, so +1 and -1 tie everywhere they win.
    for (std::vector<double> u : {std::vector<double>{-1, 1, 0}, std::vector<double>{1, -1, 0}})
    {
        auto spec = scalar_chain("-(u1^2)*x1", "1", -1, 1, u);
        auto grid = grid_1d(spec, 21);
        auto res = policy_iteration(spec, zero_policy(1), grid, spec.eps());
        std::vector<double> pt(1);
        const auto& choice = res.policy.subsystem(0).choice;
        for (std::size_t p = 0; p < choice.size(); ++p)
        {
            grid.interior_point(p, pt);
            if (std::abs(pt[0]) > 1e-12)
                CHECK(choice[p] == 0);
        }
    }
    CHECK(smallest_control(scalar_controls({1, -0.5, 0.5})) == 1);
}

TEST_CASE("sweep cap returns the best policy seen")
{
    auto spec = scalar_chain("u1", "1", -1, 1, {-0.5, 0, 0.5});
    auto grid = grid_1d(spec, 101);
    PolicyIterationOptions opts;
    opts.max_sweeps = 1;
    auto res = policy_iteration(spec, zero_policy(1), grid, spec.eps(), opts);
    CHECK_FALSE(res.converged);
    CHECK(res.sweeps == 1);
    CHECK(res.lambda == doctest::Approx(res.history.front()));
    opts.max_sweeps = 0;
    CHECK_THROWS_AS(policy_iteration(spec, zero_policy(1), grid, spec.eps(), opts), SpecError);
}

TEST_CASE("optimize_chain on a single subsystem")
{
    auto spec = scalar_chain("u1", "1", -1, 1, {-0.5, 0, 0.5});
    std::vector<std::size_t> nodes{101};
    auto chain = optimize_chain(spec, nodes, spec.eps());
    REQUIRE(chain.levels.size() == 1);
    auto direct = policy_iteration(spec, zero_policy(1), grid_1d(spec, 101), spec.eps());
    CHECK(chain.levels[0].result.lambda == doctest::Approx(direct.lambda).epsilon(1e-12));
}

TEST_CASE("optimize_chain with singleton controls reproduces fixed eigenvalues")
{
    auto spec = kolmogorov_chain(0.1);
    std::vector<std::size_t> nodes{41};
    auto chain = optimize_chain(spec, nodes, spec.eps());
    REQUIRE(chain.levels.size() == 2);
    for (std::size_t level = 1; level <= 2; ++level)
    {
        std::vector<std::size_t> n{41};
        auto grid = build_grid(spec, level, n);
        CHECK(chain.levels[level - 1].result.sweeps == 1);
        CHECK(chain.levels[level - 1].result.lambda
              == doctest::Approx(eigenvalue(spec, zero_policy(2), grid)).epsilon(1e-8));
    }
}

TEST_CASE("controlled Kolmogorov chain beats every constant control")
{
    auto spec = controlled_kolmogorov();
    std::vector<std::size_t> nodes{41};
    auto chain = optimize_chain(spec, nodes, spec.eps());
    const auto& top = chain.levels.at(1).result;
    CHECK(top.converged);
    for (std::size_t k = 1; k < top.history.size(); ++k)
        CHECK(top.history[k] <= top.history[k - 1] + 1e-9);
    std::vector<std::size_t> n{41};
    auto grid = build_grid(spec, 2, n);
    for (std::size_t c = 0; c < 3; ++c)
    {
        std::vector<std::size_t> idx{0, c};
        CHECK(top.lambda <= eigenvalue(spec, PolicyTable::constant(idx), grid) + 1e-9);
    }
}

TEST_CASE("own-state feedback is no better than joint feedback")
{
    auto spec = controlled_kolmogorov();
    std::vector<std::size_t> n{31};
    auto grid = build_grid(spec, 2, n);
    PolicyIterationOptions own;
    own.improve.mode = FeedbackMode::own_state;
    auto joint = policy_iteration(spec, zero_policy(2), grid, spec.eps());
    auto restricted = policy_iteration(spec, zero_policy(2), grid, spec.eps(), own);
    CHECK(restricted.policy.mode() == FeedbackMode::own_state);
    CHECK(restricted.policy.subsystem(1).choice.size() == 29);
    CHECK(restricted.lambda >= joint.lambda - 1e-9);
}
