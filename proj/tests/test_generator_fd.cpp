#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "chainexit/error.hpp"
#include "chainexit/generator_fd.hpp"
#include "fixtures.hpp"

using namespace chainexit;
using namespace chainexit::testing;

namespace
{
SparseOperator assemble_1d(const ChainSpec& spec, std::size_t nodes)
{
    std::vector<std::size_t> n{nodes};
    auto grid = build_grid(spec, 1, n);
    return assemble_generator(spec, zero_policy(spec.n()), grid, spec.eps());
}

Eigen::MatrixXd dense(const SparseOperator& op)
{
    return Eigen::MatrixXd(op.matrix);
}

std::string random_linear(std::mt19937& rng, std::size_t vars, std::size_t self)
{
    std::uniform_real_distribution<double> coef(-2, 2);
    std::ostringstream os;
    os.precision(6);
    os << coef(rng);
    for (std::size_t v = 0; v < vars; ++v)
    {
        double c = v == self ? -std::abs(coef(rng)) : coef(rng);
        os << " + (" << c << ")*x" << (v + 1);
    }
    return os.str();
}
}  // namespace

TEST_CASE("grid construction")
{
    auto spec = scalar_chain("0");
    std::vector<std::size_t> five{5};
    auto g = build_grid(spec, 1, five);
    CHECK(g.spacing(0) == 0.5);
    CHECK(g.interior_size() == 3);
    CHECK(g.full_size() == 5);
    std::vector<double> pt(1);
    g.interior_point(0, pt);
    CHECK(pt[0] == -0.5);

    auto spec2 = kolmogorov_chain(0.1);
    auto g2 = build_grid(spec2, 2, five);
    CHECK(g2.interior_size() == 9);
    std::vector<std::size_t> idx(2);
    g2.interior_index(5, idx);
    CHECK(idx == std::vector<std::size_t>{2, 3});
    CHECK(g2.interior_flat(idx) == 5);
    idx[0] = 0;
    CHECK(g2.interior_flat(idx) == TensorGrid::npos);
    for (std::size_t p = 0; p < g2.interior_size(); ++p)
    {
        g2.interior_index(p, idx);
        REQUIRE(g2.interior_flat(idx) == p);
    }

    ChainDefinition def = pair_definition("-x1", "x1", 0.1);
    def.n = 4;
    def.drifts = {{"-x1"}, {"x1"}, {"x2"}, {"x3"}};
    def.domains.resize(4, Box{{-1}, {1}});
    def.controls.resize(4, scalar_controls({0}));
    def.eps = {0.1, 0.1, 0.1};
    ChainSpec four(def);
    CHECK_THROWS_WITH_AS(build_grid(four, 4, five), doctest::Contains("Monte Carlo"), SpecError);
    std::vector<std::size_t> two{2};
    CHECK_THROWS_AS(build_grid(spec, 1, two), SpecError);
}

TEST_CASE("1D Laplacian stencil")
{
    auto op = assemble_1d(scalar_chain("0"), 5);
    Eigen::MatrixXd expected(3, 3);
    expected << -4, 2, 0, 2, -4, 2, 0, 2, -4;
    CHECK((dense(op) - expected).norm() == 0.0);
    CHECK(op.boundary.size() == 2);
    CHECK(op.warnings.empty());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-dense(op));
    CHECK(es.eigenvalues()[0] == doctest::Approx(4 * (1 - std::cos(std::numbers::pi / 4))));
}

TEST_CASE("upwind direction")
{
    auto right = assemble_1d(scalar_chain("1", "0"), 11);
    Eigen::MatrixXd m = dense(right);
    const double h = 0.2;
    for (int r = 0; r + 1 < m.rows(); ++r)
    {
        CHECK(m(r, r + 1) == doctest::Approx(1 / h));
        CHECK(m(r, r) == doctest::Approx(-1 / h));
        if (r > 0)
            CHECK(m(r, r - 1) == 0.0);
    }
    auto left = dense(assemble_1d(scalar_chain("-1", "0"), 11));
    CHECK(left(3, 2) == doctest::Approx(1 / h));
    CHECK(left(3, 4) == 0.0);
}

TEST_CASE("apply")
{
    auto op = assemble_1d(scalar_chain("0.3*x1", "1 + 0.2*x1"), 21);
    std::vector<double> zero(op.size(), 0.0), ones(op.size(), 1.0);
    for (double v : chainexit::apply(op, zero))
        CHECK(v == 0.0);
    auto r = chainexit::apply(op, ones);
    for (std::size_t k = 1; k + 1 < r.size(); ++k)
        CHECK(std::abs(r[k]) <= 1e-13 * std::abs(op.matrix.coeff(int(k), int(k))));
    CHECK(r.front() < 0);
    CHECK(r.back() < 0);
    std::vector<double> wrong(3);
    CHECK_THROWS_AS(chainexit::apply(op, wrong), SpecError);
}

TEST_CASE("second-order consistency on the sine mode")
{
    auto spec = scalar_chain("0");
    std::vector<double> errs;
    for (std::size_t nodes : {21u, 41u, 81u})
    {
        std::vector<std::size_t> n{nodes};
        auto grid = build_grid(spec, 1, n);
        auto op = assemble_generator(spec, zero_policy(1), grid, spec.eps());
        std::vector<double> f(op.size()), pt(1);
        for (std::size_t p = 0; p < f.size(); ++p)
        {
            grid.interior_point(p, pt);
            f[p] = std::sin(std::numbers::pi * (pt[0] + 1) / 2);
        }
        auto lf = chainexit::apply(op, f);
        double err = 0;
        for (std::size_t p = 0; p < f.size(); ++p)
            err = std::max(err, std::abs(lf[p] + pi2_8 * f[p]));
        errs.push_back(err);
    }
    CHECK(std::log2(errs[0] / errs[1]) == doctest::Approx(2).epsilon(0.05));
    CHECK(std::log2(errs[1] / errs[2]) == doctest::Approx(2).epsilon(0.05));
}

TEST_CASE("zero drift with constant diffusion is symmetric")
{
    ChainDefinition def;
    def.n = 1;
    def.d = 2;
    def.drifts = {{"0", "0"}};
    def.sigma = {{"1", "0"}, {"0", "0.7"}};
    def.domains = {Box{{-1, 0}, {1, 2}}};
    def.controls = {scalar_controls({0})};
    ChainSpec spec(def);
    std::vector<std::size_t> n{9, 7};
    auto grid = build_grid(spec, 1, n);
    auto m = dense(assemble_generator(spec, zero_policy(1), grid, spec.eps()));
    CHECK((m - m.transpose()).norm() == 0.0);

    auto kol = kolmogorov_chain(0.2);
    std::vector<std::size_t> k{11};
    auto g2 = build_grid(kol, 2, k);
    ChainSpec driftless(pair_definition("0", "0", 0.2));
    auto m2 = dense(assemble_generator(driftless, zero_policy(2), g2, driftless.eps()));
    CHECK((m2 - m2.transpose()).norm() == 0.0);
}

TEST_CASE("cross terms trigger a diagonal-dominance warning")
{
    ChainDefinition def;
    def.n = 1;
    def.d = 2;
    def.drifts = {{"0", "0"}};
    def.sigma = {{"1", "0"}, {"0.9", "0.5"}};
    def.domains = {Box{{-1, -1}, {1, 1}}};
    def.controls = {scalar_controls({0})};
    ChainSpec spec(def);
    std::vector<std::size_t> n{9};
    auto grid = build_grid(spec, 1, n);
    auto op = assemble_generator(spec, zero_policy(1), grid, spec.eps());
    CHECK(op.has_cross_terms);
    CHECK(op.nondominant_rows == grid.interior_size());
    REQUIRE_FALSE(op.warnings.empty());
    CHECK(op.warnings[0].point.size() == 2);
    CHECK(op.warnings[0].message.find("diagonally dominant") != std::string::npos);
}

TEST_CASE("non-finite drift is rejected")
{
    auto spec = scalar_chain("1/x1");
    CHECK_THROWS_AS(assemble_1d(spec, 5), NumericError);
}

TEST_CASE("triplet export")
{
    auto op = assemble_1d(scalar_chain("0"), 5);
    std::ostringstream os;
    write_triplets(op, os);
    CHECK(os.str() == "0 0 -4\n0 1 2\n1 0 2\n1 1 -4\n1 2 2\n2 1 2\n2 2 -4\n");
}

TEST_CASE("property: M-matrix structure on random linear chains")
{
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> pos(0.3, 1.5);
    std::uniform_int_distribution<int> levels(1, 3);
    for (int trial = 0; trial < 100; ++trial)
    {
        const auto n = static_cast<std::size_t>(levels(rng));
        ChainDefinition def;
        def.n = n;
        def.d = 1;
        for (std::size_t i = 0; i < n; ++i)
        {
            def.drifts.push_back({random_linear(rng, i + 1, i)});
            def.domains.push_back(Box{{-pos(rng)}, {pos(rng)}});
            def.controls.push_back(scalar_controls({0}));
            if (i > 0)
                def.eps.push_back(pos(rng) * 0.2);
        }
        def.sigma = {{std::to_string(pos(rng))}};
        ChainSpec spec(def);
        std::vector<std::size_t> nodes{n == 3 ? 7u : 13u};
        auto grid = build_grid(spec, n, nodes);
        auto op = assemble_generator(spec, zero_policy(n), grid, spec.eps());
        REQUIRE(op.warnings.empty());
        std::vector<double> boundary_sum(op.size(), 0.0);
        for (const auto& c : op.boundary)
        {
            REQUIRE(c.value > 0);
            boundary_sum[c.row] += c.value;
        }
        for (int r = 0; r < op.matrix.outerSize(); ++r)
        {
            double row_sum = 0;
            bool has_diag = false;
            for (SparseOperator::Matrix::InnerIterator it(op.matrix, r); it; ++it)
            {
                row_sum += it.value();
                if (it.col() == r)
                    has_diag = true;
                else
                    REQUIRE(it.value() >= 0);
            }
            REQUIRE(has_diag);
            // -L has nonnegative row sums, positive exactly where the boundary couples.
            const double scale = std::abs(op.matrix.coeff(r, r));
            if (boundary_sum[static_cast<std::size_t>(r)] > 0)
                REQUIRE(-row_sum > 0);
            else
                REQUIRE(std::abs(row_sum) <= 1e-12 * scale);
        }
    }
}
