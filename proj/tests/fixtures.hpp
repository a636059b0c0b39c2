#pragma once

// Small chain definitions shared by the test binaries.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "chainexit/chain_model.hpp"
#include "chainexit/policy.hpp"

namespace chainexit::testing
{

inline ControlSet scalar_controls(std::vector<double> values)
{
    ControlSet c;
    c.dim = 1;
    for (double v : values)
        c.values.push_back({v});
    return c;
}

//! dx = m dt + sigma dW on (lo, hi).
inline ChainDefinition scalar_definition(std::string drift, std::string sigma = "1",
                                         double lo = -1, double hi = 1,
                                         std::vector<double> controls = {0.0})
{
    ChainDefinition def;
    def.n = 1;
    def.d = 1;
    def.drifts = {{std::move(drift)}};
    def.sigma = {{std::move(sigma)}};
    def.domains = {Box{{lo}, {hi}}};
    def.controls = {scalar_controls(std::move(controls))};
    def.horizon = 1;
    return def;
}

inline ChainSpec scalar_chain(std::string drift, std::string sigma = "1", double lo = -1,
                              double hi = 1, std::vector<double> controls = {0.0})
{
    return ChainSpec(scalar_definition(std::move(drift), std::move(sigma), lo, hi,
                                       std::move(controls)));
}

//! Two scalar subsystems: m_1, m_2 with sigma on block 1.
inline ChainDefinition pair_definition(std::string m1, std::string m2, double eps2,
                                       Box d1 = Box{{-1}, {1}}, Box d2 = Box{{-1}, {1}})
{
    ChainDefinition def;
    def.n = 2;
    def.d = 1;
    def.drifts = {{std::move(m1)}, {std::move(m2)}};
    def.sigma = {{"1"}};
    def.domains = {std::move(d1), std::move(d2)};
    def.controls = {scalar_controls({0.0}), scalar_controls({0.0})};
    def.eps = {eps2};
    def.horizon = 1;
    return def;
}

//! m_1 = -x1, m_2 = x1 - x2, sigma = 1 on (-1, 1)^2.
inline ChainSpec kolmogorov_chain(double eps2)
{
    return ChainSpec(pair_definition("-x1", "x1 - x2", eps2));
}

inline PolicyTable zero_policy(std::size_t n)
{
    return PolicyTable::constant(std::vector<std::size_t>(n, 0));
}

inline constexpr double pi2_8 = std::numbers::pi * std::numbers::pi / 8;

//! Discrete Dirichlet eigenvalue of -(D u'' + b u') with upwinding on (-1, 1).
inline double upwind_eigenvalue(double diff, double b, double h)
{
    const double p = diff / (h * h) + std::abs(b) / h;
    const double q = diff / (h * h);
    const double n = 2 / h - 1;
    return 2 * diff / (h * h) + std::abs(b) / h
           - 2 * std::sqrt(p * q) * std::cos(std::numbers::pi / (n + 1));
}

}  // namespace chainexit::testing
