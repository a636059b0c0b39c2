#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "chainexit/eigensolver.hpp"
#include "chainexit/generator_fd.hpp"
#include "chainexit/policy.hpp"

namespace chainexit
{

struct ImproveOptions
{
    FeedbackMode mode = FeedbackMode::joint;
    //! Hamiltonian values within tie_tol * (1 + max |H|) count as equal.
    double tie_tol = 1e-10;
};

/*!
 * Hamiltonian maximizer for the grid's top level given psi.
 *
 * Lower levels keep their entries from \a policy; the result's top-level
 * entry is a table over the grid's interior nodes (joint) or over the
 * level's own coordinates (own_state).
 */
PolicyTable policy_improve(const ChainSpec& spec, const PolicyTable& policy,
                           const TensorGrid& grid, std::span<const double> psi,
                           const ImproveOptions& opts = {});

//! Discrete Hamiltonian <grad_h psi, m_l(x_p, u)> with upwinding per candidate.
double discrete_hamiltonian(const ChainSpec& spec, ChainEvaluator& eval,
                            const TensorGrid& grid, std::span<const double> psi,
                            std::size_t p, std::span<const double> x,
                            std::span<const double> u);

struct PolicyIterationOptions
{
    double tol = 1e-9;
    std::size_t max_sweeps = 50;
    ImproveOptions improve;
    EigenOptions eigen{1e-10, 1000, 1e-12};
    //! Starting control index for the top level; default is the smallest-norm control.
    std::optional<std::size_t> initial_index;
};

struct PolicyIterationResult
{
    double lambda = 0;
    EigenPair eigen;
    PolicyTable policy;
    std::vector<double> history;
    std::size_t sweeps = 0;
    bool converged = false;
    //! Last improvement step returned the evaluated policy unchanged.
    bool fixed_point = false;
};

//! Index of the control with the smallest Euclidean norm (ties: smallest index).
std::size_t smallest_control(const ControlSet& set);

//! Policy with level (grid.level()) replaced by a per-node table of \a index.
PolicyTable constant_on_grid(const PolicyTable& policy, const TensorGrid& grid,
                             std::size_t index, FeedbackMode mode);

PolicyIterationResult policy_iteration(const ChainSpec& spec, const PolicyTable& base,
                                       const TensorGrid& grid, std::span<const double> eps,
                                       const PolicyIterationOptions& opts = {});

struct LadderStep
{
    std::size_t level = 0;
    PolicyIterationResult result;
};

struct ChainOptimum
{
    std::vector<LadderStep> levels;
    //! Optimized policies for levels 1..n, frozen one after another.
    PolicyTable policy;
};

//! Sequentially optimizes level 1, freezes it, then level 2, and so on.
ChainOptimum optimize_chain(const ChainSpec& spec, std::span<const std::size_t> nodes,
                            std::span<const double> eps,
                            const PolicyIterationOptions& opts = {});

}  // namespace chainexit
