#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "chainexit/generator_fd.hpp"
#include "chainexit/sde_sim.hpp"

namespace chainexit
{

struct EigenPair
{
    double lambda = 0;
    //! Interior field, max entry 1.
    std::vector<double> psi;
    //! sup |(-L_h) psi - lambda psi|.
    double residual = 0;
    std::size_t iterations = 0;
    //! Observed contraction of the iteration, an estimate of lambda_1 / |lambda_2|.
    double gap_ratio = 0;
    double min_psi = 0;
    //! Converged psi dipped below -tol somewhere.
    bool lost_monotonicity = false;
};

struct EigenOptions
{
    double tol = 1e-8;
    std::size_t max_iter = 500;
    //! Relative tolerance of the inner iterative solve (3D grids).
    double solve_tol = 1e-12;
};

//! Principal eigenpair of -L_h by inverse power iteration with zero shift.
EigenPair principal_eigenpair(const SparseOperator& op, const EigenOptions& opts = {});

struct CrosscheckReport
{
    double lambda_pde = 0;
    double lambda_mc = 0;
    double std_error = 0;
    double rel_diff = 0;
    //! Allowed |lambda_pde - lambda_mc|: max(rel_tol * lambda_pde, 2 std errors).
    double allowed = 0;
    bool passed = false;
    EigenPair eigen;
    SurvivalCurve curve;
    RateEstimate rate;
};

struct CrosscheckOptions
{
    std::vector<std::size_t> nodes{101};
    double rel_tol = 0.05;
    std::optional<std::pair<double, double>> window;
    std::size_t survival_points = 200;
    EigenOptions eigen;
};

//! PDE eigenvalue against the Monte Carlo tail rate on the same regularized chain.
CrosscheckReport eigen_vs_mc_crosscheck(const ChainSpec& spec, const PolicyTable& policy,
                                        const SimulationSettings& settings,
                                        const McConfig& mc, const CrosscheckOptions& opts);

}  // namespace chainexit
