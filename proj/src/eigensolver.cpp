#include "chainexit/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "chainexit/error.hpp"

namespace chainexit
{
namespace
{
using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

//! Solver for A y = b with A = -L_h.
class LinearSolve
{
  public:
    LinearSolve(const SparseOperator& op, double solve_tol) : a_(-ColMatrix(op.matrix))
    {
        const ColMatrix& a = a_;
        if (op.grid_dim <= 2)
        {
            lu_ = std::make_unique<Eigen::SparseLU<ColMatrix>>();
            lu_->analyzePattern(a);
            lu_->factorize(a);
            if (lu_->info() != Eigen::Success)
                throw NumericError("sparse factorization of -L_h failed: the operator is "
                                   "singular (no absorbing boundary reachable?)");
        }
        else
        {
            it_ = std::make_unique<Iterative>();
            it_->setTolerance(solve_tol);
            it_->preconditioner().setDroptol(1e-4);
            it_->preconditioner().setFillfactor(20);
            it_->compute(a);
            if (it_->info() != Eigen::Success)
                throw NumericError("preconditioner setup for -L_h failed");
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const
    {
        if (lu_)
        {
            Eigen::VectorXd y = lu_->solve(b);
            if (lu_->info() != Eigen::Success)
                throw NumericError("sparse solve failed");
            return y;
        }
        Eigen::VectorXd y = it_->solve(b);
        if (it_->info() != Eigen::Success)
            throw NumericError("iterative solve did not reach tolerance");
        return y;
    }

  private:
    using Iterative = Eigen::BiCGSTAB<ColMatrix, Eigen::IncompleteLUT<double, int>>;
    ColMatrix a_;
    std::unique_ptr<Eigen::SparseLU<ColMatrix>> lu_;
    std::unique_ptr<Iterative> it_;
};
}  // namespace

//---------------------------------------------------------------------------//
EigenPair principal_eigenpair(const SparseOperator& op, const EigenOptions& opts)
{
    if (!(opts.tol > 0))
        throw SpecError("eigen tolerance must be positive");
    const auto n = static_cast<Eigen::Index>(op.size());
    if (n == 0)
        throw SpecError("operator has no interior nodes");
    LinearSolve solver(op, opts.solve_tol);
    const ColMatrix a = -ColMatrix(op.matrix);

    Eigen::VectorXd psi = Eigen::VectorXd::Ones(n);
    double lam_prev = 0;
    double prev_diff = 0;
    std::vector<double> ratios;
    EigenPair out;
    for (std::size_t it = 1; it <= opts.max_iter; ++it)
    {
        Eigen::VectorXd y = solver.solve(psi);
        if (!y.allFinite())
            throw NumericError("inverse iteration produced non-finite values (singular "
                               "operator)");
        Eigen::Index peak = 0;
        y.cwiseAbs().maxCoeff(&peak);
        if (!(y[peak] != 0))
            throw NumericError("inverse iteration collapsed to zero");
        // Signed normalization keeps the largest entry at +1.
        Eigen::VectorXd next = y / y[peak];
        const double diff = (next - psi).cwiseAbs().maxCoeff();
        if (it > 1 && prev_diff > 1e-10 && diff > 1e-13)
            ratios.push_back(diff / prev_diff);
        prev_diff = diff;
        psi = next;

        Eigen::VectorXd apsi = a * psi;
        const double lam = psi.dot(apsi) / psi.squaredNorm();
        const double resid = (apsi - lam * psi).cwiseAbs().maxCoeff() / psi.cwiseAbs().maxCoeff();
        out.lambda = lam;
        out.residual = resid;
        out.iterations = it;
        if (it > 1 && std::abs(lam - lam_prev) < opts.tol * std::abs(lam) && resid < opts.tol)
        {
            out.psi.assign(psi.data(), psi.data() + n);
            out.min_psi = psi.minCoeff();
            out.lost_monotonicity = out.min_psi < -opts.tol;
            if (!ratios.empty())
            {
                std::size_t tail = std::min<std::size_t>(3, ratios.size());
                double acc = 0;
                for (std::size_t k = ratios.size() - tail; k < ratios.size(); ++k)
                    acc += ratios[k];
                out.gap_ratio = acc / static_cast<double>(tail);
            }
            return out;
        }
        lam_prev = lam;
    }
    std::ostringstream os;
    os << "inverse iteration did not converge in " << opts.max_iter
       << " iterations (last lambda " << out.lambda << ", residual " << out.residual << ")";
    throw NumericError(os.str());
}

//---------------------------------------------------------------------------//
CrosscheckReport eigen_vs_mc_crosscheck(const ChainSpec& spec, const PolicyTable& policy,
                                        const SimulationSettings& settings,
                                        const McConfig& mc, const CrosscheckOptions& opts)
{
    CrosscheckReport rep;
    const auto eps = effective_eps(spec, settings);
    auto grid = build_grid(spec, settings.level, opts.nodes);
    auto op = assemble_generator(spec, policy, grid, eps);
    rep.eigen = principal_eigenpair(op, opts.eigen);
    rep.lambda_pde = rep.eigen.lambda;

    rep.curve = estimate_survival(spec, policy, settings, mc, opts.survival_points);
    rep.rate = estimate_exit_rate(rep.curve, opts.window);
    rep.lambda_mc = rep.rate.rate;
    rep.std_error = rep.rate.std_error;
    rep.rel_diff = std::abs(rep.lambda_mc - rep.lambda_pde) / rep.lambda_pde;
    rep.allowed = std::max(opts.rel_tol * rep.lambda_pde, 2 * rep.std_error);
    rep.passed = std::abs(rep.lambda_mc - rep.lambda_pde) <= rep.allowed;
    return rep;
}

}  // namespace chainexit
