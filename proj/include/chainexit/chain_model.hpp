#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chainexit/expr.hpp"
#include "chainexit/policy.hpp"

namespace chainexit
{

//! Axis-aligned box in R^d.
struct Box
{
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const noexcept { return lower.size(); }
    bool contains_open(std::span<const double> x) const noexcept;
    bool contains_closed(std::span<const double> x) const noexcept;
};

//! Finite control set U_i: each entry is a vector in R^{r_i}.
struct ControlSet
{
    std::size_t dim = 1;
    std::vector<std::vector<double>> values;
};

//! Plain-text problem definition, as read from a config file.
struct ChainDefinition
{
    std::size_t n = 1;
    std::size_t d = 1;
    //! drifts[i][k]: component k of subsystem i (0-based).
    std::vector<std::vector<std::string>> drifts;
    //! sigma[r][c]: d rows, m columns.
    std::vector<std::vector<std::string>> sigma;
    std::vector<Box> domains;
    std::vector<ControlSet> controls;
    //! Regularization intensities for subsystems 2..n (size n-1).
    std::vector<double> eps;
    double horizon = 1;
    //! Flattened initial state (size n*d).
    std::vector<double> x0;
};

//---------------------------------------------------------------------------//
/*!
 * Chain of n subsystems of dimension d. Noise sigma(x^1) dW enters only
 * subsystem 1; subsystem i's drift may depend on x^1..x^i and on u_i.
 *
 * Construction parses every expression and rejects variables that do not
 * exist (x beyond n*d, u beyond the subsystem's control dimension, controls
 * inside sigma). Structural properties such as triangularity are left to
 * validate_spec().
 */
class ChainSpec
{
  public:
    explicit ChainSpec(const ChainDefinition& def);

    std::size_t n() const noexcept { return n_; }
    std::size_t d() const noexcept { return d_; }
    std::size_t noise_dim() const noexcept { return m_; }
    std::size_t state_dim() const noexcept { return n_ * d_; }

    const expr::Expression& drift(std::size_t i, std::size_t k) const
    {
        return drifts_.at(i).at(k);
    }
    const expr::Expression& sigma(std::size_t r, std::size_t c) const
    {
        return sigma_.at(r * m_ + c);
    }
    const Box& domain(std::size_t i) const { return domains_.at(i); }
    const ControlSet& controls(std::size_t i) const { return controls_.at(i); }

    //! Size-n vector; entry 0 is unused and always zero.
    const std::vector<double>& eps() const noexcept { return eps_; }
    double horizon() const noexcept { return horizon_; }
    const std::vector<double>& x0() const noexcept { return x0_; }

    //! Product box Omega_level over the first \a level subsystems.
    Box product_domain(std::size_t level) const;

    //! eps vector with entries 2..n set to \a value.
    std::vector<double> uniform_eps(double value) const;

    const ChainDefinition& definition() const noexcept { return def_; }

  private:
    ChainDefinition def_;
    std::size_t n_;
    std::size_t d_;
    std::size_t m_;
    std::vector<std::vector<expr::Expression>> drifts_;
    std::vector<expr::Expression> sigma_;
    std::vector<Box> domains_;
    std::vector<ControlSet> controls_;
    std::vector<double> eps_;
    double horizon_;
    std::vector<double> x0_;
};

//! Policy indices within range of the spec's control sets.
void check_policy(const ChainSpec& spec, const PolicyTable& policy);

//---------------------------------------------------------------------------//
/*!
 * Drift and diffusion evaluation with per-worker scratch.
 *
 * Not thread-safe; create one per worker.
 */
class ChainEvaluator
{
  public:
    ChainEvaluator(const ChainSpec& spec, const PolicyTable& policy);

    //! Controlled drift m_i(x, kappa_i(x)) for subsystem i (0-based).
    void drift(std::size_t i, std::span<const double> x, std::span<double> out);

    //! Drift of subsystem i under an explicit control vector.
    void drift_with(std::size_t i, std::span<const double> x,
                    std::span<const double> u, std::span<double> out);

    //! Drifts of subsystems 0..level-1, concatenated.
    void drifts(std::size_t level, std::span<const double> x, std::span<double> out);

    //! sigma(x^1), row-major d x m.
    void sigma(std::span<const double> x, std::span<double> out);

    //! a = sigma sigma^T, row-major d x d.
    void diffusion(std::span<const double> x, std::span<double> out);

    const std::vector<double>& control(std::size_t i, std::span<const double> x) const;

    const ChainSpec& spec() const noexcept { return spec_; }
    const PolicyTable& policy() const noexcept { return policy_; }

  private:
    const ChainSpec& spec_;
    const PolicyTable& policy_;
    std::vector<double> stack_;
    std::vector<double> sigma_buf_;
};

//---------------------------------------------------------------------------//
// Diagnostics
//---------------------------------------------------------------------------//
struct DiagnosticCheck
{
    std::string name;
    bool passed = true;
    std::vector<double> witness;
    double value = 0;
    std::string detail;

    bool operator==(const DiagnosticCheck&) const = default;
};

struct DiagnosticsReport
{
    std::vector<DiagnosticCheck> checks;

    bool passed() const noexcept;
    const DiagnosticCheck* find(std::string_view name) const noexcept;
    void append(const DiagnosticsReport& other);

    bool operator==(const DiagnosticsReport&) const = default;
};

struct ValidationOptions
{
    std::size_t n_samples = 256;
    std::uint64_t seed = 0;
    //! Required lower bound on the least eigenvalue of sigma sigma^T.
    double lambda_min = 1e-8;
};

//! Structural checks: triangularity, autonomy, domains, x0, ellipticity, sets.
DiagnosticsReport validate_spec(const ChainSpec& spec, const ValidationOptions& opts = {});

//! Sampled <m_level(x^1..x^{level-1}, y), alpha(y)> over faces of D_level.
DiagnosticsReport check_outward_drift(const ChainSpec& spec, const PolicyTable& policy,
                                      std::size_t level, std::size_t n_samples,
                                      std::uint64_t seed);

//! Sampled smallest singular value of dm_l/dx^1 for l = 2..n.
DiagnosticsReport check_rank_condition(const ChainSpec& spec, const PolicyTable& policy,
                                       std::size_t n_samples, std::uint64_t seed,
                                       double rank_tol = 1e-8);

struct SkeletonOptions
{
    double blowup_radius = 1e6;
    //! Terminal-norm threshold for reporting the skeleton as settled.
    double stable_tol = 1e-6;
};

struct SkeletonTrajectory
{
    std::vector<double> times;
    //! states[k] is the flattened state at times[k].
    std::vector<std::vector<double>> states;
    std::optional<double> escape_time;
    double terminal_norm = 0;
    bool settled = false;
};

//! RK4 integration of the noise-free controlled chain.
SkeletonTrajectory simulate_deterministic(const ChainSpec& spec, const PolicyTable& policy,
                                          std::span<const double> x0, double dt,
                                          double horizon, const SkeletonOptions& opts = {});

}  // namespace chainexit
