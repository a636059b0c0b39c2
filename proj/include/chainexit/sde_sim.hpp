#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "chainexit/chain_model.hpp"
#include "chainexit/policy.hpp"

namespace chainexit
{

//! Which event stops a path.
enum class ExitEvent
{
    domain,  //!< first exit of (x^1..x^l) from Omega_l
    level,   //!< first exit of x^l alone from D_l
};

ExitEvent parse_exit_event(std::string_view s);
const char* to_string(ExitEvent e) noexcept;

struct SimulationSettings
{
    std::size_t level = 1;
    //! Size-n regularization vector; entry 0 ignored. Empty means the spec's eps.
    std::vector<double> eps;
    double dt = 1e-3;
    double horizon = 1;
    ExitEvent exit_event = ExitEvent::domain;
    //! Keep stepping after the primary exit until every level has left its box.
    bool track_all_levels = false;
    bool record_trajectory = false;
};

struct PathResult
{
    bool valid = true;
    bool exited = false;
    //! theta = tau ^ T.
    double exit_time = 0;
    //! (x^1..x^l) at theta, interpolated along the step chord on exit.
    std::vector<double> exit_state;
    //! tau^i ^ T for i = 1..l.
    std::vector<double> level_exit_times;
    std::vector<char> level_exited;
    std::vector<double> terminal_state;
    //! Flattened (steps + 1) x (l d) states when recorded.
    std::vector<double> trajectory;
};

//! Settings eps, or the spec's when empty; validated, entry 0 forced to 0.
std::vector<double> effective_eps(const ChainSpec& spec, const SimulationSettings& settings);

PathResult simulate_path(const ChainSpec& spec, const PolicyTable& policy,
                         const SimulationSettings& settings, std::uint64_t path_id,
                         std::uint64_t master_seed);

struct McConfig
{
    std::size_t n_paths = 10000;
    std::uint64_t master_seed = 0;
    //! 0 means one worker per hardware thread.
    std::size_t threads = 0;
};

//! All paths 0..n_paths-1, stored by path id.
std::vector<PathResult> simulate_paths(const ChainSpec& spec, const PolicyTable& policy,
                                       const SimulationSettings& settings, const McConfig& mc);

struct SurvivalCurve
{
    std::vector<double> t;
    std::vector<double> survival;
    //! 95% normal-approximation binomial half-widths.
    std::vector<double> half_width;
    std::size_t n_paths = 0;
    std::size_t n_invalid = 0;
    std::vector<double> eps;
    //! Sample mean of theta over valid paths.
    double mean_exit_time = 0;
    double mean_exit_time_ci = 0;

    double ci_lo(std::size_t k) const;
    double ci_hi(std::size_t k) const;
};

//! Survival estimate on the grid t_k = k T / points, k = 0..points.
SurvivalCurve estimate_survival(const ChainSpec& spec, const PolicyTable& policy,
                                const SimulationSettings& settings, const McConfig& mc,
                                std::size_t points = 200);

//! Survival curve from already simulated exit times (censored entries at T).
SurvivalCurve survival_from_exit_times(std::vector<double> exit_times,
                                       const std::vector<char>& exited, double horizon,
                                       std::size_t points);

struct RateEstimate
{
    double rate = 0;
    double std_error = 0;
    double t_lo = 0;
    double t_hi = 0;
    std::size_t points = 0;
};

//! Weighted log-linear tail fit; default window [T/2, T].
RateEstimate estimate_exit_rate(const SurvivalCurve& curve,
                                std::optional<std::pair<double, double>> window = {});

struct CouplingRow
{
    double eps = 0;
    double sup_error = 0;
    double sup_error_ci = 0;
    double theta_error = 0;
    double theta_error_ci = 0;
    double mean_theta = 0;
};

struct CouplingReport
{
    double reference_theta = 0;
    std::size_t n_paths = 0;
    std::size_t n_invalid = 0;
    std::vector<CouplingRow> rows;
};

//! Common-random-number comparison against the eps = 0 chain on levels >= 2.
CouplingReport coupled_viscosity_error(const ChainSpec& spec, const PolicyTable& policy,
                                       const std::vector<double>& eps_list,
                                       const SimulationSettings& settings,
                                       const McConfig& mc);

struct OrderingReport
{
    std::size_t level = 0;
    std::size_t n_paths = 0;
    std::size_t n_invalid = 0;
    double ordered_probability = 0;
    double ordered_ci = 0;
    //! violations[(i, j)] = P{tau^i < tau^j} for i < j (0-based levels).
    struct Pair
    {
        std::size_t i = 0;
        std::size_t j = 0;
        double frequency = 0;
    };
    std::vector<Pair> violations;
};

//! Estimates P{tau^1 >= tau^2 >= ... >= tau^l}.
OrderingReport estimate_exit_time_ordering(const ChainSpec& spec, const PolicyTable& policy,
                                           const SimulationSettings& settings,
                                           const McConfig& mc);

}  // namespace chainexit
