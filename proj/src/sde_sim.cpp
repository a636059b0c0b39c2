#include "chainexit/sde_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainexit/error.hpp"
#include "chainexit/parallel.hpp"
#include "chainexit/rng.hpp"

namespace chainexit
{
namespace
{
constexpr double z95 = 1.959963984540054;

enum class StopRule
{
    at_exit,
    all_levels,
    horizon,
};

std::size_t step_count(double horizon, double dt)
{
    return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

//---------------------------------------------------------------------------//
// Euler-Maruyama integrator holding per-worker scratch.
class PathIntegrator
{
  public:
    PathIntegrator(const ChainSpec& spec, const PolicyTable& policy,
                   const SimulationSettings& settings)
        : spec_(spec), settings_(settings), eval_(spec, policy)
    {
        const std::size_t d = spec.d();
        level_ = settings.level;
        width_ = level_ * d;
        b_.resize(width_);
        sig_.resize(d * spec.noise_dim());
        z1_.resize(spec.noise_dim());
        zj_.resize(d);
        xn_.resize(spec.state_dim());
        steps_ = step_count(settings.horizon, settings.dt);
    }

    std::size_t steps() const noexcept { return steps_; }
    std::size_t width() const noexcept { return width_; }

    /*!
     * Runs one path. observe(step, x) is called with the state after each
     * accepted step (step 0 is the initial point).
     */
    template<class Observe>
    PathResult run(std::uint64_t path_id, std::uint64_t seed, const std::vector<double>& eps,
                   StopRule stop, Observe&& observe)
    {
        const std::size_t d = spec_.d();
        const std::size_t m = spec_.noise_dim();
        const double dt = settings_.dt;
        const double horizon = settings_.horizon;
        NormalStream noise(seed, path_id);

        PathResult res;
        res.level_exit_times.assign(level_, horizon);
        res.level_exited.assign(level_, 0);
        std::vector<double> x = spec_.x0();
        observe(std::size_t{0}, std::span<const double>(x));

        const std::size_t primary_lo = settings_.exit_event == ExitEvent::domain ? 0 : level_ - 1;
        bool primary = false;
        std::size_t n_exited = 0;
        double t = 0;
        for (std::size_t s = 0; s < steps_; ++s)
        {
            const double h = (s + 1 == steps_) ? horizon - t : dt;
            const double sqh = std::sqrt(h);
            eval_.drifts(level_, x, b_);
            eval_.sigma(x, sig_);
            noise.fill(0, s, std::span<double>(z1_));
            for (std::size_t k = 0; k < spec_.state_dim(); ++k)
                xn_[k] = x[k];
            for (std::size_t r = 0; r < d; ++r)
            {
                double dw = 0;
                for (std::size_t c = 0; c < m; ++c)
                    dw += sig_[r * m + c] * z1_[c];
                xn_[r] = x[r] + b_[r] * h + dw * sqh;
            }
            for (std::size_t j = 1; j < level_; ++j)
            {
                const double e = eps[j];
                const std::size_t off = j * d;
                if (e > 0)
                {
                    noise.fill(static_cast<std::uint32_t>(j), s, std::span<double>(zj_));
                    const double scale = std::sqrt(e * h);
                    for (std::size_t k = 0; k < d; ++k)
                        xn_[off + k] = x[off + k] + b_[off + k] * h + scale * zj_[k];
                }
                else
                {
                    for (std::size_t k = 0; k < d; ++k)
                        xn_[off + k] = x[off + k] + b_[off + k] * h;
                }
            }
            for (std::size_t k = 0; k < width_; ++k)
            {
                if (!std::isfinite(xn_[k]))
                {
                    res.valid = false;
                    res.terminal_state = xn_;
                    return res;
                }
            }

            // First face crossing of each level along the chord.
            double first_s = 2;
            for (std::size_t i = 0; i < level_; ++i)
            {
                const Box& box = spec_.domain(i);
                double si = 2;
                for (std::size_t k = 0; k < d; ++k)
                {
                    const double a = x[i * d + k];
                    const double bnext = xn_[i * d + k];
                    if (bnext <= box.lower[k])
                        si = std::min(si, std::clamp((box.lower[k] - a) / (bnext - a), 0.0, 1.0));
                    else if (bnext >= box.upper[k])
                        si = std::min(si, std::clamp((box.upper[k] - a) / (bnext - a), 0.0, 1.0));
                }
                if (si > 1)
                    continue;
                if (!res.level_exited[i])
                {
                    res.level_exited[i] = 1;
                    res.level_exit_times[i] = std::min(t + si * h, horizon);
                    ++n_exited;
                }
                if (!primary && i >= primary_lo)
                    first_s = std::min(first_s, si);
            }
            if (!primary && first_s <= 1)
            {
                primary = true;
                res.exited = true;
                res.exit_time = std::min(t + first_s * h, horizon);
                res.exit_state.resize(width_);
                for (std::size_t k = 0; k < width_; ++k)
                    res.exit_state[k] = x[k] + first_s * (xn_[k] - x[k]);
            }

            x.swap(xn_);
            t = (s + 1 == steps_) ? horizon : t + h;
            observe(s + 1, std::span<const double>(x));

            if (stop == StopRule::at_exit && primary)
                break;
            if (stop == StopRule::all_levels && primary && n_exited == level_)
                break;
        }
        if (!primary)
        {
            res.exit_time = horizon;
            res.exit_state.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(width_));
        }
        res.terminal_state = std::move(x);
        xn_.resize(spec_.state_dim());
        return res;
    }

    PathResult run(std::uint64_t path_id, std::uint64_t seed, const std::vector<double>& eps,
                   StopRule stop)
    {
        return run(path_id, seed, eps, stop, [](std::size_t, std::span<const double>) {});
    }

  private:
    const ChainSpec& spec_;
    const SimulationSettings& settings_;
    ChainEvaluator eval_;
    std::size_t level_ = 1;
    std::size_t width_ = 1;
    std::size_t steps_ = 0;
    std::vector<double> b_, sig_, z1_, zj_, xn_;
};

//---------------------------------------------------------------------------//
}  // namespace

std::vector<double> effective_eps(const ChainSpec& spec, const SimulationSettings& settings)
{
    if (settings.eps.empty())
        return spec.eps();
    if (settings.eps.size() != spec.n())
    {
        throw SpecError("eps vector has " + std::to_string(settings.eps.size())
                        + " entries, expected " + std::to_string(spec.n()));
    }
    for (std::size_t j = 1; j < spec.n(); ++j)
    {
        if (!(settings.eps[j] >= 0))
            throw SpecError("eps_" + std::to_string(j + 1) + " must be nonnegative");
    }
    auto eps = settings.eps;
    eps[0] = 0;
    return eps;
}

namespace
{

void check_settings(const ChainSpec& spec, const PolicyTable& policy,
                    const SimulationSettings& settings)
{
    if (settings.level < 1 || settings.level > spec.n())
    {
        throw SpecError("level " + std::to_string(settings.level) + " out of range 1.."
                        + std::to_string(spec.n()));
    }
    if (!(settings.dt > 0))
        throw SpecError("dt must be positive");
    if (!(settings.horizon > 0))
        throw SpecError("horizon must be positive");
    if (!spec.product_domain(settings.level).contains_open(
            std::span<const double>(spec.x0()).first(settings.level * spec.d())))
        throw SpecError("x0 must lie in the open product domain");
    check_policy(spec, policy);
}

double mean_ci(double sum, double sum_sq, std::size_t n)
{
    if (n < 2)
        return 0;
    double mean = sum / static_cast<double>(n);
    double var = (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
    return z95 * std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
}

}  // namespace

//---------------------------------------------------------------------------//
ExitEvent parse_exit_event(std::string_view s)
{
    if (s == "domain")
        return ExitEvent::domain;
    if (s == "level")
        return ExitEvent::level;
    throw ConfigError("unknown exit event '" + std::string(s) + "' (expected domain or level)");
}

const char* to_string(ExitEvent e) noexcept
{
    return e == ExitEvent::domain ? "domain" : "level";
}

//---------------------------------------------------------------------------//
PathResult simulate_path(const ChainSpec& spec, const PolicyTable& policy,
                         const SimulationSettings& settings, std::uint64_t path_id,
                         std::uint64_t master_seed)
{
    check_settings(spec, policy, settings);
    auto eps = effective_eps(spec, settings);
    PathIntegrator integ(spec, policy, settings);
    StopRule stop = settings.track_all_levels ? StopRule::all_levels : StopRule::at_exit;
    if (!settings.record_trajectory)
        return integ.run(path_id, master_seed, eps, stop);
    std::vector<double> traj;
    const std::size_t w = integ.width();
    auto res = integ.run(path_id, master_seed, eps, stop,
                         [&](std::size_t, std::span<const double> x) {
                             traj.insert(traj.end(), x.begin(),
                                         x.begin() + static_cast<std::ptrdiff_t>(w));
                         });
    res.trajectory = std::move(traj);
    return res;
}

std::vector<PathResult> simulate_paths(const ChainSpec& spec, const PolicyTable& policy,
                                       const SimulationSettings& settings, const McConfig& mc)
{
    if (mc.n_paths == 0)
        throw SpecError("n_paths must be at least 1");
    check_settings(spec, policy, settings);
    const auto eps = effective_eps(spec, settings);
    const StopRule stop = settings.track_all_levels ? StopRule::all_levels : StopRule::at_exit;
    std::vector<PathResult> out(mc.n_paths);
    parallel_ranges(mc.n_paths, mc.threads, [&](std::size_t begin, std::size_t end) {
        PathIntegrator integ(spec, policy, settings);
        for (std::size_t p = begin; p < end; ++p)
            out[p] = integ.run(p, mc.master_seed, eps, stop);
    });
    return out;
}

//---------------------------------------------------------------------------//
double SurvivalCurve::ci_lo(std::size_t k) const
{
    return std::clamp(survival.at(k) - half_width.at(k), 0.0, 1.0);
}

double SurvivalCurve::ci_hi(std::size_t k) const
{
    return std::clamp(survival.at(k) + half_width.at(k), 0.0, 1.0);
}

SurvivalCurve survival_from_exit_times(std::vector<double> exit_times,
                                       const std::vector<char>& exited, double horizon,
                                       std::size_t points)
{
    if (exit_times.size() != exited.size())
        throw SpecError("exit time and flag arrays differ in length");
    if (points == 0)
        throw SpecError("survival grid needs at least one interval");
    SurvivalCurve curve;
    const std::size_t n = exit_times.size();
    curve.n_paths = n;
    std::vector<double> hits;
    hits.reserve(n);
    double sum = 0, sum_sq = 0;
    for (std::size_t p = 0; p < n; ++p)
    {
        sum += exit_times[p];
        sum_sq += exit_times[p] * exit_times[p];
        if (exited[p])
            hits.push_back(exit_times[p]);
    }
    std::sort(hits.begin(), hits.end());
    curve.mean_exit_time = n ? sum / static_cast<double>(n) : 0;
    curve.mean_exit_time_ci = mean_ci(sum, sum_sq, n);
    std::size_t cursor = 0;
    for (std::size_t k = 0; k <= points; ++k)
    {
        double t = k == points ? horizon
                               : horizon * static_cast<double>(k) / static_cast<double>(points);
        while (cursor < hits.size() && hits[cursor] <= t)
            ++cursor;
        double s = n ? 1.0 - static_cast<double>(cursor) / static_cast<double>(n) : 0.0;
        curve.t.push_back(t);
        curve.survival.push_back(s);
        curve.half_width.push_back(n ? z95 * std::sqrt(s * (1 - s) / static_cast<double>(n))
                                     : 0.0);
    }
    return curve;
}

SurvivalCurve estimate_survival(const ChainSpec& spec, const PolicyTable& policy,
                                const SimulationSettings& settings, const McConfig& mc,
                                std::size_t points)
{
    if (mc.n_paths == 0)
        throw SpecError("n_paths must be at least 1");
    check_settings(spec, policy, settings);
    const auto eps = effective_eps(spec, settings);
    std::vector<double> times(mc.n_paths);
    std::vector<char> exited(mc.n_paths), valid(mc.n_paths);
    parallel_ranges(mc.n_paths, mc.threads, [&](std::size_t begin, std::size_t end) {
        PathIntegrator integ(spec, policy, settings);
        for (std::size_t p = begin; p < end; ++p)
        {
            auto r = integ.run(p, mc.master_seed, eps, StopRule::at_exit);
            valid[p] = r.valid;
            exited[p] = r.exited;
            times[p] = r.exit_time;
        }
    });
    std::vector<double> vt;
    std::vector<char> ve;
    for (std::size_t p = 0; p < mc.n_paths; ++p)
    {
        if (valid[p])
        {
            vt.push_back(times[p]);
            ve.push_back(exited[p]);
        }
    }
    if (vt.empty())
        throw NumericError("all " + std::to_string(mc.n_paths)
                           + " paths were invalid (non-finite state)");
    auto curve = survival_from_exit_times(std::move(vt), ve, settings.horizon, points);
    curve.n_invalid = mc.n_paths - curve.n_paths;
    curve.eps = eps;
    return curve;
}

//---------------------------------------------------------------------------//
RateEstimate estimate_exit_rate(const SurvivalCurve& curve,
                                std::optional<std::pair<double, double>> window)
{
    if (curve.t.empty())
        throw NumericError("empty survival curve");
    const double horizon = curve.t.back();
    auto [lo, hi] = window.value_or(std::pair{horizon / 2, horizon});
    if (!(hi > lo))
        throw SpecError("fit window must satisfy t_lo < t_hi");
    const double slack = 1e-12 * std::max(1.0, std::abs(hi));
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < curve.t.size(); ++k)
    {
        if (curve.t[k] >= lo - slack && curve.t[k] <= hi + slack)
        {
            if (!(curve.survival[k] > 0))
                throw NumericError("survival estimate reaches 0 at t = "
                                   + std::to_string(curve.t[k])
                                   + " inside the fit window; shorten the horizon or add paths");
            idx.push_back(k);
        }
    }
    if (idx.size() < 3)
        throw NumericError("fit window holds " + std::to_string(idx.size())
                           + " survival points, need at least 3");

    const double n = static_cast<double>(curve.n_paths);
    const std::size_t p = idx.size();
    std::vector<double> w(p), t(p), y(p), v(p);
    for (std::size_t i = 0; i < p; ++i)
    {
        double s = curve.survival[idx[i]];
        t[i] = curve.t[idx[i]];
        y[i] = std::log(s);
        if (curve.n_paths > 0)
        {
            double q = std::max(1 - s, 1 / n);
            w[i] = n * s / q;
            v[i] = (1 - s) / (n * s);
        }
        else
        {
            w[i] = 1;
            v[i] = 0;
        }
    }
    double sw = 0, swt = 0;
    for (std::size_t i = 0; i < p; ++i)
    {
        sw += w[i];
        swt += w[i] * t[i];
    }
    const double tbar = swt / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < p; ++i)
    {
        sxx += w[i] * (t[i] - tbar) * (t[i] - tbar);
        sxy += w[i] * (t[i] - tbar) * y[i];
    }
    if (!(sxx > 0))
        throw NumericError("degenerate fit window");
    std::vector<double> c(p);
    for (std::size_t i = 0; i < p; ++i)
        c[i] = w[i] * (t[i] - tbar) / sxx;

    // log S-hat behaves like a random walk in t: Cov(y_i, y_j) = v(min(t_i, t_j)).
    double var = 0;
    for (std::size_t i = 0; i < p; ++i)
    {
        double tail = 0;
        for (std::size_t j = i + 1; j < p; ++j)
            tail += c[j];
        var += v[i] * c[i] * (c[i] + 2 * tail);
    }
    RateEstimate r;
    r.rate = -sxy / sxx;
    r.std_error = std::sqrt(std::max(var, 0.0));
    r.t_lo = t.front();
    r.t_hi = t.back();
    r.points = p;
    return r;
}

//---------------------------------------------------------------------------//
CouplingReport coupled_viscosity_error(const ChainSpec& spec, const PolicyTable& policy,
                                       const std::vector<double>& eps_list,
                                       const SimulationSettings& settings, const McConfig& mc)
{
    if (mc.n_paths == 0)
        throw SpecError("n_paths must be at least 1");
    if (eps_list.empty())
        throw SpecError("eps list is empty");
    for (std::size_t k = 0; k < eps_list.size(); ++k)
    {
        if (!(eps_list[k] >= 0))
            throw SpecError("eps values must be nonnegative");
        if (k > 0 && eps_list[k] > eps_list[k - 1])
            throw SpecError("eps list must be sorted in decreasing order");
    }
    check_settings(spec, policy, settings);
    const std::size_t ne = eps_list.size();
    const std::size_t d = spec.d();
    const std::size_t off = (settings.level - 1) * d;
    const auto ref_eps = spec.uniform_eps(0);

    std::vector<char> valid(mc.n_paths, 1);
    std::vector<double> ref_theta(mc.n_paths);
    std::vector<double> sup_err(mc.n_paths * ne), theta(mc.n_paths * ne);
    parallel_ranges(mc.n_paths, mc.threads, [&](std::size_t begin, std::size_t end) {
        PathIntegrator integ(spec, policy, settings);
        std::vector<double> ref((integ.steps() + 1) * d);
        for (std::size_t p = begin; p < end; ++p)
        {
            auto r0 = integ.run(p, mc.master_seed, ref_eps, StopRule::horizon,
                                [&](std::size_t s, std::span<const double> x) {
                                    for (std::size_t k = 0; k < d; ++k)
                                        ref[s * d + k] = x[off + k];
                                });
            if (!r0.valid)
            {
                valid[p] = 0;
                continue;
            }
            ref_theta[p] = r0.exit_time;
            for (std::size_t e = 0; e < ne; ++e)
            {
                double worst = 0;
                auto r = integ.run(p, mc.master_seed, spec.uniform_eps(eps_list[e]),
                                   StopRule::horizon,
                                   [&](std::size_t s, std::span<const double> x) {
                                       double acc = 0;
                                       for (std::size_t k = 0; k < d; ++k)
                                       {
                                           double diff = x[off + k] - ref[s * d + k];
                                           acc += diff * diff;
                                       }
                                       worst = std::max(worst, acc);
                                   });
                if (!r.valid)
                {
                    valid[p] = 0;
                    break;
                }
                sup_err[p * ne + e] = std::sqrt(worst);
                theta[p * ne + e] = r.exit_time;
            }
        }
    });

    CouplingReport report;
    std::size_t nv = 0;
    double ref_sum = 0;
    std::vector<double> se(ne), se2(ne), te(ne), te2(ne), th(ne);
    for (std::size_t p = 0; p < mc.n_paths; ++p)
    {
        if (!valid[p])
            continue;
        ++nv;
        ref_sum += ref_theta[p];
        for (std::size_t e = 0; e < ne; ++e)
        {
            double a = sup_err[p * ne + e];
            double b = std::abs(theta[p * ne + e] - ref_theta[p]);
            se[e] += a;
            se2[e] += a * a;
            te[e] += b;
            te2[e] += b * b;
            th[e] += theta[p * ne + e];
        }
    }
    if (nv == 0)
        throw NumericError("all coupled paths were invalid (non-finite state)");
    const double nvd = static_cast<double>(nv);
    report.n_paths = nv;
    report.n_invalid = mc.n_paths - nv;
    report.reference_theta = ref_sum / nvd;
    for (std::size_t e = 0; e < ne; ++e)
    {
        CouplingRow row;
        row.eps = eps_list[e];
        row.sup_error = se[e] / nvd;
        row.sup_error_ci = mean_ci(se[e], se2[e], nv);
        row.theta_error = te[e] / nvd;
        row.theta_error_ci = mean_ci(te[e], te2[e], nv);
        row.mean_theta = th[e] / nvd;
        report.rows.push_back(row);
    }
    return report;
}

//---------------------------------------------------------------------------//
OrderingReport estimate_exit_time_ordering(const ChainSpec& spec, const PolicyTable& policy,
                                           const SimulationSettings& settings,
                                           const McConfig& mc)
{
    if (spec.n() < 2)
        throw SpecError("exit-time ordering needs a chain with n >= 2");
    if (settings.level < 2)
        throw SpecError("exit-time ordering needs level >= 2");
    if (mc.n_paths == 0)
        throw SpecError("n_paths must be at least 1");
    check_settings(spec, policy, settings);
    const auto eps = effective_eps(spec, settings);
    const std::size_t lv = settings.level;
    SimulationSettings local = settings;
    local.exit_event = ExitEvent::level;
    std::vector<double> taus(mc.n_paths * lv);
    std::vector<char> valid(mc.n_paths);
    parallel_ranges(mc.n_paths, mc.threads, [&](std::size_t begin, std::size_t end) {
        PathIntegrator integ(spec, policy, local);
        for (std::size_t p = begin; p < end; ++p)
        {
            auto r = integ.run(p, mc.master_seed, eps, StopRule::all_levels);
            valid[p] = r.valid;
            std::copy(r.level_exit_times.begin(), r.level_exit_times.end(),
                      taus.begin() + static_cast<std::ptrdiff_t>(p * lv));
        }
    });

    OrderingReport report;
    report.level = lv;
    std::size_t nv = 0, ordered = 0;
    std::vector<std::size_t> bad(lv * lv, 0);
    for (std::size_t p = 0; p < mc.n_paths; ++p)
    {
        if (!valid[p])
            continue;
        ++nv;
        const double* tau = &taus[p * lv];
        bool ok = true;
        for (std::size_t i = 0; i + 1 < lv; ++i)
            ok = ok && tau[i] >= tau[i + 1];
        ordered += ok;
        for (std::size_t i = 0; i < lv; ++i)
        {
            for (std::size_t j = i + 1; j < lv; ++j)
                bad[i * lv + j] += tau[i] < tau[j];
        }
    }
    if (nv == 0)
        throw NumericError("all paths were invalid (non-finite state)");
    const double nvd = static_cast<double>(nv);
    report.n_paths = nv;
    report.n_invalid = mc.n_paths - nv;
    report.ordered_probability = static_cast<double>(ordered) / nvd;
    const double q = report.ordered_probability;
    report.ordered_ci = z95 * std::sqrt(q * (1 - q) / nvd);
    for (std::size_t i = 0; i < lv; ++i)
    {
        for (std::size_t j = i + 1; j < lv; ++j)
            report.violations.push_back({i, j, static_cast<double>(bad[i * lv + j]) / nvd});
    }
    return report;
}

}  // namespace chainexit
