#include "chainexit/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "chainexit/chain_model.hpp"
#include "chainexit/config.hpp"
#include "chainexit/eigensolver.hpp"
#include "chainexit/error.hpp"
#include "chainexit/exit_prob.hpp"
#include "chainexit/hjb_control.hpp"
#include "chainexit/output.hpp"
#include "chainexit/parallel.hpp"
#include "chainexit/sde_sim.hpp"

namespace chainexit::cli
{
namespace
{
using config::Json;
constexpr const char* version = "0.1.0";

struct Context
{
    Json cfg;
    ChainSpec spec;
    std::size_t threads;
    std::uint64_t seed;
    OutputDir out;
    std::ostream& log;
    std::optional<PolicyTable> optimal;
};

std::vector<std::string> axis_names(std::size_t dim)
{
    std::vector<std::string> names;
    for (std::size_t a = 0; a < dim; ++a)
        names.push_back("x" + std::to_string(a + 1));
    return names;
}

std::vector<std::string> concat(std::vector<std::string> a, std::vector<std::string> b)
{
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::size_t level_or_n(const Context& ctx, std::string_view key)
{
    std::size_t level = config::count(ctx.cfg, key);
    if (level == 0)
        return ctx.spec.n();
    if (level > ctx.spec.n())
        throw ConfigError("config key '" + std::string(key) + "' exceeds chain.n");
    return level;
}

SimulationSettings sim_settings(const Context& ctx)
{
    SimulationSettings s;
    s.level = level_or_n(ctx, "mc.level");
    s.dt = config::number(ctx.cfg, "mc.dt");
    double horizon = config::number(ctx.cfg, "mc.horizon");
    s.horizon = horizon > 0 ? horizon : ctx.spec.horizon();
    try
    {
        s.exit_event = parse_exit_event(config::text(ctx.cfg, "mc.exit_event"));
    }
    catch (const SpecError& e)
    {
        throw ConfigError("mc.exit_event: " + std::string(e.what()));
    }
    return s;
}

McConfig mc_config(const Context& ctx)
{
    McConfig mc;
    mc.n_paths = config::count(ctx.cfg, "mc.n_paths");
    mc.master_seed = ctx.seed;
    mc.threads = ctx.threads;
    return mc;
}

std::optional<std::pair<double, double>> fit_window(const Context& ctx)
{
    auto w = config::numbers(ctx.cfg, "mc.window");
    if (w.empty())
        return std::nullopt;
    if (w.size() != 2)
        throw ConfigError("mc.window needs two entries [t_lo, t_hi]");
    return std::make_pair(w[0], w[1]);
}

std::vector<std::size_t> grid_nodes(const Context& ctx)
{
    auto nodes = config::counts(ctx.cfg, "grid.nodes");
    if (nodes.empty())
        throw ConfigError("grid.nodes is empty");
    return nodes;
}

TensorGrid make_grid(const Context& ctx, std::size_t level)
{
    auto nodes = grid_nodes(ctx);
    const std::size_t dim = level * ctx.spec.d();
    if (nodes.size() != 1 && nodes.size() < dim)
        throw ConfigError("grid.nodes needs 1 or " + std::to_string(dim) + " entries");
    if (nodes.size() > dim)
        nodes.resize(dim);
    return build_grid(ctx.spec, level, nodes);
}

EigenOptions eigen_options(const Context& ctx)
{
    EigenOptions o;
    o.tol = config::number(ctx.cfg, "grid.eigen_tol");
    o.max_iter = config::count(ctx.cfg, "grid.max_iter");
    return o;
}

PolicyIterationOptions pi_options(const Context& ctx)
{
    PolicyIterationOptions o;
    o.tol = config::number(ctx.cfg, "grid.policy_tol");
    o.max_sweeps = config::count(ctx.cfg, "grid.max_sweeps");
    o.improve.tie_tol = config::number(ctx.cfg, "controls.tie_tol");
    try
    {
        o.improve.mode = parse_feedback_mode(config::text(ctx.cfg, "controls.feedback"));
    }
    catch (const SpecError& e)
    {
        throw ConfigError("controls.feedback: " + std::string(e.what()));
    }
    o.eigen.max_iter = std::max(o.eigen.max_iter, config::count(ctx.cfg, "grid.max_iter"));
    return o;
}

ChainOptimum run_optimize(const Context& ctx)
{
    auto nodes = grid_nodes(ctx);
    return optimize_chain(ctx.spec, nodes, ctx.spec.eps(), pi_options(ctx));
}

PolicyTable policy(Context& ctx)
{
    const Json& p = config::at(ctx.cfg, "controls.policy");
    if (p.is_array())
    {
        auto idx = config::counts(ctx.cfg, "controls.policy");
        if (idx.size() != ctx.spec.n())
            throw ConfigError("controls.policy needs one control index per subsystem");
        return PolicyTable::constant(idx);
    }
    auto name = config::text(ctx.cfg, "controls.policy");
    if (name == "smallest")
    {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ctx.spec.n(); ++i)
            idx.push_back(smallest_control(ctx.spec.controls(i)));
        return PolicyTable::constant(idx);
    }
    if (name == "optimal")
    {
        if (!ctx.optimal)
            ctx.optimal = run_optimize(ctx).policy;
        return *ctx.optimal;
    }
    throw ConfigError("controls.policy must be 'smallest', 'optimal' or a list of indices");
}

BoundaryData boundary_data(const Context& ctx, const Box& box)
{
    auto kind = config::text(ctx.cfg, "domains.data.kind");
    if (kind == "expression")
        return BoundaryData::expression(config::text(ctx.cfg, "domains.data.expression"));
    if (kind == "indicator")
    {
        auto faces = parse_faces(config::text(ctx.cfg, "domains.data.faces"), box.dim());
        return indicator_family(config::number(ctx.cfg, "domains.data.sharpness"),
                                std::move(faces), box);
    }
    throw ConfigError("domains.data.kind must be 'indicator' or 'expression'");
}

std::vector<double> x0_prefix(const Context& ctx, std::size_t level)
{
    const auto& x0 = ctx.spec.x0();
    return {x0.begin(), x0.begin() + static_cast<std::ptrdiff_t>(level * ctx.spec.d())};
}

CsvTable field_table(const TensorGrid& grid, std::span<const double> field,
                     const std::string& name)
{
    CsvTable t(concat(axis_names(grid.dim()), {name}));
    std::vector<double> pt(grid.dim());
    for (std::size_t p = 0; p < grid.interior_size(); ++p)
    {
        grid.interior_point(p, pt);
        auto row = t.row();
        for (double v : pt)
            row << v;
        row << field[p];
    }
    return t;
}

CsvTable survival_table(const SurvivalCurve& curve)
{
    CsvTable t({"t", "S", "ci_lo", "ci_hi"});
    for (std::size_t k = 0; k < curve.t.size(); ++k)
        t.row() << curve.t[k] << curve.survival[k] << curve.ci_lo(k) << curve.ci_hi(k);
    return t;
}

std::string join_nodes(const TensorGrid& grid)
{
    std::string s;
    for (std::size_t a = 0; a < grid.dim(); ++a)
        s += (a ? "x" : "") + std::to_string(grid.nodes(a));
    return s;
}

void report_warnings(const Context& ctx, const SparseOperator& op)
{
    if (op.nondominant_rows > 0)
        ctx.log << "warning: " << op.nondominant_rows
                << " operator rows are not diagonally dominant (cross terms); "
                   "monotonicity is not guaranteed\n";
}

//---------------------------------------------------------------------------//
// Subcommands
//---------------------------------------------------------------------------//
int cmd_validate(Context& ctx)
{
    ValidationOptions vo;
    vo.n_samples = config::count(ctx.cfg, "mc.diagnostic_samples");
    vo.seed = ctx.seed;
    auto structural = validate_spec(ctx.spec, vo);
    DiagnosticsReport all = structural;
    if (structural.passed())
    {
        auto pol = policy(ctx);
        for (std::size_t level = 2; level <= ctx.spec.n(); ++level)
            all.append(check_outward_drift(ctx.spec, pol, level, vo.n_samples, ctx.seed));
        if (ctx.spec.n() >= 2)
            all.append(check_rank_condition(ctx.spec, pol, vo.n_samples, ctx.seed));
    }
    CsvTable t({"check", "passed", "value", "witness", "detail"});
    for (const auto& c : all.checks)
    {
        std::string witness;
        for (std::size_t k = 0; k < c.witness.size(); ++k)
            witness += (k ? " " : "") + format_number(c.witness[k]);
        t.row() << c.name << c.passed << c.value << witness << c.detail;
    }
    ctx.out.write("diagnostics.csv", t);
    int status = ok;
    for (const auto& c : all.checks)
    {
        const bool is_structural = structural.find(c.name) != nullptr;
        if (c.passed)
            continue;
        ctx.log << (is_structural ? "error: " : "warning: ") << c.name << ": " << c.detail
                << "\n";
        if (is_structural)
            status = config_error;
    }
    if (status == ok)
        ctx.log << "spec is valid\n";
    return status;
}

int cmd_skeleton(Context& ctx)
{
    auto s = sim_settings(ctx);
    auto traj = simulate_deterministic(ctx.spec, policy(ctx), ctx.spec.x0(), s.dt, s.horizon);
    CsvTable t(concat({"t"}, axis_names(ctx.spec.state_dim())));
    for (std::size_t k = 0; k < traj.times.size(); ++k)
    {
        auto row = t.row();
        row << traj.times[k];
        for (double v : traj.states[k])
            row << v;
    }
    ctx.out.write("skeleton.csv", t);
    CsvTable sum({"settled", "terminal_norm", "escape_time"});
    {
        auto row = sum.row();
        row << traj.settled << traj.terminal_norm;
        if (traj.escape_time)
            row << *traj.escape_time;
        else
            row.blank();
    }
    ctx.out.write("skeleton_summary.csv", sum);
    if (traj.escape_time)
        ctx.log << "skeleton left the blow-up radius at t = " << *traj.escape_time << "\n";
    return ok;
}

SurvivalCurve survival_curve(Context& ctx, const SimulationSettings& s)
{
    auto curve = estimate_survival(ctx.spec, policy(ctx), s, mc_config(ctx),
                                   config::count(ctx.cfg, "mc.survival_points"));
    if (curve.n_invalid > 0)
        ctx.log << "warning: " << curve.n_invalid << " paths hit a non-finite state\n";
    return curve;
}

void write_survival_summary(Context& ctx, const SurvivalCurve& curve,
                            const SimulationSettings& s)
{
    CsvTable t({"level", "horizon", "dt", "n_paths", "n_invalid", "mean_exit_time",
                "mean_exit_time_ci"});
    t.row() << s.level << s.horizon << s.dt << curve.n_paths << curve.n_invalid
            << curve.mean_exit_time << curve.mean_exit_time_ci;
    ctx.out.write("survival_summary.csv", t);
}

int cmd_survival(Context& ctx)
{
    auto s = sim_settings(ctx);
    auto curve = survival_curve(ctx, s);
    ctx.out.write("survival.csv", survival_table(curve));
    write_survival_summary(ctx, curve, s);
    return ok;
}

int cmd_rate(Context& ctx)
{
    auto s = sim_settings(ctx);
    auto curve = survival_curve(ctx, s);
    auto rate = estimate_exit_rate(curve, fit_window(ctx));
    ctx.out.write("survival.csv", survival_table(curve));
    CsvTable t({"rate", "std_error", "t_lo", "t_hi", "points", "n_paths", "n_invalid"});
    t.row() << rate.rate << rate.std_error << rate.t_lo << rate.t_hi << rate.points
            << curve.n_paths << curve.n_invalid;
    ctx.out.write("rate.csv", t);
    ctx.log << "rate " << format_number(rate.rate) << " +- " << format_number(rate.std_error)
            << "\n";
    return ok;
}

int cmd_eigen(Context& ctx)
{
    const std::size_t level = level_or_n(ctx, "grid.level");
    auto grid = make_grid(ctx, level);
    auto op = assemble_generator(ctx.spec, policy(ctx), grid, ctx.spec.eps());
    report_warnings(ctx, op);
    if (config::flag(ctx.cfg, "output.triplets"))
    {
        std::ostringstream os;
        write_triplets(op, os);
        ctx.out.write("operator.txt", os.str());
    }
    auto e = principal_eigenpair(op, eigen_options(ctx));
    if (e.lost_monotonicity)
        ctx.log << "warning: eigenvector lost positivity (min " << e.min_psi << ")\n";
    CsvTable t({"level", "nodes", "stencil", "lambda", "residual", "iterations", "gap_ratio",
                "min_psi", "lost_monotonicity", "nondominant_rows"});
    const std::string stencil = op.stencil.advection + "/" + op.stencil.diffusion
                                + (op.has_cross_terms ? "/" + op.stencil.cross : "");
    t.row() << level << join_nodes(grid) << stencil << e.lambda << e.residual
            << e.iterations << e.gap_ratio << e.min_psi << e.lost_monotonicity
            << op.nondominant_rows;
    ctx.out.write("eigen.csv", t);
    ctx.out.write("psi.csv", field_table(grid, e.psi, "psi"));
    ctx.log << "lambda " << format_number(e.lambda) << "\n";
    return ok;
}

int cmd_crosscheck(Context& ctx)
{
    auto s = sim_settings(ctx);
    CrosscheckOptions opts;
    opts.nodes = grid_nodes(ctx);
    opts.rel_tol = config::number(ctx.cfg, "mc.rel_tol");
    opts.window = fit_window(ctx);
    opts.survival_points = config::count(ctx.cfg, "mc.survival_points");
    opts.eigen = eigen_options(ctx);
    auto rep = eigen_vs_mc_crosscheck(ctx.spec, policy(ctx), s, mc_config(ctx), opts);
    CsvTable t({"level", "lambda_pde", "lambda_mc", "std_error", "rel_diff", "allowed",
                "passed"});
    t.row() << s.level << rep.lambda_pde << rep.lambda_mc << rep.std_error << rep.rel_diff
            << rep.allowed << rep.passed;
    ctx.out.write("crosscheck.csv", t);
    ctx.out.write("survival.csv", survival_table(rep.curve));
    ctx.log << "lambda_pde " << format_number(rep.lambda_pde) << "  lambda_mc "
            << format_number(rep.lambda_mc) << " +- " << format_number(rep.std_error) << "  "
            << (rep.passed ? "agree" : "DISAGREE") << "\n";
    return ok;
}

int cmd_optimize(Context& ctx)
{
    auto chain = run_optimize(ctx);
    CsvTable sum({"level", "lambda", "sweeps", "converged", "fixed_point"});
    CsvTable hist({"level", "sweep", "lambda"});
    for (const auto& step : chain.levels)
    {
        const auto& r = step.result;
        sum.row() << step.level << r.lambda << r.sweeps << r.converged << r.fixed_point;
        for (std::size_t k = 0; k < r.history.size(); ++k)
            hist.row() << step.level << (k + 1) << r.history[k];
        if (!r.converged)
            ctx.log << "warning: level " << step.level << " did not converge in " << r.sweeps
                    << " sweeps; best policy kept\n";

        auto grid = make_grid(ctx, step.level);
        const auto& set = ctx.spec.controls(step.level - 1);
        std::vector<std::string> ucols;
        for (std::size_t c = 0; c < set.dim; ++c)
            ucols.push_back("u" + std::to_string(c + 1));
        CsvTable pt(concat(concat(axis_names(grid.dim()), {"index"}), ucols));
        std::vector<double> x(grid.dim());
        for (std::size_t p = 0; p < grid.interior_size(); ++p)
        {
            grid.interior_point(p, x);
            auto idx = chain.policy.choose(step.level - 1, x);
            auto row = pt.row();
            for (double v : x)
                row << v;
            row << idx;
            for (double v : set.values[idx])
                row << v;
        }
        ctx.out.write("policy_level" + std::to_string(step.level) + ".csv", pt);
    }
    ctx.out.write("optimize.csv", sum);
    ctx.out.write("history.csv", hist);
    for (const auto& step : chain.levels)
        ctx.log << "level " << step.level << " lambda* " << format_number(step.result.lambda)
                << "\n";
    return ok;
}

int cmd_exitprob(Context& ctx)
{
    auto pol = policy(ctx);
    const std::size_t level = level_or_n(ctx, "grid.level");
    auto grid = make_grid(ctx, level);
    auto pde_data = boundary_data(ctx, ctx.spec.product_domain(level));
    auto op = assemble_generator(ctx.spec, pol, grid, ctx.spec.eps());
    report_warnings(ctx, op);
    auto sol = solve_dirichlet(op, grid, pde_data);
    auto x0 = x0_prefix(ctx, level);
    const double pde = interpolate(grid, sol.field, x0, &pde_data);

    auto s = sim_settings(ctx);
    auto mc_data = boundary_data(ctx, ctx.spec.product_domain(s.level));
    auto q = mc_exit_probability(ctx.spec, pol, s, mc_config(ctx), mc_data);

    CsvTable t({"method", "level", "value", "ci", "n_paths", "n_invalid", "n_exited"});
    t.row() << "pde" << level << pde << 0.0 << std::size_t{0} << std::size_t{0}
            << std::size_t{0};
    t.row() << "mc" << s.level << q.q << q.ci << q.n_paths << q.n_invalid << q.n_exited;
    ctx.out.write("exitprob.csv", t);
    ctx.out.write("field.csv", field_table(grid, sol.field, "value"));
    ctx.log << "pde " << format_number(pde) << "  mc " << format_number(q.q) << " +- "
            << format_number(q.ci) << "\n";
    return ok;
}

int cmd_sweep(Context& ctx)
{
    auto pol = policy(ctx);
    const std::size_t level = level_or_n(ctx, "grid.level");
    auto grid = make_grid(ctx, level);
    auto data = boundary_data(ctx, ctx.spec.product_domain(level));
    SweepOptions opts;
    opts.inner_fraction = config::number(ctx.cfg, "grid.inner_fraction");
    opts.threads = ctx.threads;
    auto rep = viscosity_sweep(ctx.spec, pol, grid, data, config::numbers(ctx.cfg, "grid.eps_list"),
                               opts);
    auto x0 = x0_prefix(ctx, level);
    CsvTable t({"eps", "sup_diff", "ill_conditioned", "value_at_x0"});
    CsvTable fields(concat({"eps"}, concat(axis_names(grid.dim()), {"value"})));
    std::vector<double> pt(grid.dim());
    for (const auto& r : rep.rows)
    {
        {
            auto row = t.row();
            row << r.eps;
            if (r.sup_diff)
                row << *r.sup_diff;
            else
                row.blank();
            row << r.ill_conditioned << interpolate(grid, r.field, x0, &data);
        }
        for (std::size_t p = 0; p < grid.interior_size(); ++p)
        {
            grid.interior_point(p, pt);
            auto row = fields.row();
            row << r.eps;
            for (double v : pt)
                row << v;
            row << r.field[p];
        }
        if (r.ill_conditioned)
            ctx.log << "warning: eps = " << format_number(r.eps)
                    << " is below the grid's resolvable scale h^2\n";
    }
    ctx.out.write("sweep.csv", t);
    ctx.out.write("sweep_fields.csv", fields);
    if (!rep.differences_decreasing)
        ctx.log << "warning: successive differences are not decreasing\n";
    return ok;
}

int cmd_couple(Context& ctx)
{
    auto s = sim_settings(ctx);
    auto eps_list = config::numbers(ctx.cfg, "mc.eps_list");
    auto rep = coupled_viscosity_error(ctx.spec, policy(ctx), eps_list, s, mc_config(ctx));
    CsvTable t({"eps", "sup_err", "sup_err_ci", "dtheta", "dtheta_ci", "mean_theta"});
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    std::size_t m = 0;
    for (const auto& r : rep.rows)
    {
        t.row() << r.eps << r.sup_error << r.sup_error_ci << r.theta_error << r.theta_error_ci
                << r.mean_theta;
        if (r.eps > 0 && r.sup_error > 0)
        {
            double x = std::log(r.eps), y = std::log(r.sup_error);
            sx += x, sy += y, sxx += x * x, sxy += x * y, syy += y * y;
            ++m;
        }
    }
    ctx.out.write("couple.csv", t);
    CsvTable sum({"reference_theta", "n_paths", "n_invalid", "slope", "r2"});
    {
        auto row = sum.row();
        row << rep.reference_theta << rep.n_paths << rep.n_invalid;
        if (m >= 2)
        {
            const double mm = static_cast<double>(m);
            const double vx = sxx - sx * sx / mm, vy = syy - sy * sy / mm;
            const double cxy = sxy - sx * sy / mm;
            const double slope = cxy / vx;
            row << slope << (vy > 0 ? cxy * cxy / (vx * vy) : 1.0);
            ctx.log << "log-log slope " << format_number(slope) << "\n";
        }
        else
        {
            row.blank().blank();
        }
    }
    ctx.out.write("couple_summary.csv", sum);
    return ok;
}

int cmd_ordering(Context& ctx)
{
    auto s = sim_settings(ctx);
    auto rep = estimate_exit_time_ordering(ctx.spec, policy(ctx), s, mc_config(ctx));
    CsvTable sum({"level", "ordered_probability", "ordered_ci", "n_paths", "n_invalid"});
    sum.row() << rep.level << rep.ordered_probability << rep.ordered_ci << rep.n_paths
              << rep.n_invalid;
    CsvTable t({"i", "j", "p_tau_i_before_tau_j"});
    for (const auto& v : rep.violations)
        t.row() << (v.i + 1) << (v.j + 1) << v.frequency;
    ctx.out.write("ordering_summary.csv", sum);
    ctx.out.write("ordering.csv", t);
    ctx.log << "P{ordered} " << format_number(rep.ordered_probability) << " +- "
            << format_number(rep.ordered_ci) << "\n";
    return ok;
}

const std::map<std::string, std::pair<std::function<int(Context&)>, const char*>>& commands()
{
    static const std::map<std::string, std::pair<std::function<int(Context&)>, const char*>>
        table{
            {"validate", {cmd_validate, "structural and sampled diagnostics of the chain"}},
            {"skeleton", {cmd_skeleton, "noise-free trajectory from x0"}},
            {"survival", {cmd_survival, "Monte Carlo survival curve"}},
            {"rate", {cmd_rate, "Monte Carlo exit rate from the survival tail"}},
            {"eigen", {cmd_eigen, "principal Dirichlet eigenpair on the grid"}},
            {"crosscheck", {cmd_crosscheck, "grid eigenvalue against the Monte Carlo rate"}},
            {"optimize", {cmd_optimize, "minimum exit rates by policy iteration"}},
            {"exitprob", {cmd_exitprob, "exit probability by Dirichlet solve and Monte Carlo"}},
            {"sweep", {cmd_sweep, "vanishing-viscosity sweep of the Dirichlet solution"}},
            {"couple", {cmd_couple, "coupled-path error against the eps = 0 chain"}},
            {"ordering", {cmd_ordering, "ordering of the level exit times"}},
        };
    return table;
}

std::string read_file(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string utc_now()
{
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}
}  // namespace

//---------------------------------------------------------------------------//
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Exit rates and exit probabilities of chained control systems"};
    app.name("chainexit");
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::vector<std::string> sets;
    bool example = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "YAML config file");
        sub->add_option("--set", sets, "override a config value, e.g. mc.n_paths=100000");
    };
    auto outputs = [&](CLI::App* sub) {
        sub->add_option("--out", out_dir, "output directory (default output.dir)");
        sub->add_option("--seed", seed, "master seed (default mc.seed)");
        sub->add_option("--threads", threads, "worker threads, 0 for every core");
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, entry] : commands())
    {
        auto* sub = app.add_subcommand(name, entry.second);
        common(sub);
        outputs(sub);
        subs[name] = sub;
    }
    auto* cfg_cmd = app.add_subcommand("config", "print the effective config");
    common(cfg_cmd);
    cfg_cmd->add_flag("--example", example, "print a commented config with every default");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try
    {
        app.parse(reversed);
    }
    catch (const CLI::ParseError& e)
    {
        if (e.get_exit_code() == 0)
        {
            out << app.help();
            if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands()[0])
                out << sub->help();
            return ok;
        }
        err << "error: " << e.what() << "\n";
        return usage;
    }

    auto* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    try
    {
        std::string file_bytes;
        Json cfg = config::defaults();
        if (!config_path.empty())
        {
            file_bytes = read_file(config_path);
            cfg = config::parse(file_bytes);
        }
        for (const auto& s : sets)
            config::apply_override(cfg, s);

        if (name == "config")
        {
            if (example)
                out << config::example_text();
            else
                out << cfg.dump(2) << "\n";
            return ok;
        }

        if (chosen->count("--seed"))
            cfg["mc"]["seed"] = seed;
        if (chosen->count("--threads"))
            cfg["mc"]["threads"] = threads;
        if (chosen->count("--out"))
            cfg["output"]["dir"] = out_dir;

        const auto started = std::chrono::steady_clock::now();
        const std::string started_at = utc_now();
        ChainSpec spec(config::chain_definition(cfg));
        std::size_t nthreads = config::count(cfg, "mc.threads");
        if (nthreads == 0)
            nthreads = default_threads();
        Context ctx{cfg,
                    std::move(spec),
                    nthreads,
                    config::count(cfg, "mc.seed"),
                    OutputDir(config::text(cfg, "output.dir")),
                    err,
                    std::nullopt};

        int status = commands().at(name).first(ctx);

        Json manifest;
        manifest["tool"] = "chainexit";
        manifest["version"] = version;
        manifest["subcommand"] = name;
        manifest["arguments"] = args;
        manifest["overrides"] = sets;
        manifest["config_path"] = config_path;
        manifest["config_file_sha256"] = config_path.empty() ? "" : sha256_hex(file_bytes);
        manifest["config_sha256"] = sha256_hex(cfg.dump());
        manifest["config"] = cfg;
        manifest["master_seed"] = ctx.seed;
        manifest["threads"] = ctx.threads;
        manifest["started_utc"] = started_at;
        manifest["wall_clock_seconds"]
            = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        manifest["status"] = status;
        ctx.out.write_manifest(std::move(manifest));
        return status;
    }
    catch (const NumericError& e)
    {
        err << "numeric error: " << e.what() << "\n";
        return numeric_error;
    }
    catch (const Error& e)
    {
        err << "config error: " << e.what() << "\n";
        return config_error;
    }
}

}  // namespace chainexit::cli
