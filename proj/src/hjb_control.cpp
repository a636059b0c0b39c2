#include "chainexit/hjb_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainexit/error.hpp"

namespace chainexit
{
namespace
{
std::size_t own_flat(const TensorGrid& grid, std::span<const std::size_t> idx)
{
    const std::size_t d = grid.block_dim();
    const std::size_t first = (grid.level() - 1) * d;
    std::size_t flat = 0;
    for (std::size_t a = first; a < first + d; ++a)
        flat = flat * grid.interior_nodes(a) + (idx[a] - 1);
    return flat;
}

std::vector<SubsystemPolicy> copy_subsystems(const PolicyTable& policy)
{
    std::vector<SubsystemPolicy> subs;
    for (std::size_t i = 0; i < policy.size(); ++i)
        subs.push_back(policy.subsystem(i));
    return subs;
}

std::size_t pick_max(std::span<const double> h, double tie_tol)
{
    double scale = 0;
    for (double v : h)
        scale = std::max(scale, std::abs(v));
    const double slack = tie_tol * (1 + scale);
    std::size_t best = 0;
    for (std::size_t u = 1; u < h.size(); ++u)
    {
        if (h[u] > h[best] + slack)
            best = u;
    }
    return best;
}
}  // namespace

//---------------------------------------------------------------------------//
double discrete_hamiltonian(const ChainSpec& spec, ChainEvaluator& eval,
                            const TensorGrid& grid, std::span<const double> psi,
                            std::size_t p, std::span<const double> x,
                            std::span<const double> u)
{
    const std::size_t d = spec.d();
    const std::size_t level = grid.level();
    const std::size_t first = (level - 1) * d;
    std::vector<double> m(d);
    std::vector<std::size_t> idx(grid.dim());
    grid.interior_index(p, idx);
    eval.drift_with(level - 1, x, u, m);
    auto value_at = [&](std::size_t axis, int off) {
        idx[axis] = static_cast<std::size_t>(static_cast<long>(idx[axis]) + off);
        std::size_t q = grid.interior_flat(idx);
        idx[axis] = static_cast<std::size_t>(static_cast<long>(idx[axis]) - off);
        return q == TensorGrid::npos ? 0.0 : psi[q];
    };
    double h_val = 0;
    for (std::size_t k = 0; k < d; ++k)
    {
        const std::size_t axis = first + k;
        const double b = m[k];
        const double h = grid.spacing(axis);
        if (b > 0)
            h_val += b * (value_at(axis, +1) - psi[p]) / h;
        else if (b < 0)
            h_val += b * (psi[p] - value_at(axis, -1)) / h;
    }
    return h_val;
}

PolicyTable policy_improve(const ChainSpec& spec, const PolicyTable& policy,
                           const TensorGrid& grid, std::span<const double> psi,
                           const ImproveOptions& opts)
{
    const std::size_t n_int = grid.interior_size();
    if (psi.size() != n_int)
        throw SpecError("psi has " + std::to_string(psi.size()) + " entries, grid has "
                        + std::to_string(n_int) + " interior nodes");
    for (std::size_t p = 0; p < n_int; ++p)
    {
        if (!(psi[p] > 0))
            throw NumericError("policy improvement needs a strictly positive psi (entry "
                               + std::to_string(p) + " is " + std::to_string(psi[p]) + ")");
    }
    check_policy(spec, policy);
    const std::size_t level = grid.level();
    const std::size_t d = spec.d();
    const ControlSet& set = spec.controls(level - 1);
    const std::size_t nu = set.values.size();
    ChainEvaluator eval(spec, policy);
    std::vector<double> x(spec.state_dim());
    std::vector<std::size_t> idx(grid.dim());

    SubsystemPolicy out;
    if (opts.mode == FeedbackMode::joint)
    {
        out.axes = grid.policy_axes(0, grid.dim());
        out.choice.assign(n_int, 0);
        std::vector<double> h(nu);
        for (std::size_t p = 0; p < n_int; ++p)
        {
            node_state(spec, grid, p, x);
            for (std::size_t u = 0; u < nu; ++u)
                h[u] = discrete_hamiltonian(spec, eval, grid, psi, p, x, set.values[u]);
            out.choice[p] = static_cast<std::uint32_t>(pick_max(h, opts.tie_tol));
        }
    }
    else
    {
        out.axes = grid.policy_axes((level - 1) * d, d);
        std::size_t n_own = 1;
        for (const auto& a : out.axes)
            n_own *= a.count;
        std::vector<double> acc(n_own * nu, 0.0);
        for (std::size_t p = 0; p < n_int; ++p)
        {
            node_state(spec, grid, p, x);
            grid.interior_index(p, idx);
            const std::size_t q = own_flat(grid, idx);
            for (std::size_t u = 0; u < nu; ++u)
                acc[q * nu + u]
                    += psi[p] * discrete_hamiltonian(spec, eval, grid, psi, p, x, set.values[u]);
        }
        out.choice.assign(n_own, 0);
        for (std::size_t q = 0; q < n_own; ++q)
        {
            out.choice[q] = static_cast<std::uint32_t>(
                pick_max(std::span<const double>(acc).subspan(q * nu, nu), opts.tie_tol));
        }
    }
    auto subs = copy_subsystems(policy);
    subs.at(level - 1) = std::move(out);
    return PolicyTable(std::move(subs), opts.mode);
}

//---------------------------------------------------------------------------//
std::size_t smallest_control(const ControlSet& set)
{
    if (set.values.empty())
        throw SpecError("control set is empty");
    std::size_t best = 0;
    double best_norm = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < set.values.size(); ++u)
    {
        double s = 0;
        for (double v : set.values[u])
            s += v * v;
        if (s < best_norm)
        {
            best_norm = s;
            best = u;
        }
    }
    return best;
}

PolicyTable constant_on_grid(const PolicyTable& policy, const TensorGrid& grid,
                             std::size_t index, FeedbackMode mode)
{
    SubsystemPolicy sp;
    if (mode == FeedbackMode::joint)
        sp.axes = grid.policy_axes(0, grid.dim());
    else
        sp.axes = grid.policy_axes((grid.level() - 1) * grid.block_dim(), grid.block_dim());
    std::size_t count = 1;
    for (const auto& a : sp.axes)
        count *= a.count;
    sp.choice.assign(count, static_cast<std::uint32_t>(index));
    auto subs = copy_subsystems(policy);
    subs.at(grid.level() - 1) = std::move(sp);
    return PolicyTable(std::move(subs), mode);
}

PolicyIterationResult policy_iteration(const ChainSpec& spec, const PolicyTable& base,
                                       const TensorGrid& grid, std::span<const double> eps,
                                       const PolicyIterationOptions& opts)
{
    if (opts.max_sweeps == 0)
        throw SpecError("max_sweeps must be at least 1");
    const std::size_t level = grid.level();
    const ControlSet& set = spec.controls(level - 1);
    std::size_t start = opts.initial_index.value_or(smallest_control(set));
    if (start >= set.values.size())
        throw SpecError("initial control index out of range");
    PolicyTable current = constant_on_grid(base, grid, start, opts.improve.mode);

    PolicyIterationResult res;
    std::optional<PolicyIterationResult> best;
    for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep)
    {
        auto op = assemble_generator(spec, current, grid, eps);
        auto eig = principal_eigenpair(op, opts.eigen);
        res.history.push_back(eig.lambda);
        res.sweeps = sweep;
        if (!best || eig.lambda < best->lambda)
        {
            best = PolicyIterationResult{};
            best->lambda = eig.lambda;
            best->eigen = eig;
            best->policy = current;
        }
        auto next = policy_improve(spec, current, grid, eig.psi, opts.improve);
        const bool same = next == current;
        const bool flat = sweep > 1
                          && std::abs(eig.lambda - res.history[sweep - 2]) < opts.tol;
        if (same || flat)
        {
            res.lambda = eig.lambda;
            res.eigen = std::move(eig);
            res.policy = std::move(current);
            res.converged = true;
            res.fixed_point = same;
            return res;
        }
        current = std::move(next);
    }
    res.lambda = best->lambda;
    res.eigen = std::move(best->eigen);
    res.policy = std::move(best->policy);
    res.converged = false;
    return res;
}

//---------------------------------------------------------------------------//
ChainOptimum optimize_chain(const ChainSpec& spec, std::span<const std::size_t> nodes,
                            std::span<const double> eps, const PolicyIterationOptions& opts)
{
    std::vector<std::size_t> start;
    for (std::size_t i = 0; i < spec.n(); ++i)
        start.push_back(smallest_control(spec.controls(i)));
    ChainOptimum out;
    out.policy = PolicyTable(copy_subsystems(PolicyTable::constant(start)), opts.improve.mode);
    for (std::size_t level = 1; level <= spec.n(); ++level)
    {
        const std::size_t dim = level * spec.d();
        std::vector<std::size_t> counts;
        if (nodes.size() == 1)
            counts.assign(1, nodes[0]);
        else if (nodes.size() >= dim)
            counts.assign(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(dim));
        else
            throw SpecError("optimize needs 1 or n*d node counts");
        auto grid = build_grid(spec, level, counts);
        auto result = policy_iteration(spec, out.policy, grid, eps, opts);
        out.policy = result.policy;
        out.levels.push_back({level, std::move(result)});
    }
    return out;
}

}  // namespace chainexit
