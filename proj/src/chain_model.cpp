#include "chainexit/chain_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "chainexit/error.hpp"
#include "chainexit/rng.hpp"

namespace chainexit
{
namespace
{
std::string drift_label(std::size_t i) { return "m_" + std::to_string(i + 1); }

std::string join_vars(const std::vector<expr::Variable>& vars)
{
    std::string out;
    for (std::size_t i = 0; i < vars.size(); ++i)
    {
        if (i)
            out += ", ";
        out += expr::variable_name(vars[i]);
    }
    return out;
}

expr::Expression parse_labeled(const std::string& src, const std::string& label)
{
    try
    {
        return expr::Expression(src);
    }
    catch (const expr::ParseError& e)
    {
        throw SpecError(label + ": " + e.what());
    }
}

std::vector<double> box_center(const Box& b)
{
    std::vector<double> c(b.dim());
    for (std::size_t k = 0; k < b.dim(); ++k)
        c[k] = 0.5 * (b.lower[k] + b.upper[k]);
    return c;
}

//! A point inside the sampled region, used as witness for structural checks.
std::vector<double> structural_witness(const ChainSpec& spec)
{
    Box omega = spec.product_domain(spec.n());
    if (omega.contains_open(spec.x0()))
        return spec.x0();
    return box_center(omega);
}

void sample_box(UniformSampler& rng, const Box& box, std::span<double> out)
{
    for (std::size_t k = 0; k < box.dim(); ++k)
        out[k] = rng.uniform(box.lower[k], box.upper[k]);
}

}  // namespace

//---------------------------------------------------------------------------//
bool Box::contains_open(std::span<const double> x) const noexcept
{
    for (std::size_t k = 0; k < lower.size(); ++k)
    {
        if (!(x[k] > lower[k] && x[k] < upper[k]))
            return false;
    }
    return true;
}

bool Box::contains_closed(std::span<const double> x) const noexcept
{
    for (std::size_t k = 0; k < lower.size(); ++k)
    {
        if (!(x[k] >= lower[k] && x[k] <= upper[k]))
            return false;
    }
    return true;
}

//---------------------------------------------------------------------------//
ChainSpec::ChainSpec(const ChainDefinition& def)
    : def_(def), n_(def.n), d_(def.d), m_(0), horizon_(def.horizon)
{
    if (n_ < 1 || d_ < 1)
        throw SpecError("chain needs n >= 1 subsystems of dimension d >= 1");
    if (def.drifts.size() != n_)
    {
        throw SpecError("expected " + std::to_string(n_) + " drift vectors, got "
                        + std::to_string(def.drifts.size()));
    }
    if (def.sigma.size() != d_ || def.sigma.front().empty())
        throw SpecError("sigma must have d = " + std::to_string(d_) + " nonempty rows");
    m_ = def.sigma.front().size();
    if (def.domains.size() != n_)
        throw SpecError("expected " + std::to_string(n_) + " domains");
    if (def.controls.size() != n_)
        throw SpecError("expected " + std::to_string(n_) + " control sets");

    const std::size_t nx = n_ * d_;
    for (std::size_t i = 0; i < n_; ++i)
    {
        if (def.drifts[i].size() != d_)
        {
            throw SpecError(drift_label(i) + " must have " + std::to_string(d_)
                            + " components");
        }
        const ControlSet& cs = def.controls[i];
        for (const auto& u : cs.values)
        {
            if (u.size() != cs.dim)
            {
                throw SpecError("control set U_" + std::to_string(i + 1)
                                + " mixes vector sizes");
            }
        }
        std::vector<expr::Expression> comps;
        for (std::size_t k = 0; k < d_; ++k)
        {
            std::string label = drift_label(i);
            if (d_ > 1)
                label += "[" + std::to_string(k + 1) + "]";
            auto e = parse_labeled(def.drifts[i][k], label);
            std::vector<expr::Variable> bad;
            for (const auto& v : expr::variables(e.ast()))
            {
                if ((v.kind == expr::VarKind::state && v.index >= nx)
                    || (v.kind == expr::VarKind::control && v.index >= cs.dim))
                    bad.push_back(v);
            }
            if (!bad.empty())
            {
                throw SpecError(label + " references undefined variable(s) "
                                + join_vars(bad));
            }
            comps.push_back(std::move(e));
        }
        drifts_.push_back(std::move(comps));
    }

    for (std::size_t r = 0; r < d_; ++r)
    {
        if (def.sigma[r].size() != m_)
            throw SpecError("sigma rows must all have the same length");
        for (std::size_t c = 0; c < m_; ++c)
        {
            std::string label = "sigma[" + std::to_string(r + 1) + "]["
                                + std::to_string(c + 1) + "]";
            auto e = parse_labeled(def.sigma[r][c], label);
            for (const auto& v : expr::variables(e.ast()))
            {
                if (v.kind == expr::VarKind::control
                    || (v.kind == expr::VarKind::state && v.index >= nx))
                {
                    throw SpecError(label + " references undefined variable "
                                    + expr::variable_name(v));
                }
            }
            sigma_.push_back(std::move(e));
        }
    }

    for (const auto& box : def.domains)
    {
        if (box.lower.size() != d_ || box.upper.size() != d_)
            throw SpecError("domain boxes must have dimension d");
    }
    domains_ = def.domains;
    controls_ = def.controls;

    eps_.assign(n_, 0.0);
    if (!def.eps.empty())
    {
        if (def.eps.size() != n_ - 1)
        {
            throw SpecError("eps needs n-1 = " + std::to_string(n_ - 1)
                            + " entries (subsystems 2..n)");
        }
        std::copy(def.eps.begin(), def.eps.end(), eps_.begin() + 1);
    }

    if (def.x0.empty())
    {
        for (const auto& box : domains_)
        {
            auto c = box_center(box);
            x0_.insert(x0_.end(), c.begin(), c.end());
        }
    }
    else if (def.x0.size() != nx)
    {
        throw SpecError("x0 needs n*d = " + std::to_string(nx) + " entries");
    }
    else
    {
        x0_ = def.x0;
    }
    def_.x0 = x0_;
}

Box ChainSpec::product_domain(std::size_t level) const
{
    Box out;
    for (std::size_t i = 0; i < level; ++i)
    {
        out.lower.insert(out.lower.end(), domains_[i].lower.begin(),
                         domains_[i].lower.end());
        out.upper.insert(out.upper.end(), domains_[i].upper.begin(),
                         domains_[i].upper.end());
    }
    return out;
}

std::vector<double> ChainSpec::uniform_eps(double value) const
{
    std::vector<double> e(n_, value);
    e[0] = 0;
    return e;
}

void check_policy(const ChainSpec& spec, const PolicyTable& policy)
{
    if (policy.size() != spec.n())
    {
        throw SpecError("policy covers " + std::to_string(policy.size())
                        + " subsystems, chain has " + std::to_string(spec.n()));
    }
    for (std::size_t i = 0; i < spec.n(); ++i)
    {
        std::size_t count = spec.controls(i).values.size();
        const auto& sub = policy.subsystem(i);
        for (auto c : sub.choice)
        {
            if (c >= count)
            {
                throw SpecError("policy for subsystem " + std::to_string(i + 1)
                                + " selects control " + std::to_string(c)
                                + " outside U_" + std::to_string(i + 1));
            }
        }
        for (const auto& axis : sub.axes)
        {
            if (axis.coordinate >= (i + 1) * spec.d())
            {
                throw SpecError("policy for subsystem " + std::to_string(i + 1)
                                + " depends on a later subsystem's state");
            }
        }
    }
}

//---------------------------------------------------------------------------//
ChainEvaluator::ChainEvaluator(const ChainSpec& spec, const PolicyTable& policy)
    : spec_(spec), policy_(policy)
{
    std::size_t depth = 1;
    for (std::size_t i = 0; i < spec.n(); ++i)
    {
        for (std::size_t k = 0; k < spec.d(); ++k)
            depth = std::max(depth, spec.drift(i, k).program().stack_depth());
    }
    for (std::size_t r = 0; r < spec.d(); ++r)
    {
        for (std::size_t c = 0; c < spec.noise_dim(); ++c)
            depth = std::max(depth, spec.sigma(r, c).program().stack_depth());
    }
    stack_.resize(depth);
    sigma_buf_.resize(spec.d() * spec.noise_dim());
}

const std::vector<double>&
ChainEvaluator::control(std::size_t i, std::span<const double> x) const
{
    return spec_.controls(i).values[policy_.choose(i, x)];
}

void ChainEvaluator::drift_with(std::size_t i, std::span<const double> x,
                                std::span<const double> u, std::span<double> out)
{
    expr::Env env{x, u, 0.0};
    for (std::size_t k = 0; k < spec_.d(); ++k)
        out[k] = spec_.drift(i, k)(env, stack_);
}

void ChainEvaluator::drift(std::size_t i, std::span<const double> x, std::span<double> out)
{
    drift_with(i, x, control(i, x), out);
}

void ChainEvaluator::drifts(std::size_t level, std::span<const double> x,
                            std::span<double> out)
{
    const std::size_t d = spec_.d();
    for (std::size_t i = 0; i < level; ++i)
        drift(i, x, out.subspan(i * d, d));
}

void ChainEvaluator::sigma(std::span<const double> x, std::span<double> out)
{
    expr::Env env{x, {}, 0.0};
    const std::size_t m = spec_.noise_dim();
    for (std::size_t r = 0; r < spec_.d(); ++r)
    {
        for (std::size_t c = 0; c < m; ++c)
            out[r * m + c] = spec_.sigma(r, c)(env, stack_);
    }
}

void ChainEvaluator::diffusion(std::span<const double> x, std::span<double> out)
{
    sigma(x, sigma_buf_);
    const std::size_t d = spec_.d();
    const std::size_t m = spec_.noise_dim();
    for (std::size_t r = 0; r < d; ++r)
    {
        for (std::size_t c = 0; c < d; ++c)
        {
            double acc = 0;
            for (std::size_t k = 0; k < m; ++k)
                acc += sigma_buf_[r * m + k] * sigma_buf_[c * m + k];
            out[r * d + c] = acc;
        }
    }
}

//---------------------------------------------------------------------------//
bool DiagnosticsReport::passed() const noexcept
{
    return std::all_of(checks.begin(), checks.end(),
                       [](const DiagnosticCheck& c) { return c.passed; });
}

const DiagnosticCheck* DiagnosticsReport::find(std::string_view name) const noexcept
{
    for (const auto& c : checks)
    {
        if (c.name == name)
            return &c;
    }
    return nullptr;
}

void DiagnosticsReport::append(const DiagnosticsReport& other)
{
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

//---------------------------------------------------------------------------//
DiagnosticsReport validate_spec(const ChainSpec& spec, const ValidationOptions& opts)
{
    DiagnosticsReport report;
    const std::size_t n = spec.n();
    const std::size_t d = spec.d();
    const auto witness = structural_witness(spec);

    auto structural = [&](std::string name, std::vector<std::string> problems) {
        DiagnosticCheck c;
        c.name = std::move(name);
        c.passed = problems.empty();
        c.value = static_cast<double>(problems.size());
        for (std::size_t i = 0; i < problems.size(); ++i)
            c.detail += (i ? "; " : "") + problems[i];
        if (!c.passed)
            c.witness = witness;
        report.checks.push_back(std::move(c));
    };

    // Triangular chain: m_i sees x^1..x^i only.
    {
        std::vector<std::string> problems;
        for (std::size_t i = 0; i < n; ++i)
        {
            std::vector<expr::Variable> late;
            for (std::size_t k = 0; k < d; ++k)
            {
                for (const auto& v : expr::variables(spec.drift(i, k).ast()))
                {
                    if (v.kind == expr::VarKind::state && v.index >= (i + 1) * d
                        && std::find(late.begin(), late.end(), v) == late.end())
                        late.push_back(v);
                }
            }
            if (!late.empty())
                problems.push_back(drift_label(i) + " references " + join_vars(late));
        }
        structural("triangular", std::move(problems));
    }

    {
        std::vector<std::string> problems;
        for (std::size_t r = 0; r < d; ++r)
        {
            for (std::size_t c = 0; c < spec.noise_dim(); ++c)
            {
                for (const auto& v : expr::variables(spec.sigma(r, c).ast()))
                {
                    if (v.kind == expr::VarKind::state && v.index >= d)
                    {
                        problems.push_back("sigma[" + std::to_string(r + 1) + "]["
                                           + std::to_string(c + 1) + "] references "
                                           + expr::variable_name(v));
                    }
                }
            }
        }
        structural("sigma_first_block", std::move(problems));
    }

    {
        std::vector<std::string> problems;
        const expr::Variable tvar{expr::VarKind::time, 0};
        for (std::size_t i = 0; i < n; ++i)
        {
            for (std::size_t k = 0; k < d; ++k)
            {
                if (expr::depends_on(spec.drift(i, k).ast(), tvar))
                    problems.push_back(drift_label(i) + " depends on t");
            }
        }
        for (std::size_t r = 0; r < d; ++r)
        {
            for (std::size_t c = 0; c < spec.noise_dim(); ++c)
            {
                if (expr::depends_on(spec.sigma(r, c).ast(), tvar))
                    problems.push_back("sigma depends on t");
            }
        }
        structural("autonomous", std::move(problems));
    }

    {
        std::vector<std::string> problems;
        for (std::size_t i = 0; i < n; ++i)
        {
            const Box& b = spec.domain(i);
            for (std::size_t k = 0; k < d; ++k)
            {
                if (!(std::isfinite(b.lower[k]) && std::isfinite(b.upper[k])
                      && b.upper[k] > b.lower[k]))
                {
                    problems.push_back("D_" + std::to_string(i + 1)
                                       + " has empty extent along axis "
                                       + std::to_string(k + 1));
                }
            }
        }
        structural("domains", std::move(problems));
    }

    {
        std::vector<std::string> problems;
        if (!spec.product_domain(n).contains_open(spec.x0()))
            problems.push_back("x0 is not inside the open product domain");
        structural("initial_point", std::move(problems));
    }

    {
        std::vector<std::string> problems;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (spec.controls(i).values.empty())
                problems.push_back("U_" + std::to_string(i + 1) + " is empty");
        }
        structural("control_sets", std::move(problems));
    }

    {
        std::vector<std::string> problems;
        for (std::size_t i = 1; i < n; ++i)
        {
            if (!(spec.eps()[i] >= 0))
                problems.push_back("eps_" + std::to_string(i + 1) + " is negative");
        }
        if (!(spec.horizon() > 0))
            problems.push_back("horizon must be positive");
        structural("parameters", std::move(problems));
    }

    // Uniform ellipticity of sigma sigma^T over D_1, sampled.
    {
        DiagnosticCheck c;
        c.name = "ellipticity";
        const Box& d1 = spec.domain(0);
        UniformSampler rng(opts.seed);
        std::vector<double> x(spec.state_dim(), 0.0);
        std::copy(spec.x0().begin(), spec.x0().end(), x.begin());
        PolicyTable dummy = PolicyTable::constant(std::vector<std::size_t>(n, 0));
        ChainEvaluator eval(spec, dummy);
        std::vector<double> a(d * d);
        double worst = std::numeric_limits<double>::infinity();
        std::vector<double> worst_point;
        for (std::size_t s = 0; s <= opts.n_samples; ++s)
        {
            if (s == 0)
            {
                auto ctr = box_center(d1);
                std::copy(ctr.begin(), ctr.end(), x.begin());
            }
            else
            {
                sample_box(rng, d1, std::span<double>(x).first(d));
            }
            eval.diffusion(x, a);
            Eigen::Map<const Eigen::MatrixXd> am(a.data(), static_cast<Eigen::Index>(d),
                                                 static_cast<Eigen::Index>(d));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(am, Eigen::EigenvaluesOnly);
            double least = es.eigenvalues().minCoeff();
            if (!std::isfinite(least))
                least = -std::numeric_limits<double>::infinity();
            if (least < worst || worst_point.empty())
            {
                worst = least;
                worst_point.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(d));
            }
        }
        c.value = worst;
        c.passed = worst >= opts.lambda_min;
        c.witness = worst_point;
        std::ostringstream os;
        os << "least eigenvalue of sigma sigma^T over D_1 is " << worst
           << " (required >= " << opts.lambda_min << ")";
        c.detail = os.str();
        report.checks.push_back(std::move(c));
    }
    return report;
}

//---------------------------------------------------------------------------//
DiagnosticsReport check_outward_drift(const ChainSpec& spec, const PolicyTable& policy,
                                      std::size_t level, std::size_t n_samples,
                                      std::uint64_t seed)
{
    if (level < 2 || level > spec.n())
    {
        throw SpecError("outward-drift level " + std::to_string(level)
                        + " out of range 2.." + std::to_string(spec.n()));
    }
    if (n_samples == 0)
        throw SpecError("outward-drift check needs at least one sample");
    const std::size_t d = spec.d();
    const std::size_t first = (level - 1) * d;
    check_policy(spec, policy);
    ChainEvaluator eval(spec, policy);
    UniformSampler rng(seed);
    std::vector<double> x = spec.x0();
    std::vector<double> m(d);
    double worst = std::numeric_limits<double>::infinity();
    std::vector<double> worst_point;
    const Box& target = spec.domain(level - 1);
    for (std::size_t s = 0; s < n_samples; ++s)
    {
        for (std::size_t i = 0; i + 1 < level; ++i)
            sample_box(rng, spec.domain(i), std::span<double>(x).subspan(i * d, d));
        sample_box(rng, target, std::span<double>(x).subspan(first, d));
        auto face = static_cast<std::size_t>(rng() * static_cast<double>(2 * d));
        face = std::min(face, 2 * d - 1);
        std::size_t axis = face / 2;
        bool upper = face % 2 == 1;
        x[first + axis] = upper ? target.upper[axis] : target.lower[axis];
        eval.drift(level - 1, x, m);
        double inner = upper ? m[axis] : -m[axis];
        if (std::isnan(inner))
            inner = -std::numeric_limits<double>::infinity();
        if (inner < worst || worst_point.empty())
        {
            worst = inner;
            worst_point.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(level * d));
        }
    }
    DiagnosticCheck c;
    c.name = "outward_drift_level_" + std::to_string(level);
    c.value = worst;
    c.passed = worst > 0;
    c.witness = worst_point;
    std::ostringstream os;
    os << "min <m_" << level << ", outward normal> over " << n_samples
       << " boundary samples is " << worst;
    c.detail = os.str();
    return DiagnosticsReport{{c}};
}

//---------------------------------------------------------------------------//
DiagnosticsReport check_rank_condition(const ChainSpec& spec, const PolicyTable& policy,
                                       std::size_t n_samples, std::uint64_t seed,
                                       double rank_tol)
{
    DiagnosticsReport report;
    const std::size_t d = spec.d();
    check_policy(spec, policy);
    ChainEvaluator eval(spec, policy);
    UniformSampler rng(seed);
    for (std::size_t level = 2; level <= spec.n(); ++level)
    {
        // jac[r * d + c] = d m_level[r] / d x_c, c in block 1.
        std::vector<expr::Program> jac;
        std::size_t depth = 1;
        for (std::size_t r = 0; r < d; ++r)
        {
            for (std::size_t c = 0; c < d; ++c)
            {
                jac.emplace_back(expr::differentiate(spec.drift(level - 1, r).ast(),
                                                     {expr::VarKind::state, c}));
                depth = std::max(depth, jac.back().stack_depth());
            }
        }
        std::vector<double> stack(depth);
        std::vector<double> x = spec.x0();
        Eigen::MatrixXd jm(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        double worst = std::numeric_limits<double>::infinity();
        std::vector<double> worst_point;
        for (std::size_t s = 0; s < std::max<std::size_t>(n_samples, 1); ++s)
        {
            for (std::size_t i = 0; i < level; ++i)
                sample_box(rng, spec.domain(i), std::span<double>(x).subspan(i * d, d));
            const auto& u = eval.control(level - 1, x);
            expr::Env env{x, u, 0.0};
            for (std::size_t r = 0; r < d; ++r)
            {
                for (std::size_t c = 0; c < d; ++c)
                {
                    jm(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))
                        = jac[r * d + c].eval(env, stack);
                }
            }
            double smin = jm.allFinite()
                              ? Eigen::JacobiSVD<Eigen::MatrixXd>(jm).singularValues().minCoeff()
                              : -std::numeric_limits<double>::infinity();
            if (smin < worst || worst_point.empty())
            {
                worst = smin;
                worst_point.assign(x.begin(),
                                   x.begin() + static_cast<std::ptrdiff_t>(level * d));
            }
        }
        DiagnosticCheck c;
        c.name = "rank_level_" + std::to_string(level);
        c.value = worst;
        c.passed = worst >= rank_tol;
        c.witness = worst_point;
        std::ostringstream os;
        os << "min smallest singular value of dm_" << level << "/dx^1 is " << worst
           << " (required >= " << rank_tol << ")";
        c.detail = os.str();
        report.checks.push_back(std::move(c));
    }
    return report;
}

//---------------------------------------------------------------------------//
SkeletonTrajectory simulate_deterministic(const ChainSpec& spec, const PolicyTable& policy,
                                          std::span<const double> x0, double dt,
                                          double horizon, const SkeletonOptions& opts)
{
    if (!(dt > 0))
        throw SpecError("skeleton step dt must be positive");
    if (x0.size() != spec.state_dim())
        throw SpecError("skeleton x0 must have n*d entries");
    const std::size_t nx = spec.state_dim();
    check_policy(spec, policy);
    ChainEvaluator eval(spec, policy);
    auto rhs = [&](std::span<const double> x, std::span<double> out) {
        eval.drifts(spec.n(), x, out);
    };

    SkeletonTrajectory traj;
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> k1(nx), k2(nx), k3(nx), k4(nx), tmp(nx);
    traj.times.push_back(0);
    traj.states.push_back(x);

    auto norm = [](std::span<const double> v) {
        double s = 0;
        for (double e : v)
            s += e * e;
        return std::sqrt(s);
    };

    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    double t = 0;
    for (std::size_t s = 0; s < steps; ++s)
    {
        double h = std::min(dt, horizon - t);
        rhs(x, k1);
        for (std::size_t k = 0; k < nx; ++k)
            tmp[k] = x[k] + 0.5 * h * k1[k];
        rhs(tmp, k2);
        for (std::size_t k = 0; k < nx; ++k)
            tmp[k] = x[k] + 0.5 * h * k2[k];
        rhs(tmp, k3);
        for (std::size_t k = 0; k < nx; ++k)
            tmp[k] = x[k] + h * k3[k];
        rhs(tmp, k4);
        for (std::size_t k = 0; k < nx; ++k)
            x[k] += h / 6.0 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k]);
        t = (s + 1 == steps) ? horizon : t + h;
        traj.times.push_back(t);
        traj.states.push_back(x);
        double r = norm(x);
        if (!(r <= opts.blowup_radius))
        {
            traj.escape_time = t;
            break;
        }
    }
    traj.terminal_norm = norm(x);
    traj.settled = !traj.escape_time && traj.terminal_norm < opts.stable_tol;
    return traj;
}

}  // namespace chainexit
