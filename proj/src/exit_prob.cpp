#include "chainexit/exit_prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/SparseLU>

#include "chainexit/error.hpp"
#include "chainexit/parallel.hpp"

namespace chainexit
{
namespace
{
constexpr double z95 = 1.959963984540054;
using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
}  // namespace

//---------------------------------------------------------------------------//
std::vector<Face> parse_faces(std::string_view text, std::size_t dim)
{
    std::vector<Face> faces;
    auto trim = [](std::string_view s) {
        while (!s.empty() && s.front() == ' ')
            s.remove_prefix(1);
        while (!s.empty() && s.back() == ' ')
            s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    if (text == "all")
    {
        for (std::size_t a = 0; a < dim; ++a)
        {
            faces.push_back({a, false});
            faces.push_back({a, true});
        }
        return faces;
    }
    while (!text.empty())
    {
        auto comma = text.find(',');
        auto tok = trim(text.substr(0, comma));
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        if (tok.size() < 3 || tok.front() != 'x' || (tok.back() != '+' && tok.back() != '-'))
            throw ConfigError("bad face '" + std::string(tok)
                              + "' (expected a form like x1+ or x2-)");
        std::size_t axis = 0;
        for (char c : tok.substr(1, tok.size() - 2))
        {
            if (c < '0' || c > '9')
                throw ConfigError("bad face '" + std::string(tok) + "'");
            axis = axis * 10 + static_cast<std::size_t>(c - '0');
        }
        if (axis < 1 || axis > dim)
            throw ConfigError("face '" + std::string(tok) + "' is outside the "
                              + std::to_string(dim) + "-dimensional box");
        Face f{axis - 1, tok.back() == '+'};
        if (std::find(faces.begin(), faces.end(), f) == faces.end())
            faces.push_back(f);
    }
    return faces;
}

std::string format_face(const Face& f)
{
    return "x" + std::to_string(f.axis + 1) + (f.upper ? "+" : "-");
}

//---------------------------------------------------------------------------//
BoundaryData BoundaryData::expression(const std::string& source)
{
    return expression(expr::Expression(source));
}

BoundaryData BoundaryData::expression(expr::Expression e)
{
    for (const auto& v : expr::variables(e.ast()))
    {
        if (v.kind != expr::VarKind::state)
            throw SpecError("boundary data may only reference state coordinates, found "
                            + expr::variable_name(v));
    }
    BoundaryData b;
    b.expr_ = std::move(e);
    return b;
}

BoundaryData indicator_family(double k, std::vector<Face> faces, Box box)
{
    if (!(k > 0))
        throw SpecError("indicator sharpness k must be positive");
    if (faces.empty())
        throw SpecError("indicator needs at least one target face");
    for (const auto& f : faces)
    {
        if (f.axis >= box.dim())
            throw SpecError("target face " + format_face(f) + " is outside the box");
    }
    BoundaryData b;
    b.indicator_ = true;
    b.k_ = k;
    b.faces_ = std::move(faces);
    b.box_ = std::move(box);
    return b;
}

double BoundaryData::operator()(std::span<const double> x) const
{
    if (!indicator_)
        return expr_(expr::Env{x, {}, 0.0});
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& f : faces_)
    {
        double bound = f.upper ? box_.upper[f.axis] : box_.lower[f.axis];
        dist = std::min(dist, std::abs(x[f.axis] - bound));
    }
    return std::clamp(1 - k_ * dist, 0.0, 1.0);
}

double BoundaryData::censored(std::span<const double> x) const
{
    return indicator_ ? 0.0 : (*this)(x);
}

//---------------------------------------------------------------------------//
DirichletSolution solve_dirichlet(const SparseOperator& op, const TensorGrid& grid,
                                  const BoundaryData& data)
{
    const auto n = static_cast<Eigen::Index>(op.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    std::map<std::size_t, double> values;
    std::vector<double> pt(grid.dim());
    DirichletSolution sol;
    sol.data_min = std::numeric_limits<double>::infinity();
    sol.data_max = -std::numeric_limits<double>::infinity();
    for (const auto& c : op.boundary)
    {
        auto it = values.find(c.node);
        if (it == values.end())
        {
            grid.full_point(c.node, pt);
            double g = data(pt);
            if (!std::isfinite(g))
                throw NumericError("boundary data is not finite at a boundary node");
            sol.data_min = std::min(sol.data_min, g);
            sol.data_max = std::max(sol.data_max, g);
            it = values.emplace(c.node, g).first;
        }
        rhs[static_cast<Eigen::Index>(c.row)] += c.value * it->second;
    }
    ColMatrix a = -ColMatrix(op.matrix);
    Eigen::SparseLU<ColMatrix> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
        throw NumericError("Dirichlet system is singular");
    Eigen::VectorXd v = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !v.allFinite())
        throw NumericError("Dirichlet solve failed");
    sol.field.assign(v.data(), v.data() + n);
    if (values.empty())
        sol.data_min = sol.data_max = 0;
    return sol;
}

//---------------------------------------------------------------------------//
ExitProbability mc_exit_probability(const ChainSpec& spec, const PolicyTable& policy,
                                    const SimulationSettings& settings, const McConfig& mc,
                                    const BoundaryData& data)
{
    auto paths = simulate_paths(spec, policy, settings, mc);
    ExitProbability out;
    double sum = 0, sum_sq = 0;
    for (const auto& p : paths)
    {
        if (!p.valid)
        {
            ++out.n_invalid;
            continue;
        }
        ++out.n_paths;
        double v = p.exited ? data(p.exit_state) : data.censored(p.exit_state);
        if (!std::isfinite(v))
            throw NumericError("boundary functional is not finite at a path end point");
        out.n_exited += p.exited;
        sum += v;
        sum_sq += v * v;
    }
    if (out.n_paths == 0)
        throw NumericError("all paths were invalid (non-finite state)");
    const double n = static_cast<double>(out.n_paths);
    out.q = sum / n;
    if (out.n_paths > 1)
    {
        double var = (sum_sq - n * out.q * out.q) / (n - 1);
        out.ci = z95 * std::sqrt(std::max(var, 0.0) / n);
    }
    return out;
}

//---------------------------------------------------------------------------//
SweepReport viscosity_sweep(const ChainSpec& spec, const PolicyTable& policy,
                            const TensorGrid& grid, const BoundaryData& data,
                            const std::vector<double>& eps_list, const SweepOptions& opts)
{
    if (eps_list.empty())
        throw SpecError("eps list is empty");
    for (std::size_t k = 0; k < eps_list.size(); ++k)
    {
        if (!(eps_list[k] >= 0))
            throw SpecError("eps values must be nonnegative");
        if (k > 0 && !(eps_list[k] < eps_list[k - 1]))
            throw SpecError("eps list must be strictly decreasing");
    }
    if (!(opts.inner_fraction > 0 && opts.inner_fraction <= 1))
        throw SpecError("inner_fraction must lie in (0, 1]");

    const std::size_t d = spec.d();
    double floor = 0;
    for (std::size_t a = d; a < grid.dim(); ++a)
        floor = std::max(floor, grid.spacing(a) * grid.spacing(a));

    SweepReport rep;
    std::vector<double> pt(grid.dim());
    const Box& box = grid.box();
    for (std::size_t p = 0; p < grid.interior_size(); ++p)
    {
        grid.interior_point(p, pt);
        bool inside = true;
        for (std::size_t a = 0; a < grid.dim(); ++a)
        {
            double c = 0.5 * (box.lower[a] + box.upper[a]);
            double half = 0.5 * (box.upper[a] - box.lower[a]);
            inside = inside && std::abs(pt[a] - c) <= opts.inner_fraction * half * (1 + 1e-12);
        }
        if (inside)
            rep.inner_nodes.push_back(p);
    }

    rep.rows.resize(eps_list.size());
    parallel_ranges(eps_list.size(), opts.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k)
        {
            auto eps = spec.uniform_eps(eps_list[k]);
            auto op = assemble_generator(spec, policy, grid, eps);
            rep.rows[k].eps = eps_list[k];
            rep.rows[k].field = solve_dirichlet(op, grid, data).field;
            rep.rows[k].ill_conditioned = grid.level() > 1 && eps_list[k] < floor;
        }
    });
    for (std::size_t k = 1; k < rep.rows.size(); ++k)
    {
        double diff = 0;
        for (auto p : rep.inner_nodes)
            diff = std::max(diff, std::abs(rep.rows[k].field[p] - rep.rows[k - 1].field[p]));
        rep.rows[k].sup_diff = diff;
        if (k > 1 && diff > *rep.rows[k - 1].sup_diff * (1 + 1e-9) + 1e-14)
            rep.differences_decreasing = false;
    }
    return rep;
}

//---------------------------------------------------------------------------//
double interpolate(const TensorGrid& grid, std::span<const double> field,
                   std::span<const double> x, const BoundaryData* data)
{
    const std::size_t dim = grid.dim();
    std::vector<std::size_t> base(dim), idx(dim);
    std::vector<double> w(dim), pt(dim);
    for (std::size_t a = 0; a < dim; ++a)
    {
        double pos = (x[a] - grid.box().lower[a]) / grid.spacing(a);
        double cell = std::clamp(std::floor(pos), 0.0, static_cast<double>(grid.nodes(a) - 2));
        base[a] = static_cast<std::size_t>(cell);
        w[a] = std::clamp(pos - cell, 0.0, 1.0);
    }
    double acc = 0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << dim); ++corner)
    {
        double weight = 1;
        for (std::size_t a = 0; a < dim; ++a)
        {
            bool up = (corner >> a) & 1;
            idx[a] = base[a] + (up ? 1 : 0);
            weight *= up ? w[a] : 1 - w[a];
        }
        if (weight == 0)
            continue;
        std::size_t q = grid.interior_flat(idx);
        double v = 0;
        if (q != TensorGrid::npos)
        {
            v = field[q];
        }
        else if (data)
        {
            grid.full_point(grid.full_flat(idx), pt);
            v = (*data)(pt);
        }
        acc += weight * v;
    }
    return acc;
}

}  // namespace chainexit
