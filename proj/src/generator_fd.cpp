#include "chainexit/generator_fd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "chainexit/error.hpp"

namespace chainexit
{
namespace
{
constexpr std::size_t max_reported_warnings = 64;

struct RowEntry
{
    std::size_t node;
    double value;
};

void add_entry(std::vector<RowEntry>& row, std::size_t node, double value)
{
    for (auto& e : row)
    {
        if (e.node == node)
        {
            e.value += value;
            return;
        }
    }
    row.push_back({node, value});
}
}  // namespace

//---------------------------------------------------------------------------//
TensorGrid::TensorGrid(Box box, std::vector<std::size_t> nodes, std::size_t level,
                       std::size_t d)
    : box_(std::move(box)), nodes_(std::move(nodes)), level_(level), d_(d)
{
    if (nodes_.size() != box_.dim())
        throw SpecError("grid node counts do not match the box dimension");
    for (std::size_t a = 0; a < nodes_.size(); ++a)
    {
        if (nodes_[a] < 3)
            throw SpecError("grid needs at least 3 nodes per axis (axis "
                            + std::to_string(a + 1) + " has "
                            + std::to_string(nodes_[a]) + ")");
        double h = (box_.upper[a] - box_.lower[a]) / static_cast<double>(nodes_[a] - 1);
        if (!(h > 0) || !std::isfinite(h))
            throw SpecError("grid axis " + std::to_string(a + 1) + " has nonpositive extent");
        h_.push_back(h);
        n_interior_ *= nodes_[a] - 2;
        n_full_ *= nodes_[a];
    }
}

double TensorGrid::coordinate(std::size_t axis, std::size_t j) const
{
    if (j + 1 == nodes_.at(axis))
        return box_.upper[axis];
    return box_.lower[axis] + static_cast<double>(j) * h_[axis];
}

void TensorGrid::interior_index(std::size_t p, std::span<std::size_t> out) const
{
    for (std::size_t a = dim(); a-- > 0;)
    {
        std::size_t m = nodes_[a] - 2;
        out[a] = p % m + 1;
        p /= m;
    }
}

void TensorGrid::interior_point(std::size_t p, std::span<double> out) const
{
    for (std::size_t a = dim(); a-- > 0;)
    {
        std::size_t m = nodes_[a] - 2;
        out[a] = coordinate(a, p % m + 1);
        p /= m;
    }
}

std::size_t TensorGrid::full_flat(std::span<const std::size_t> idx) const
{
    std::size_t flat = 0;
    for (std::size_t a = 0; a < dim(); ++a)
        flat = flat * nodes_[a] + idx[a];
    return flat;
}

std::size_t TensorGrid::interior_flat(std::span<const std::size_t> idx) const
{
    std::size_t flat = 0;
    for (std::size_t a = 0; a < dim(); ++a)
    {
        if (idx[a] == 0 || idx[a] + 1 >= nodes_[a])
            return npos;
        flat = flat * (nodes_[a] - 2) + (idx[a] - 1);
    }
    return flat;
}

void TensorGrid::full_index(std::size_t flat, std::span<std::size_t> out) const
{
    for (std::size_t a = dim(); a-- > 0;)
    {
        out[a] = flat % nodes_[a];
        flat /= nodes_[a];
    }
}

void TensorGrid::full_point(std::size_t flat, std::span<double> out) const
{
    for (std::size_t a = dim(); a-- > 0;)
    {
        out[a] = coordinate(a, flat % nodes_[a]);
        flat /= nodes_[a];
    }
}

std::vector<PolicyAxis> TensorGrid::policy_axes(std::size_t first, std::size_t count) const
{
    std::vector<PolicyAxis> axes;
    for (std::size_t a = first; a < first + count; ++a)
        axes.push_back({a, coordinate(a, 1), h_.at(a), nodes_.at(a) - 2});
    return axes;
}

TensorGrid build_grid(const ChainSpec& spec, std::size_t level,
                      std::span<const std::size_t> nodes_per_axis)
{
    if (level < 1 || level > spec.n())
        throw SpecError("grid level " + std::to_string(level) + " out of range 1.."
                        + std::to_string(spec.n()));
    const std::size_t dim = level * spec.d();
    if (dim > max_grid_dim)
    {
        throw SpecError("level " + std::to_string(level) + " needs a " + std::to_string(dim)
                        + "-dimensional grid; dense grids are limited to "
                        + std::to_string(max_grid_dim)
                        + " dimensions, use the Monte Carlo commands instead");
    }
    std::vector<std::size_t> nodes;
    if (nodes_per_axis.size() == 1)
        nodes.assign(dim, nodes_per_axis[0]);
    else if (nodes_per_axis.size() == dim)
        nodes.assign(nodes_per_axis.begin(), nodes_per_axis.end());
    else
        throw SpecError("grid needs 1 or " + std::to_string(dim) + " node counts, got "
                        + std::to_string(nodes_per_axis.size()));
    return TensorGrid(spec.product_domain(level), std::move(nodes), level, spec.d());
}

void node_state(const ChainSpec& spec, const TensorGrid& grid, std::size_t p,
                std::span<double> x)
{
    std::copy(spec.x0().begin(), spec.x0().end(), x.begin());
    grid.interior_point(p, x.first(grid.dim()));
}

//---------------------------------------------------------------------------//
SparseOperator assemble_generator(const ChainSpec& spec, const PolicyTable& policy,
                                  const TensorGrid& grid, std::span<const double> eps)
{
    const std::size_t dim = grid.dim();
    const std::size_t d = spec.d();
    const std::size_t level = grid.level();
    if (eps.size() != spec.n())
        throw SpecError("eps vector must have n entries");
    check_policy(spec, policy);

    ChainEvaluator eval(spec, policy);
    const std::size_t n_int = grid.interior_size();
    std::vector<double> x(spec.state_dim());
    std::vector<double> b(dim), a(d * d);
    std::vector<std::size_t> idx(dim), nb(dim);
    std::vector<RowEntry> row;
    std::vector<Eigen::Triplet<double, int>> trips;
    trips.reserve(n_int * (1 + 2 * dim + (dim > 1 ? 4 : 0)));

    SparseOperator op;
    op.grid_dim = dim;

    auto neighbor = [&](std::initializer_list<std::pair<std::size_t, int>> shifts) {
        nb = idx;
        for (auto [axis, off] : shifts)
            nb[axis] = static_cast<std::size_t>(static_cast<long>(nb[axis]) + off);
        return grid.full_flat(nb);
    };

    for (std::size_t p = 0; p < n_int; ++p)
    {
        grid.interior_index(p, idx);
        node_state(spec, grid, p, x);
        eval.drifts(level, x, b);
        eval.diffusion(x, a);
        const std::size_t self = grid.full_flat(idx);
        row.clear();
        row.push_back({self, 0.0});

        for (std::size_t k = 0; k < dim; ++k)
        {
            if (!std::isfinite(b[k]))
                throw NumericError("drift is not finite at grid node "
                                   + std::to_string(p));
            const double h = grid.spacing(k);
            const std::size_t block = k / d;
            const double diff = block == 0 ? 0.5 * a[k * d + k] : 0.5 * eps[block];
            if (!std::isfinite(diff))
                throw NumericError("diffusion is not finite at grid node "
                                   + std::to_string(p));
            if (diff != 0)
            {
                const double c = diff / (h * h);
                add_entry(row, neighbor({{k, -1}}), c);
                add_entry(row, neighbor({{k, +1}}), c);
                add_entry(row, self, -2 * c);
            }
            if (b[k] > 0)
            {
                add_entry(row, neighbor({{k, +1}}), b[k] / h);
                add_entry(row, self, -b[k] / h);
            }
            else if (b[k] < 0)
            {
                add_entry(row, neighbor({{k, -1}}), -b[k] / h);
                add_entry(row, self, b[k] / h);
            }
        }
        for (std::size_t k = 0; k < d && k < dim; ++k)
        {
            for (std::size_t l = k + 1; l < d && l < dim; ++l)
            {
                const double c = a[k * d + l];
                if (c == 0)
                    continue;
                op.has_cross_terms = true;
                const double w = c / (4 * grid.spacing(k) * grid.spacing(l));
                add_entry(row, neighbor({{k, +1}, {l, +1}}), w);
                add_entry(row, neighbor({{k, -1}, {l, -1}}), w);
                add_entry(row, neighbor({{k, +1}, {l, -1}}), -w);
                add_entry(row, neighbor({{k, -1}, {l, +1}}), -w);
            }
        }

        double diag = 0, off = 0;
        for (const auto& e : row)
        {
            if (e.node == self)
                diag = e.value;
            else
                off += std::abs(e.value);
            std::size_t col = TensorGrid::npos;
            if (e.node == self)
            {
                col = p;
            }
            else
            {
                grid.full_index(e.node, nb);
                col = grid.interior_flat(nb);
            }
            if (col == TensorGrid::npos)
            {
                if (e.value != 0)
                    op.boundary.push_back({p, e.node, e.value});
            }
            else if (e.value != 0 || col == p)
            {
                trips.emplace_back(static_cast<int>(p), static_cast<int>(col), e.value);
            }
        }
        if (off > std::abs(diag) * (1 + 1e-12))
        {
            ++op.nondominant_rows;
            if (op.warnings.size() < max_reported_warnings)
            {
                OperatorWarning w;
                w.row = p;
                w.point.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(dim));
                std::ostringstream os;
                os << "row " << p << " is not diagonally dominant (|diag| = "
                   << std::abs(diag) << ", off-diagonal sum = " << off
                   << "); cross terms may break monotonicity";
                w.message = os.str();
                op.warnings.push_back(std::move(w));
            }
        }
    }
    op.matrix.resize(static_cast<int>(n_int), static_cast<int>(n_int));
    op.matrix.setFromTriplets(trips.begin(), trips.end());
    op.matrix.makeCompressed();
    return op;
}

std::vector<double> apply(const SparseOperator& op, std::span<const double> field)
{
    if (field.size() != op.size())
        throw SpecError("field has " + std::to_string(field.size())
                        + " entries, operator expects " + std::to_string(op.size()));
    Eigen::Map<const Eigen::VectorXd> v(field.data(), static_cast<Eigen::Index>(field.size()));
    Eigen::VectorXd r = op.matrix * v;
    return std::vector<double>(r.data(), r.data() + r.size());
}

void write_triplets(const SparseOperator& op, std::ostream& os)
{
    char buf[96];
    for (int r = 0; r < op.matrix.outerSize(); ++r)
    {
        for (SparseOperator::Matrix::InnerIterator it(op.matrix, r); it; ++it)
        {
            std::snprintf(buf, sizeof buf, "%d %d %.17g\n", r, static_cast<int>(it.col()),
                          it.value());
            os << buf;
        }
    }
}

}  // namespace chainexit
