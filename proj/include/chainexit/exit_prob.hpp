#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainexit/expr.hpp"
#include "chainexit/generator_fd.hpp"
#include "chainexit/sde_sim.hpp"

namespace chainexit
{

//! One face of a box: flattened coordinate and side.
struct Face
{
    std::size_t axis = 0;
    bool upper = true;

    bool operator==(const Face&) const = default;
};

//! Parses "x1+", "x2-", or "all" against a box of dimension dim.
std::vector<Face> parse_faces(std::string_view text, std::size_t dim);
std::string format_face(const Face& f);

//---------------------------------------------------------------------------//
/*!
 * Boundary functional: an expression in x1..xD, or the indicator ramp
 * clamp(1 - k * dist(x, faces), 0, 1) over the box.
 */
class BoundaryData
{
  public:
    static BoundaryData expression(const std::string& source);
    static BoundaryData expression(expr::Expression e);

    bool is_indicator() const noexcept { return indicator_; }
    double sharpness() const noexcept { return k_; }
    const std::vector<Face>& faces() const noexcept { return faces_; }
    const expr::Expression& expression_value() const noexcept { return expr_; }

    double operator()(std::span<const double> x) const;

    //! Value credited to a path censored at T with state x.
    double censored(std::span<const double> x) const;

  private:
    friend BoundaryData indicator_family(double k, std::vector<Face> faces, Box box);
    bool indicator_ = false;
    double k_ = 0;
    std::vector<Face> faces_;
    Box box_;
    expr::Expression expr_;
};

//! Ramp of width 1/k next to the target faces of \a box.
BoundaryData indicator_family(double k, std::vector<Face> faces, Box box);

//---------------------------------------------------------------------------//
struct DirichletSolution
{
    std::vector<double> field;
    double data_min = 0;
    double data_max = 0;
};

//! Solves L_h v = 0 with v = data on boundary nodes.
DirichletSolution solve_dirichlet(const SparseOperator& op, const TensorGrid& grid,
                                  const BoundaryData& data);

struct ExitProbability
{
    double q = 0;
    double ci = 0;
    std::size_t n_paths = 0;
    std::size_t n_invalid = 0;
    std::size_t n_exited = 0;
};

ExitProbability mc_exit_probability(const ChainSpec& spec, const PolicyTable& policy,
                                    const SimulationSettings& settings, const McConfig& mc,
                                    const BoundaryData& data);

struct SweepRow
{
    double eps = 0;
    std::vector<double> field;
    //! Sup difference to the previous row on the inner sub-box; absent for the first.
    std::optional<double> sup_diff;
    bool ill_conditioned = false;
};

struct SweepReport
{
    std::vector<SweepRow> rows;
    //! Interior nodes inside the inner sub-box.
    std::vector<std::size_t> inner_nodes;
    bool differences_decreasing = true;
};

struct SweepOptions
{
    //! Inner sub-box half-width as a fraction of each axis half-width.
    double inner_fraction = 0.5;
    std::size_t threads = 1;
};

SweepReport viscosity_sweep(const ChainSpec& spec, const PolicyTable& policy,
                            const TensorGrid& grid, const BoundaryData& data,
                            const std::vector<double>& eps_list, const SweepOptions& opts = {});

//! Multilinear interpolation of an interior field (zero-padded boundary) at x.
double interpolate(const TensorGrid& grid, std::span<const double> field,
                   std::span<const double> x, const BoundaryData* data = nullptr);

}  // namespace chainexit
