#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "chainexit/chain_model.hpp"
#include "chainexit/policy.hpp"

namespace chainexit
{

//! Largest supported grid dimension l*d.
inline constexpr std::size_t max_grid_dim = 3;

//---------------------------------------------------------------------------//
/*!
 * Uniform tensor grid over Omega_l, boundary nodes included.
 *
 * Interior nodes are enumerated row-major with the last axis fastest.
 */
class TensorGrid
{
  public:
    TensorGrid(Box box, std::vector<std::size_t> nodes, std::size_t level, std::size_t d);

    std::size_t dim() const noexcept { return nodes_.size(); }
    std::size_t level() const noexcept { return level_; }
    std::size_t block_dim() const noexcept { return d_; }
    const Box& box() const noexcept { return box_; }

    //! Node count along an axis, boundary included.
    std::size_t nodes(std::size_t axis) const { return nodes_.at(axis); }
    std::size_t interior_nodes(std::size_t axis) const { return nodes_.at(axis) - 2; }
    double spacing(std::size_t axis) const { return h_.at(axis); }
    double coordinate(std::size_t axis, std::size_t j) const;

    std::size_t interior_size() const noexcept { return n_interior_; }
    std::size_t full_size() const noexcept { return n_full_; }

    //! Multi-index (full-grid numbering, 0 = lower boundary) of interior node p.
    void interior_index(std::size_t p, std::span<std::size_t> out) const;
    void interior_point(std::size_t p, std::span<double> out) const;

    std::size_t full_flat(std::span<const std::size_t> idx) const;
    //! Interior position of a full multi-index, or npos on the boundary.
    std::size_t interior_flat(std::span<const std::size_t> idx) const;
    void full_index(std::size_t flat, std::span<std::size_t> out) const;
    void full_point(std::size_t flat, std::span<double> out) const;

    //! Policy axes spanning the interior nodes of axes [first, first + count).
    std::vector<PolicyAxis> policy_axes(std::size_t first, std::size_t count) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  private:
    Box box_;
    std::vector<std::size_t> nodes_;
    std::vector<double> h_;
    std::size_t level_;
    std::size_t d_;
    std::size_t n_interior_ = 1;
    std::size_t n_full_ = 1;
};

//! A single node count is broadcast to every axis.
TensorGrid build_grid(const ChainSpec& spec, std::size_t level,
                      std::span<const std::size_t> nodes_per_axis);

//---------------------------------------------------------------------------//
struct BoundaryCoupling
{
    std::size_t row = 0;
    //! Flat full-grid index of the boundary node.
    std::size_t node = 0;
    double value = 0;
};

struct OperatorWarning
{
    std::size_t row = 0;
    std::vector<double> point;
    std::string message;
};

struct StencilInfo
{
    std::string advection = "upwind1";
    std::string diffusion = "central2";
    std::string cross = "central4";
};

/*!
 * Discrete generator L_h on the interior nodes with zero Dirichlet data.
 *
 * Columns of boundary nodes are removed from the matrix and kept in
 * boundary() so inhomogeneous data can be moved to a right-hand side.
 */
struct SparseOperator
{
    using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

    Matrix matrix;
    std::vector<BoundaryCoupling> boundary;
    //! First few non-diagonally-dominant rows; nondominant_rows counts all.
    std::vector<OperatorWarning> warnings;
    std::size_t nondominant_rows = 0;
    StencilInfo stencil;
    bool has_cross_terms = false;
    std::size_t grid_dim = 1;

    std::size_t size() const noexcept { return static_cast<std::size_t>(matrix.rows()); }
};

//! Generator of the level-l chain with regularization eps (size n, entry 0 unused).
SparseOperator assemble_generator(const ChainSpec& spec, const PolicyTable& policy,
                                  const TensorGrid& grid, std::span<const double> eps);

std::vector<double> apply(const SparseOperator& op, std::span<const double> field);

//! One "row col value" line per stored entry, 0-based indices.
void write_triplets(const SparseOperator& op, std::ostream& os);

//! Full state vector (size n*d) for interior node p; coordinates above the level from x0.
void node_state(const ChainSpec& spec, const TensorGrid& grid, std::size_t p,
                std::span<double> x);

}  // namespace chainexit
