#pragma once

#include "fracle/domain_grid.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <memory>

namespace fracle {

namespace detail {
struct InverseCache;
}

/// C(n, s) from the closed form 4^s s Gamma((n+2s)/2) / (pi^{n/2} Gamma(1-s)).
/// Throws std::domain_error unless n is 1 or 2 and 0 < s < 1.
double normalization_constant(int n, double s);

/// C(n, s) as the reciprocal of the integral of (1 - cos z_1)/|z|^{n+2s} over R^n,
/// evaluated by quadrature. Independent of normalization_constant().
double normalization_constant_quadrature(int n, double s);

struct AssemblyOptions {
    /// Adds the second-order Taylor contribution of the cell around y = 0, estimated by
    /// the standard second difference. Off-diagonal signs are unaffected either way.
    bool singular_correction = true;
};

/// Dense discretization of the restricted fractional Laplacian on the interior nodes of
/// a grid, with u = 0 on the exterior.
///
/// 1D: u is replaced by its piecewise linear interpolant for |y| >= h and the kernel is
/// integrated exactly against each hat function. 2D: the kernel is integrated exactly
/// over each lattice cell. In both cases the diagonal carries the full kernel mass
/// outside the singular cell, which makes the exterior tail exact.
class FractionalOperator {
public:
    FractionalOperator(Grid grid, double s, Eigen::MatrixXd matrix, AssemblyOptions options);

    const Grid& grid() const { return grid_; }
    double order() const { return s_; }
    int dimension() const { return grid_.dimension(); }
    double constant() const { return constant_; }
    const AssemblyOptions& options() const { return options_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    /// Row sums of the matrix: the killing rate from the exterior (positive).
    Eigen::VectorXd row_sums() const { return matrix_.rowwise().sum(); }

    GridFunction apply(const GridFunction& u) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& u) const { return matrix_ * u; }

    /// Solves A w = f with the cached Cholesky factor (no residual check).
    Eigen::VectorXd solve(const Eigen::VectorXd& f) const { return factor_->solve(f); }
    /// Discrete Green matrix A^{-1}, computed on first use.
    const Eigen::MatrixXd& inverse() const;

private:
    Grid grid_;
    double s_;
    double constant_;
    Eigen::MatrixXd matrix_;
    AssemblyOptions options_;
    std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor_;
    std::shared_ptr<detail::InverseCache> inverse_;
};

FractionalOperator assemble(const Grid& grid, double s, AssemblyOptions options = {});

/// Solves (-Delta)^s w = f. Throws NumericalError if the relative residual exceeds 1e-10
/// after one step of iterative refinement.
GridFunction solve_linear(const FractionalOperator& op, const GridFunction& f);

/// Debug dump: int32 dimension, float64 s, int64 node count, then the matrix row-major
/// as float64, all in host byte order.
void write_matrix_dump(const FractionalOperator& op, const std::filesystem::path& path);

struct MatrixDump {
    int dimension = 0;
    double s = 0.0;
    Eigen::MatrixXd matrix;
};

MatrixDump read_matrix_dump(const std::filesystem::path& path);

}  // namespace fracle
