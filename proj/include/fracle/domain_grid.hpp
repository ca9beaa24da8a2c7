#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace fracle {

using Point = std::array<double, 2>;

enum class DomainKind { interval, rectangle, disk };

/// Bounded open set in R^n, n = 1 or 2. Geometry is exact; there is no meshing error
/// in distances, normals or boundary measures.
class Domain {
public:
    /// Open interval (lower, upper).
    static Domain interval(double lower, double upper);
    /// Axis-aligned open rectangle with the given side lengths.
    static Domain rectangle(double width, double height, Point center = {0.0, 0.0});
    /// Open disk.
    static Domain disk(double radius, Point center = {0.0, 0.0});

    DomainKind kind() const { return kind_; }
    int dimension() const { return kind_ == DomainKind::interval ? 1 : 2; }
    Point center() const { return center_; }
    /// Half side lengths for interval/rectangle, radius (twice) for the disk.
    Point half_extent() const { return half_; }
    double radius() const { return half_[0]; }

    double measure() const;
    double perimeter() const;
    /// Largest d such that a ball of radius d fits in the domain.
    double inradius() const;

    bool contains(const Point& x) const;
    /// Euclidean distance to the boundary; negative outside.
    double boundary_distance(const Point& x) const;
    /// True iff x . nu > 0 on the whole boundary, i.e. the origin lies in the interior.
    bool is_star_shaped_wrt_origin() const;

    Point box_lower() const;
    Point box_upper() const;

private:
    Domain(DomainKind kind, Point center, Point half) : kind_(kind), center_(center), half_(half) {}

    DomainKind kind_;
    Point center_;
    Point half_;
};

/// Uniform vertex-centered tensor grid over the bounding box of a domain.
///
/// All nodes share a single spacing h on every axis. A node is interior when it lies
/// strictly inside the domain; every other node is exterior and carries the value 0.
class Grid {
public:
    Grid(Domain domain, int nodes_x, int nodes_y, double spacing, Point origin);

    const Domain& domain() const { return domain_; }
    int dimension() const { return domain_.dimension(); }
    double spacing() const { return h_; }
    int nodes_x() const { return nx_; }
    int nodes_y() const { return ny_; }
    Point origin() const { return origin_; }

    /// Number of interior nodes (unknowns).
    std::size_t size() const { return points_.size(); }
    /// Quadrature weight h^n, identical for every interior node.
    double weight() const { return weight_; }

    const std::vector<Point>& points() const { return points_; }
    const std::vector<double>& distances() const { return distances_; }
    /// Lattice coordinates (i, j) of interior node k; j = 0 in 1D.
    const std::vector<std::array<int, 2>>& lattice() const { return lattice_; }

    /// Interior index of lattice node (i, j), or -1 if exterior or outside the box.
    int interior_index(int i, int j = 0) const;
    Point node(int i, int j = 0) const;

    /// Piecewise (bi)linear interpolation of interior values, with 0 at exterior nodes
    /// and outside the box.
    double interpolate(std::span<const double> values, const Point& x) const;

private:
    Domain domain_;
    int nx_;
    int ny_;
    double h_;
    Point origin_;
    double weight_;
    std::vector<Point> points_;
    std::vector<double> distances_;
    std::vector<std::array<int, 2>> lattice_;
    std::vector<int> index_;
};

inline constexpr int kMinResolution = 5;

/// Builds the grid with `resolution` nodes along the longest box axis.
/// Throws ConfigError if resolution < kMinResolution.
Grid build_grid(const Domain& domain, int resolution);

/// Real values on the interior nodes of a grid; zero on the exterior by convention.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(const Grid& grid);
    GridFunction(const Grid& grid, Eigen::VectorXd values);

    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
    double weight() const { return weight_; }
    const Eigen::VectorXd& values() const { return values_; }
    Eigen::VectorXd& values() { return values_; }
    double operator[](std::size_t k) const { return values_[static_cast<Eigen::Index>(k)]; }
    double& operator[](std::size_t k) { return values_[static_cast<Eigen::Index>(k)]; }
    std::span<const double> span() const { return {values_.data(), size()}; }

    GridFunction& operator+=(const GridFunction& other);
    GridFunction& operator-=(const GridFunction& other);
    GridFunction& operator*=(double factor);

    GridFunction positive_part() const;
    /// Pointwise power of the positive part.
    GridFunction positive_power(double exponent) const;

    double sup_norm() const;
    double min_value() const;
    /// Quadrature-weighted L^r norm.
    double lp_norm(double r) const;
    /// Quadrature-weighted integral.
    double integral() const;
    /// Quadrature-weighted inner product.
    double dot(const GridFunction& other) const;

private:
    Eigen::VectorXd values_;
    double weight_ = 0.0;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double factor, GridFunction a);

/// Samples a function of position on the interior nodes.
template <class F>
GridFunction sample(const Grid& grid, F&& f) {
    Eigen::VectorXd values(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        values[static_cast<Eigen::Index>(k)] = f(grid.points()[k]);
    }
    return GridFunction(grid, std::move(values));
}

/// Transfers u from `from` onto the nodes of `to` by (bi)linear interpolation.
/// On nested grids (to.spacing() = from.spacing()/2) this is prolongation; in the
/// opposite direction it reduces to injection.
GridFunction transfer(const Grid& from, const GridFunction& u, const Grid& to);

struct BoundaryPoint {
    Point x;
    Point normal;  ///< Unit outward normal.
    double weight; ///< Surface measure element.
};

/// Quadrature of the boundary from the exact parametrization of the domain.
/// Intervals give the two endpoints with weight 1. Disks use `samples` equally spaced
/// angles. Rectangles use midpoint rules on each side, so corners are never sampled.
std::vector<BoundaryPoint> boundary_trace_weights(const Grid& grid, int samples = 256);

}  // namespace fracle
