#include "fracle/domain_grid.hpp"

#include "fracle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fracle {

Domain Domain::interval(double lower, double upper) {
    if (!(upper > lower)) {
        throw ConfigError("interval requires lower < upper");
    }
    return Domain(DomainKind::interval, {0.5 * (lower + upper), 0.0}, {0.5 * (upper - lower), 0.0});
}

Domain Domain::rectangle(double width, double height, Point center) {
    if (!(width > 0.0) || !(height > 0.0)) {
        throw ConfigError("rectangle side lengths must be positive");
    }
    return Domain(DomainKind::rectangle, center, {0.5 * width, 0.5 * height});
}

Domain Domain::disk(double radius, Point center) {
    if (!(radius > 0.0)) {
        throw ConfigError("disk radius must be positive");
    }
    return Domain(DomainKind::disk, center, {radius, radius});
}

double Domain::measure() const {
    switch (kind_) {
    case DomainKind::interval: return 2.0 * half_[0];
    case DomainKind::rectangle: return 4.0 * half_[0] * half_[1];
    case DomainKind::disk: return std::numbers::pi * half_[0] * half_[0];
    }
    return 0.0;
}

double Domain::perimeter() const {
    switch (kind_) {
    case DomainKind::interval: return 2.0;  // counting measure of the two endpoints
    case DomainKind::rectangle: return 4.0 * (half_[0] + half_[1]);
    case DomainKind::disk: return 2.0 * std::numbers::pi * half_[0];
    }
    return 0.0;
}

double Domain::inradius() const {
    switch (kind_) {
    case DomainKind::interval: return half_[0];
    case DomainKind::rectangle: return std::min(half_[0], half_[1]);
    case DomainKind::disk: return half_[0];
    }
    return 0.0;
}

double Domain::boundary_distance(const Point& x) const {
    const double dx = x[0] - center_[0];
    const double dy = x[1] - center_[1];
    switch (kind_) {
    case DomainKind::interval: return half_[0] - std::abs(dx);
    case DomainKind::rectangle: {
        const double ex = half_[0] - std::abs(dx);
        const double ey = half_[1] - std::abs(dy);
        if (ex >= 0.0 && ey >= 0.0) {
            return std::min(ex, ey);
        }
        // Outside: negative Euclidean distance to the rectangle.
        const double ox = std::max(-ex, 0.0);
        const double oy = std::max(-ey, 0.0);
        return -std::hypot(ox, oy);
    }
    case DomainKind::disk: return half_[0] - std::hypot(dx, dy);
    }
    return 0.0;
}

bool Domain::contains(const Point& x) const { return boundary_distance(x) > 0.0; }

bool Domain::is_star_shaped_wrt_origin() const {
    // All three shapes are convex, so x . nu > 0 on the boundary iff 0 is interior.
    Point origin{0.0, 0.0};
    return contains(origin);
}

Point Domain::box_lower() const {
    return {center_[0] - half_[0], kind_ == DomainKind::interval ? 0.0 : center_[1] - half_[1]};
}

Point Domain::box_upper() const {
    return {center_[0] + half_[0], kind_ == DomainKind::interval ? 0.0 : center_[1] + half_[1]};
}

Grid::Grid(Domain domain, int nodes_x, int nodes_y, double spacing, Point origin)
    : domain_(domain), nx_(nodes_x), ny_(nodes_y), h_(spacing), origin_(origin) {
    weight_ = domain_.dimension() == 1 ? h_ : h_ * h_;
    index_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), -1);
    // Nodes within a rounding distance of the boundary count as exterior.
    const double snap = 1e-10 * h_;
    for (int j = 0; j < ny_; ++j) {
        for (int i = 0; i < nx_; ++i) {
            const Point x = node(i, j);
            const double d = domain_.boundary_distance(x);
            if (d > snap) {
                index_[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i)] =
                    static_cast<int>(points_.size());
                points_.push_back(x);
                distances_.push_back(d);
                lattice_.push_back({i, j});
            }
        }
    }
}

Point Grid::node(int i, int j) const {
    return {origin_[0] + i * h_, dimension() == 1 ? 0.0 : origin_[1] + j * h_};
}

int Grid::interior_index(int i, int j) const {
    if (i < 0 || j < 0 || i >= nx_ || j >= ny_) {
        return -1;
    }
    return index_[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i)];
}

double Grid::interpolate(std::span<const double> values, const Point& x) const {
    auto value_at = [&](int i, int j) {
        const int k = interior_index(i, j);
        return k < 0 ? 0.0 : values[static_cast<std::size_t>(k)];
    };
    const double fx = (x[0] - origin_[0]) / h_;
    const int i0 = static_cast<int>(std::floor(fx));
    const double tx = fx - i0;
    if (dimension() == 1) {
        return (1.0 - tx) * value_at(i0, 0) + tx * value_at(i0 + 1, 0);
    }
    const double fy = (x[1] - origin_[1]) / h_;
    const int j0 = static_cast<int>(std::floor(fy));
    const double ty = fy - j0;
    return (1.0 - tx) * (1.0 - ty) * value_at(i0, j0) + tx * (1.0 - ty) * value_at(i0 + 1, j0) +
           (1.0 - tx) * ty * value_at(i0, j0 + 1) + tx * ty * value_at(i0 + 1, j0 + 1);
}

Grid build_grid(const Domain& domain, int resolution) {
    if (resolution < kMinResolution) {
        throw ConfigError("resolution " + std::to_string(resolution) + " is below the minimum of " +
                          std::to_string(kMinResolution));
    }
    const Point lo = domain.box_lower();
    const Point hi = domain.box_upper();
    if (domain.dimension() == 1) {
        const double h = (hi[0] - lo[0]) / (resolution - 1);
        return Grid(domain, resolution, 1, h, {lo[0], 0.0});
    }
    const double ex = hi[0] - lo[0];
    const double ey = hi[1] - lo[1];
    const double h = std::max(ex, ey) / (resolution - 1);
    // The shorter axis gets enough nodes for the box to cover the domain, centered on it.
    auto count = [&](double extent) { return static_cast<int>(std::ceil(extent / h - 1e-9)) + 1; };
    const int nx = count(ex);
    const int ny = count(ey);
    const Point c = domain.center();
    const Point origin{c[0] - 0.5 * (nx - 1) * h, c[1] - 0.5 * (ny - 1) * h};
    return Grid(domain, nx, ny, h, origin);
}

GridFunction::GridFunction(const Grid& grid)
    : values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()))), weight_(grid.weight()) {}

GridFunction::GridFunction(const Grid& grid, Eigen::VectorXd values) : values_(std::move(values)), weight_(grid.weight()) {
    if (static_cast<std::size_t>(values_.size()) != grid.size()) {
        throw ConfigError("grid function size does not match the grid");
    }
}

namespace {
void check_same_shape(const GridFunction& a, const GridFunction& b) {
    if (a.size() != b.size()) {
        throw ConfigError("grid functions live on different grids");
    }
}
}  // namespace

GridFunction& GridFunction::operator+=(const GridFunction& other) {
    check_same_shape(*this, other);
    values_ += other.values_;
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
    check_same_shape(*this, other);
    values_ -= other.values_;
    return *this;
}

GridFunction& GridFunction::operator*=(double factor) {
    values_ *= factor;
    return *this;
}

GridFunction GridFunction::positive_part() const {
    GridFunction out = *this;
    out.values_ = values_.cwiseMax(0.0);
    return out;
}

GridFunction GridFunction::positive_power(double exponent) const {
    GridFunction out = *this;
    for (Eigen::Index k = 0; k < values_.size(); ++k) {
        const double x = values_[k];
        out.values_[k] = x > 0.0 ? std::pow(x, exponent) : 0.0;
    }
    return out;
}

double GridFunction::sup_norm() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }

double GridFunction::min_value() const { return values_.size() == 0 ? 0.0 : values_.minCoeff(); }

double GridFunction::lp_norm(double r) const {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < values_.size(); ++k) {
        sum += std::pow(std::abs(values_[k]), r);
    }
    return std::pow(weight_ * sum, 1.0 / r);
}

double GridFunction::integral() const { return weight_ * values_.sum(); }

double GridFunction::dot(const GridFunction& other) const {
    check_same_shape(*this, other);
    return weight_ * values_.dot(other.values_);
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double factor, GridFunction a) { return a *= factor; }

GridFunction transfer(const Grid& from, const GridFunction& u, const Grid& to) {
    return sample(to, [&](const Point& x) { return from.interpolate(u.span(), x); });
}

std::vector<BoundaryPoint> boundary_trace_weights(const Grid& grid, int samples) {
    const Domain& dom = grid.domain();
    const Point c = dom.center();
    const Point half = dom.half_extent();
    std::vector<BoundaryPoint> out;
    switch (dom.kind()) {
    case DomainKind::interval:
        out.push_back({{c[0] - half[0], 0.0}, {-1.0, 0.0}, 1.0});
        out.push_back({{c[0] + half[0], 0.0}, {1.0, 0.0}, 1.0});
        break;
    case DomainKind::disk: {
        const double r = dom.radius();
        const double dtheta = 2.0 * std::numbers::pi / samples;
        for (int k = 0; k < samples; ++k) {
            const double theta = k * dtheta;
            const Point nu{std::cos(theta), std::sin(theta)};
            out.push_back({{c[0] + r * nu[0], c[1] + r * nu[1]}, nu, r * dtheta});
        }
        break;
    }
    case DomainKind::rectangle: {
        const double per = dom.perimeter();
        // Sides: bottom, right, top, left, sampled counter-clockwise at midpoints.
        struct Side {
            Point start;
            Point dir;
            double length;
            Point nu;
        };
        const std::array<Side, 4> sides{{
            {{c[0] - half[0], c[1] - half[1]}, {1.0, 0.0}, 2.0 * half[0], {0.0, -1.0}},
            {{c[0] + half[0], c[1] - half[1]}, {0.0, 1.0}, 2.0 * half[1], {1.0, 0.0}},
            {{c[0] + half[0], c[1] + half[1]}, {-1.0, 0.0}, 2.0 * half[0], {0.0, 1.0}},
            {{c[0] - half[0], c[1] + half[1]}, {0.0, -1.0}, 2.0 * half[1], {-1.0, 0.0}},
        }};
        for (const Side& side : sides) {
            const int m = std::max(1, static_cast<int>(std::lround(samples * side.length / per)));
            const double ds = side.length / m;
            for (int k = 0; k < m; ++k) {
                const double t = (k + 0.5) * ds;
                out.push_back({{side.start[0] + t * side.dir[0], side.start[1] + t * side.dir[1]}, side.nu, ds});
            }
        }
        break;
    }
    }
    return out;
}

}  // namespace fracle
