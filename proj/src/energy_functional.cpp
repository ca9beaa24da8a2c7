#include "fracle/energy_functional.hpp"

#include "fracle/errors.hpp"

#include <cmath>

namespace fracle {

std::string_view to_string(Regime regime) {
    switch (regime) {
    case Regime::sublinear: return "sublinear";
    case Regime::resonant: return "resonant";
    case Regime::superlinear_subcritical: return "superlinear_subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
    }
    return "unknown";
}

std::optional<double> ExponentPair::hyperbole_gap(int n, double s) const {
    if (!(n > 2.0 * s)) {
        return std::nullopt;
    }
    return 1.0 / (p + 1.0) + 1.0 / (q + 1.0) - (n - 2.0 * s) / n;
}

Regime ExponentPair::regime(int n, double s) const {
    const double pq = product();
    if (std::abs(pq - 1.0) <= kExponentTolerance) {
        return Regime::resonant;
    }
    if (pq < 1.0) {
        return Regime::sublinear;
    }
    const auto gap = hyperbole_gap(n, s);
    if (!gap || *gap > kExponentTolerance) {
        return Regime::superlinear_subcritical;
    }
    return *gap < -kExponentTolerance ? Regime::supercritical : Regime::critical;
}

double smoothed_flux(double t, double p, double eps) {
    if (eps == 0.0) {
        return t == 0.0 ? 0.0 : std::pow(std::abs(t), 1.0 / p - 1.0) * t;
    }
    return std::pow(t * t + eps * eps, (1.0 - p) / (2.0 * p)) * t;
}

double smoothed_flux_derivative(double t, double p, double eps) {
    const double a = (1.0 - p) / (2.0 * p);
    const double r2 = t * t + eps * eps;
    if (r2 == 0.0) {
        return p < 1.0 ? 0.0 : (p == 1.0 ? 1.0 : HUGE_VAL);
    }
    return std::pow(r2, a - 1.0) * ((2.0 * a + 1.0) * t * t + eps * eps);
}

double smoothed_kinetic_density(double t, double p, double eps) {
    const double r = (p + 1.0) / p;
    if (eps == 0.0) {
        return p / (p + 1.0) * std::pow(std::abs(t), r);
    }
    return p / (p + 1.0) * (std::pow(t * t + eps * eps, 0.5 * r) - std::pow(eps, r));
}

EnergyReport energy_from_image(const GridFunction& u, const Eigen::VectorXd& image, const ExponentPair& exps,
                               double smoothing) {
    const double r = (exps.p + 1.0) / exps.p;
    double kinetic = 0.0;
    double norm_power = 0.0;
    double potential = 0.0;
    for (Eigen::Index k = 0; k < image.size(); ++k) {
        kinetic += smoothed_kinetic_density(image[k], exps.p, smoothing);
        norm_power += std::pow(std::abs(image[k]), r);
        const double uk = u.values()[k];
        if (uk > 0.0) {
            potential += std::pow(uk, exps.q + 1.0);
        }
    }
    const double w = u.weight();
    EnergyReport report;
    report.kinetic = w * kinetic;
    report.potential = w * potential / (exps.q + 1.0);
    report.value = report.kinetic - report.potential;
    report.norm = std::pow(w * norm_power, 1.0 / r);
    return report;
}

EnergyReport energy(const FractionalOperator& op, const GridFunction& u, const ExponentPair& exps, double smoothing) {
    return energy_from_image(u, op.apply(u.values()), exps, smoothing);
}

GridFunction energy_gradient(const FractionalOperator& op, const GridFunction& u, const ExponentPair& exps,
                             double smoothing) {
    const Eigen::VectorXd image = op.apply(u.values());
    Eigen::VectorXd flux(image.size());
    for (Eigen::Index k = 0; k < image.size(); ++k) {
        flux[k] = smoothed_flux(image[k], exps.p, smoothing);
    }
    const double w = u.weight();
    Eigen::VectorXd g = w * op.apply(flux);
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double uk = u.values()[k];
        if (uk > 0.0) {
            g[k] -= w * std::pow(uk, exps.q);
        }
    }
    return GridFunction(op.grid(), std::move(g));
}

RidgeBound ridge_lower_bound(const FractionalOperator& op, const ExponentPair& exps) {
    if (!(exps.product() > 1.0)) {
        throw ConfigError("the ridge bound needs pq > 1");
    }
    const Eigen::MatrixXd& green = op.inverse();
    const double w = op.grid().weight();
    const double conjugate = exps.p + 1.0;  // Hoelder conjugate of (p+1)/p
    double k_max = 0.0;
    for (Eigen::Index i = 0; i < green.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < green.cols(); ++j) {
            sum += std::pow(std::abs(green(i, j)) / w, conjugate);
        }
        k_max = std::max(k_max, std::pow(w * sum, 1.0 / conjugate));
    }
    const double measure = w * static_cast<double>(green.rows());
    const double r = (exps.p + 1.0) / exps.p;
    const double b = measure * std::pow(k_max, exps.q + 1.0) / (exps.q + 1.0);
    const double radius = std::pow(1.0 / (b * (exps.q + 1.0)), 1.0 / (exps.q + 1.0 - r));
    RidgeBound bound;
    bound.radius = radius;
    bound.embedding_constant = k_max;
    bound.lower_bound = exps.p / (exps.p + 1.0) * std::pow(radius, r) - b * std::pow(radius, exps.q + 1.0);
    return bound;
}

}  // namespace fracle
