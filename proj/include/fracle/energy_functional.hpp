#pragma once

#include "fracle/domain_grid.hpp"
#include "fracle/fractional_operator.hpp"

#include <optional>
#include <string_view>

namespace fracle {

enum class Regime { sublinear, resonant, superlinear_subcritical, critical, supercritical };

std::string_view to_string(Regime regime);

/// Equality tolerance used when classifying floating-point exponents: pq = 1 and the
/// critical hyperbole are recognized up to this absolute slack.
inline constexpr double kExponentTolerance = 1e-12;

/// Exponents of the coupled nonlinearities v^p and u^q.
struct ExponentPair {
    double p = 1.0;
    double q = 1.0;

    double product() const { return p * q; }
    /// 1/(p+1) + 1/(q+1) - (n-2s)/n; empty when n <= 2s.
    std::optional<double> hyperbole_gap(int n, double s) const;
    Regime regime(int n, double s) const;
};

struct EnergyReport {
    double value = 0.0;     ///< kinetic - potential
    double kinetic = 0.0;   ///< p/(p+1) * integral of |A u|^{(p+1)/p}
    double potential = 0.0; ///< 1/(q+1) * integral of (u+)^{q+1}
    double norm = 0.0;      ///< (integral of |A u|^{(p+1)/p})^{p/(p+1)}
};

/// sigma_eps(t) = (t^2 + eps^2)^{(1-p)/(2p)} t; at eps = 0 this is |t|^{1/p - 1} t.
double smoothed_flux(double t, double p, double eps);
double smoothed_flux_derivative(double t, double p, double eps);
/// Antiderivative of smoothed_flux vanishing at t = 0.
double smoothed_kinetic_density(double t, double p, double eps);

/// Discrete energy. With smoothing > 0 the kinetic density is the antiderivative of
/// the smoothed flux, so energy() and energy_gradient() stay exactly consistent.
EnergyReport energy(const FractionalOperator& op, const GridFunction& u, const ExponentPair& exps,
                    double smoothing = 0.0);

/// Same, from a precomputed A u.
EnergyReport energy_from_image(const GridFunction& u, const Eigen::VectorXd& image, const ExponentPair& exps,
                               double smoothing = 0.0);

/// Quadrature-weighted gradient g = A W sigma_eps(A u) - W (u+)^q, so that the
/// directional derivative of the energy along phi is g . phi (plain dot product).
GridFunction energy_gradient(const FractionalOperator& op, const GridFunction& u, const ExponentPair& exps,
                             double smoothing = 0.0);

/// A certified positive lower bound for the energy on the sphere ||u||_E = radius when
/// pq > 1. Uses ||u||_inf <= K ||A u||_{(p+1)/p} with K computed from the discrete Green
/// matrix by Hoelder's inequality row by row.
struct RidgeBound {
    double radius = 0.0;
    double lower_bound = 0.0;
    double embedding_constant = 0.0;
};

RidgeBound ridge_lower_bound(const FractionalOperator& op, const ExponentPair& exps);

}  // namespace fracle
