#include "fracle/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace fracle {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoefficients{
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7,
};

// Lanczos series for Gamma(x + 1), x >= -1/2.
double lanczos_sum(double x) {
    double sum = kLanczosCoefficients[0];
    for (std::size_t k = 1; k < kLanczosCoefficients.size(); ++k) {
        sum += kLanczosCoefficients[k] / (x + static_cast<double>(k));
    }
    return sum;
}

}  // namespace

double gamma_function(double x) {
    if (x < 0.5) {
        return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_function(1.0 - x));
    }
    const double z = x - 1.0;
    const double t = z + kLanczosG + 0.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * lanczos_sum(z);
}

double log_gamma(double x) {
    if (x < 0.5) {
        return std::log(std::numbers::pi / std::abs(std::sin(std::numbers::pi * x))) - log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    const double t = z + kLanczosG + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(lanczos_sum(z));
}

}  // namespace fracle
