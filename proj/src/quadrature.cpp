#include "realize/quadrature.hpp"

#include "realize/errors.hpp"

#include <cmath>
#include <numbers>

namespace realize {

GaussRule gauss_legendre(int points) {
    if (points < 1) {
        throw DimensionError("Gauss-Legendre rule needs at least one point");
    }
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(points));
    rule.weights.resize(static_cast<std::size_t>(points));
    const int half = (points + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Newton iteration from the Chebyshev-like initial guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= points; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            const double pn = points == 1 ? x : p1;
            const double pm = points == 1 ? 1.0 : p0;
            dp = points * (x * pn - pm) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.nodes[static_cast<std::size_t>(points - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(points - 1 - i)] = w;
    }
    return rule;
}

void legendre(int count, double s, std::vector<double>& value, std::vector<double>& slope) {
    value.assign(static_cast<std::size_t>(count), 0.0);
    slope.assign(static_cast<std::size_t>(count), 0.0);
    if (count == 0) {
        return;
    }
    value[0] = 1.0;
    if (count > 1) {
        value[1] = s;
        slope[1] = 1.0;
    }
    for (int k = 1; k + 1 < count; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        value[ku + 1] = ((2.0 * k + 1.0) * s * value[ku] - k * value[ku - 1]) / (k + 1.0);
        slope[ku + 1] = slope[ku - 1] + (2.0 * k + 1.0) * value[ku];
    }
}

}  // namespace realize
