#pragma once

#include <vector>

namespace realize {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussRule gauss_legendre(int points);

/// Shifted Legendre polynomials P_k(s), s ∈ [-1, 1], and their derivatives
/// dP_k/ds for k = 0..count-1.
void legendre(int count, double s, std::vector<double>& value, std::vector<double>& slope);

}  // namespace realize
