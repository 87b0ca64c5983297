#pragma once

#include <cstddef>
#include <vector>

namespace consensus_lab {

/// Gauss-Legendre nodes and weights on [-1, 1]. A rule with n points
/// integrates polynomials of degree <= 2n-1 exactly, which is how the
/// update-function machinery turns integrals of polynomial derivatives
/// into machine-precision values.
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes via Newton iteration from Chebyshev initial guesses; cached per order.
const GaussLegendreRule& gauss_legendre(std::size_t n);

}  // namespace consensus_lab
