#pragma once

#include "netident/poly.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <vector>

namespace netident {

/// Roots of a polynomial with exact coefficients, computed numerically as
/// eigenvalues of the companion matrix of its monic normalization.
inline std::vector<std::complex<double>> poly_roots(const Poly& p) {
  std::vector<std::complex<double>> roots;
  int n = p.degree();
  if (n <= 0) return roots;
  Poly m = p.monic();
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    companion(i, n - 1) = -m.coeff(i).convert_to<double>();
    if (i + 1 < n) companion(i + 1, i) = 1.0;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
  roots.reserve(size_t(n));
  for (int i = 0; i < n; ++i) roots.push_back(es.eigenvalues()(i));
  return roots;
}

inline double max_root_radius(const Poly& p) {
  double r = 0.0;
  for (const auto& root : poly_roots(p)) r = std::max(r, std::abs(root));
  return r;
}

// Stability boundary: all roots strictly inside the unit circle, with a
// fixed numerical margin so boundary cases are decided reproducibly.
inline constexpr double kStabilityMargin = 1e-9;

inline bool roots_inside_unit_circle(const Poly& p) {
  if (p.degree() <= 0) return true;
  return max_root_radius(p) < 1.0 - kStabilityMargin;
}

}  // namespace netident
