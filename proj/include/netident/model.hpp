#pragma once

#include "netident/rational_matrix.hpp"
#include "netident/roots.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace netident {

/// One concrete network: node count L, excitation count K, noise rank p,
/// module matrix G (L x L), excitation filter R (L x K), noise filter
/// H (L x p) and driving-noise covariance Lambda (p x p).
struct NetworkModel {
  int L = 0;
  int K = 0;
  int p = 0;
  RMat G, R, H;
  Eigen::MatrixXd Lambda;

  static NetworkModel make(int L, int K, int p) {
    NetworkModel m;
    m.L = L;
    m.K = K;
    m.p = p;
    m.G = RMat(L, L);
    m.R = RMat(L, K);
    m.H = RMat(L, p);
    m.Lambda = Eigen::MatrixXd::Zero(p, p);
    return m;
  }
};

struct Violation {
  std::string code;    // failed invariant
  std::string detail;  // offending entry / value
};

namespace detail {

inline std::string entry_name(const char* mat, int i, int j) {
  return std::string(mat) + "[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]";
}

// All principal minors of a real square matrix. Exponential in size; networks
// here are small.
inline bool all_principal_minors_nonzero(const Eigen::MatrixXd& a, double tol = 1e-12) {
  const int n = int(a.rows());
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    Eigen::MatrixXd sub(idx.size(), idx.size());
    for (size_t i = 0; i < idx.size(); ++i)
      for (size_t j = 0; j < idx.size(); ++j) sub(long(i), long(j)) = a(idx[i], idx[j]);
    if (std::abs(sub.determinant()) <= tol) return false;
  }
  return true;
}

}  // namespace detail

/// Checks every defining invariant of a network model. Returns one entry per
/// violated condition; an empty list means the model is valid. Dimension
/// mismatches are the only hard errors.
inline std::vector<Violation> validate_model(const NetworkModel& m) {
  if (m.G.rows() != m.L || m.G.cols() != m.L || m.R.rows() != m.L || m.R.cols() != m.K ||
      m.H.rows() != m.L || m.H.cols() != m.p || m.Lambda.rows() != m.p ||
      m.Lambda.cols() != m.p || m.p > m.L || m.L < 1 || m.K < 0 || m.p < 0)
    throw std::invalid_argument("network model dimension mismatch");

  std::vector<Violation> v;

  for (int i = 0; i < m.L; ++i)
    if (!m.G.at(i, i).is_zero())
      v.push_back({"G_diagonal_nonzero", detail::entry_name("G", i, i)});

  for (int i = 0; i < m.L; ++i)
    for (int j = 0; j < m.L; ++j) {
      const Rat& g = m.G.at(i, j);
      if (g.is_zero()) continue;
      if (!g.is_proper()) v.push_back({"G_entry_improper", detail::entry_name("G", i, j)});
      if (!roots_inside_unit_circle(g.den()))
        v.push_back({"G_entry_unstable", detail::entry_name("G", i, j)});
    }

  for (int i = 0; i < m.L; ++i)
    for (int j = 0; j < m.K; ++j)
      if (!m.R.at(i, j).is_proper())
        v.push_back({"R_entry_improper", detail::entry_name("R", i, j)});

  // Noise filter: stable, monic upper block, full normal column rank, and a
  // minimum-phase square part (det H_a roots strictly inside the unit circle).
  for (int i = 0; i < m.L; ++i)
    for (int j = 0; j < m.p; ++j) {
      const Rat& h = m.H.at(i, j);
      if (h.is_zero()) continue;
      if (!h.is_proper()) v.push_back({"H_entry_improper", detail::entry_name("H", i, j)});
      if (!roots_inside_unit_circle(h.den()))
        v.push_back({"H_entry_unstable", detail::entry_name("H", i, j)});
    }
  if (m.p > 0) {
    bool proper_ok = m.H.all_proper();
    if (proper_ok) {
      for (int i = 0; i < m.p; ++i)
        for (int j = 0; j < m.p; ++j) {
          Coeff ft = m.H.at(i, j).feedthrough();
          if (ft != (i == j ? Coeff(1) : Coeff(0))) {
            v.push_back({"H_feedthrough_not_monic", detail::entry_name("H", i, j)});
          }
        }
    }
    if (normal_rank(m.H) < m.p) v.push_back({"H_rank_deficient", "normal rank below p"});
    std::vector<int> top(size_t(m.p));
    for (int i = 0; i < m.p; ++i) top[size_t(i)] = i;
    try {
      Rat det_ha = m.H.select(top, top).det();
      if (det_ha.is_zero() || !roots_inside_unit_circle(det_ha.num()))
        v.push_back({"H_not_minimum_phase", "det of upper square block"});
    } catch (const DegreeOverflow&) {
      v.push_back({"H_not_minimum_phase", "degree overflow while checking"});
    }
  }

  if (m.p > 0) {
    if (!m.Lambda.isApprox(m.Lambda.transpose(), 1e-12))
      v.push_back({"Lambda_not_symmetric", ""});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.Lambda);
    if (es.eigenvalues().minCoeff() <= 0.0)
      v.push_back({"Lambda_not_positive_definite", ""});
  }

  // Well-posedness: (I - G) invertible with proper, stable inverse, and all
  // principal minors of the feedthrough I - G(inf) nonzero.
  RMat ig = RMat::identity(m.L) - m.G;
  Rat det;
  bool have_det = true;
  try {
    det = ig.det();
  } catch (const DegreeOverflow&) {
    have_det = false;
    v.push_back({"wellposedness_unverified", "degree overflow in det(I - G)"});
  }
  if (have_det) {
    if (det.is_zero()) {
      v.push_back({"singular_I_minus_G", "det(I - G) = 0"});
    } else {
      if (!roots_inside_unit_circle(det.num()))
        v.push_back({"inverse_unstable", "zeros of det(I - G) outside stability region"});
      try {
        RMat inv = ig.invert();
        if (!inv.all_proper()) v.push_back({"inverse_improper", "(I - G)^{-1}"});
      } catch (const DegreeOverflow&) {
        v.push_back({"wellposedness_unverified", "degree overflow in (I - G)^{-1}"});
      }
      if (m.G.all_proper()) {
        Eigen::MatrixXd ig_inf = Eigen::MatrixXd::Identity(m.L, m.L) - m.G.feedthrough();
        if (!detail::all_principal_minors_nonzero(ig_inf))
          v.push_back({"principal_minor_zero", "I - G(inf)"});
      }
    }
  }
  return v;
}

inline bool is_valid(const NetworkModel& m) { return validate_model(m).empty(); }

/// Network transfer T = (I - G)^{-1} [R H]; columns 1..K map the external
/// excitations, columns K+1..K+p map the driving noise.
inline RMat network_transfer(const NetworkModel& m) {
  RMat ig = RMat::identity(m.L) - m.G;
  return ig.invert() * RMat::hstack(m.R, m.H);
}

struct FeedthroughMatrices {
  Eigen::MatrixXd Ginf;     // L x L
  Eigen::MatrixXd Rinf;     // L x K
  Eigen::MatrixXd Hinf;     // L x p
  Eigen::MatrixXd Twr_inf;  // L x K
};

/// Direct feedthrough terms of G, R, H and of the excitation transfer,
/// computed as (I - Ginf)^{-1} Rinf and cross-checked against the entrywise
/// feedthrough of (I - G)^{-1} R.
inline FeedthroughMatrices feedthrough_matrices(const NetworkModel& m) {
  FeedthroughMatrices f;
  f.Ginf = m.G.feedthrough();
  f.Rinf = m.R.feedthrough();
  f.Hinf = m.H.feedthrough();
  Eigen::MatrixXd ig = Eigen::MatrixXd::Identity(m.L, m.L) - f.Ginf;
  f.Twr_inf = ig.partialPivLu().solve(f.Rinf);

  RMat ig_rat = RMat::identity(m.L) - m.G;
  RMat twr = ig_rat.invert() * m.R;
  if (twr.all_proper() && m.K > 0) {
    Eigen::MatrixXd direct = twr.feedthrough();
    double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
    if ((direct - f.Twr_inf).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw std::logic_error("feedthrough cross-check failed for T_wr");
  }
  return f;
}

}  // namespace netident
