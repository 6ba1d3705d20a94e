#pragma once

#include "netident/identifiability.hpp"
#include "netident/model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace netident {

/// Feedthrough of the node-disturbance spectrum together with its rank.
struct NoiseFeedthrough {
  Eigen::MatrixXd Phi;  // L x L, symmetric PSD
  int p = 0;            // numerical rank
};

inline int psd_rank(const Eigen::MatrixXd& a, double tol = kRankTol) {
  if (a.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  double emax = es.eigenvalues().cwiseAbs().maxCoeff();
  if (emax <= 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > tol * emax) ++rank;
  return rank;
}

/// Embeds the driving covariance into node coordinates:
/// Lambda_breve = [I; Gamma] Lambda [I; Gamma]^T with Gamma the feedthrough of
/// the lower noise-filter block.
inline Eigen::MatrixXd lambda_breve(const NetworkModel& m) {
  Eigen::MatrixXd emb = Eigen::MatrixXd::Zero(m.L, m.p);
  if (m.p > 0) {
    Eigen::MatrixXd hinf = m.H.feedthrough();
    emb.topRows(m.p) = Eigen::MatrixXd::Identity(m.p, m.p);
    if (m.L > m.p) emb.bottomRows(m.L - m.p) = hinf.bottomRows(m.L - m.p);
  }
  return emb * m.Lambda * emb.transpose();
}

/// Feedthrough of the spectrum of the node disturbances:
/// (I - Ginf)^{-1} Lambda_breve (I - Ginf)^{-T}.
inline NoiseFeedthrough noise_feedthrough_spectrum(const NetworkModel& m) {
  Eigen::MatrixXd ig = Eigen::MatrixXd::Identity(m.L, m.L) - m.G.feedthrough();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ig);
  if (!lu.isInvertible())
    throw std::domain_error("I - G(inf) is singular; the network is not well-posed");
  Eigen::MatrixXd inv = lu.inverse();
  NoiseFeedthrough nf;
  nf.Phi = inv * lambda_breve(m) * inv.transpose();
  nf.Phi = 0.5 * (nf.Phi + nf.Phi.transpose().eval());  // symmetrize roundoff
  nf.p = psd_rank(nf.Phi);
  return nf;
}

// ---------------------------------------------------------------------------
// LDL^T recovery of the covariance from the permuted spectrum feedthrough.
// ---------------------------------------------------------------------------

struct LdlResult {
  Eigen::MatrixXd L;  // unit upper triangular factor
  Eigen::VectorXd D;  // diagonal
  bool ok = false;
  bool breakdown = false;      // zero pivot with a nonzero residual column
  bool pattern_ok = true;      // nonzero pivots sit at the designated noisy nodes
  double residual = 0.0;       // relative reconstruction error
  Eigen::MatrixXd Lambda_tilde;  // recovered node-coordinate covariance
  std::string note;
};

/// Factors the reordered spectrum feedthrough as L D L^T with L unit upper
/// triangular, eliminating from the bottom-right corner. For a loop-free
/// model class with diagonal noise feedthrough this recovers the covariance
/// uniquely: D equals the reordered embedded covariance. A zero pivot whose
/// column has not vanished, a reconstruction residual, or nonzero pivots at
/// nodes beyond the noise rank all flag a violated precondition.
inline LdlResult ldl_recover_lambda(const NoiseFeedthrough& phi, const std::vector<int>& order) {
  const int n = int(phi.Phi.rows());
  if (int(order.size()) != n) throw std::invalid_argument("permutation has wrong length");
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = phi.Phi(order[size_t(i)], order[size_t(j)]);
  const Eigen::MatrixXd permuted = a;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;

  LdlResult res;
  res.L = Eigen::MatrixXd::Identity(n, n);
  res.D = Eigen::VectorXd::Zero(n);
  for (int k = n - 1; k >= 0; --k) {
    double d = a(k, k);
    if (std::abs(d) <= tol) {
      if (k > 0 && a.col(k).head(k).cwiseAbs().maxCoeff() > tol) {
        res.breakdown = true;
        res.note = "zero pivot with nonzero residual column at position " + std::to_string(k + 1);
      }
      continue;
    }
    res.D(k) = d;
    if (k > 0) {
      Eigen::VectorXd l = a.col(k).head(k) / d;
      res.L.col(k).head(k) = l;
      a.topLeftCorner(k, k) -= l * d * l.transpose();
    }
  }
  res.residual =
      (permuted - res.L * res.D.asDiagonal() * res.L.transpose()).cwiseAbs().maxCoeff() / scale;

  res.Lambda_tilde = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) res.Lambda_tilde(order[size_t(k)], order[size_t(k)]) = res.D(k);
  for (int k = 0; k < n; ++k) {
    bool expected_nonzero = order[size_t(k)] < phi.p;
    bool is_nonzero = std::abs(res.D(k)) > tol;
    if (expected_nonzero != is_nonzero) {
      res.pattern_ok = false;
      if (res.note.empty())
        res.note = "recovered pivot pattern contradicts the noise-rank ordering";
    }
  }
  res.ok = !res.breakdown && res.pattern_ok && res.residual <= 1e-8;
  return res;
}

// ---------------------------------------------------------------------------
// Square embedding of a rectangular noise filter.
// ---------------------------------------------------------------------------

struct SquareEmbedding {
  RMat F_breve;                 // L x L, monic
  Eigen::MatrixXd Delta_breve;  // L x L PSD of rank p
  Eigen::MatrixXd Gamma;        // (L - p) x p feedthrough of the lower block
};

/// Lifts an L x p spectral factor with monic upper block into the unique
/// square monic form: the lower block loses its feedthrough, which moves into
/// the embedded covariance. The spectrum F Delta F* is preserved; this is
/// verified at sampled frequencies on the unit circle.
inline SquareEmbedding square_embedding(const RMat& F, const Eigen::MatrixXd& Delta) {
  const int L = F.rows();
  const int p = F.cols();
  if (p > L) throw std::invalid_argument("factor has more columns than rows");
  if (Delta.rows() != p || Delta.cols() != p)
    throw std::invalid_argument("covariance dimensions do not match the factor");
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      if (!F.at(i, j).is_proper())
        throw std::invalid_argument("upper block of the factor must be proper");
      if (F.at(i, j).feedthrough() != (i == j ? Coeff(1) : Coeff(0)))
        throw std::invalid_argument("upper block of the factor must be monic");
    }

  SquareEmbedding emb;
  emb.Gamma = Eigen::MatrixXd::Zero(L - p, p);
  for (int i = p; i < L; ++i)
    for (int j = 0; j < p; ++j)
      emb.Gamma(i - p, j) = F.at(i, j).feedthrough().convert_to<double>();

  emb.F_breve = RMat(L, L);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < p; ++j) {
      if (i < p) {
        emb.F_breve.at(i, j) = F.at(i, j);
      } else {
        // remove the feedthrough exactly when it came from an exact entry
        Coeff g = F.at(i, j).feedthrough();
        emb.F_breve.at(i, j) = F.at(i, j) - Rat::constant(g);
      }
    }
  for (int i = p; i < L; ++i) emb.F_breve.at(i, i) = Rat::one();

  Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(L, p);
  lift.topRows(p) = Eigen::MatrixXd::Identity(p, p);
  if (L > p) lift.bottomRows(L - p) = emb.Gamma;
  emb.Delta_breve = lift * Delta * lift.transpose();

  // monicity of the embedded factor
  Eigen::MatrixXd finf = emb.F_breve.feedthrough();
  if (!finf.isApprox(Eigen::MatrixXd::Identity(L, L), 1e-12))
    throw std::logic_error("embedded factor is not monic");

  // spectrum preservation at sampled frequencies
  for (int k = 0; k < 16; ++k) {
    double w = 2.0 * M_PI * (double(k) + 0.5) / 16.0;
    std::complex<double> z = std::polar(1.0, w);
    if (F.near_pole(z) || emb.F_breve.near_pole(z)) continue;
    Eigen::MatrixXcd f = F.evaluate(z);
    Eigen::MatrixXcd fb = emb.F_breve.evaluate(z);
    Eigen::MatrixXcd s1 = f * Delta * f.adjoint();
    Eigen::MatrixXcd s2 = fb * emb.Delta_breve * fb.adjoint();
    double scale = std::max(1.0, s1.cwiseAbs().maxCoeff());
    if ((s1 - s2).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw std::logic_error("square embedding does not preserve the spectrum");
  }
  return emb;
}

// ---------------------------------------------------------------------------
// Signal-ordering permutation from data-level objects.
// ---------------------------------------------------------------------------

struct OrderingContext {
  RouteKind kind = RouteKind::StrictlyProper;
  std::vector<int> noloop_order;                 // for the loop-free route
  const ModelSetStructure* structure = nullptr;  // for the feedthrough-rank route
};

struct OrderingResult {
  int p = 0;
  std::vector<int> perm;         // position -> node; noisy nodes first
  Eigen::MatrixXd Lambda_tilde;  // recovered node-coordinate covariance
};

/// Recovers the module feedthroughs of one row from the excitation transfer
/// feedthrough, given the structure's fixed/parameterized pattern.
inline Eigen::MatrixXd recover_ginf_from_twr(const ModelSetStructure& s,
                                             const Eigen::MatrixXd& Twr_inf) {
  Eigen::MatrixXd ginf = Eigen::MatrixXd::Zero(s.L, s.L);
  for (int i = 0; i < s.L; ++i)
    for (int j = 0; j < s.L; ++j) {
      const auto& e = s.Gpat[size_t(i)][size_t(j)];
      if (e.is_fixed() && e.fixed.is_proper())
        ginf(i, j) = e.fixed.feedthrough().convert_to<double>();
    }
  for (int i = 0; i < s.L; ++i) {
    RowPermutations rp = build_row_permutations_feedthrough(s, i);
    if (rp.alpha == 0) continue;
    const int nc = s.K - rp.beta;
    Eigen::MatrixXd a(nc, rp.alpha);
    Eigen::VectorXd b(nc);
    for (int cc = 0; cc < nc; ++cc) {
      int c = rp.Q[size_t(cc)];
      for (int jj = 0; jj < rp.alpha; ++jj) a(cc, jj) = Twr_inf(rp.P[size_t(jj)], c);
      // known part of the row equation: sum_j (delta_ij - ginf_ij) Twr(j,c)
      double acc = Twr_inf(i, c);
      for (int j = 0; j < s.L; ++j)
        if (!s.Gpat[size_t(i)][size_t(j)].param_feedthrough() && ginf(i, j) != 0.0)
          acc -= ginf(i, j) * Twr_inf(j, c);
      double rinf = 0.0;
      const auto& rc = s.Rpat[size_t(i)][size_t(c)];
      if (rc.is_fixed() && rc.fixed.is_proper()) rinf = rc.fixed.feedthrough().convert_to<double>();
      b(cc) = acc - rinf;
    }
    Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(b);
    for (int jj = 0; jj < rp.alpha; ++jj) ginf(i, rp.P[size_t(jj)]) = x(jj);
  }
  return ginf;
}

/// Determines the noise rank and a node reordering that puts the full-rank
/// noise block first, from the data-level feedthrough objects. The covariance
/// recovery depends on the route that holds for the model class.
inline OrderingResult ordering_permutation(const Eigen::MatrixXd& Twr_inf,
                                           const NoiseFeedthrough& phi,
                                           const OrderingContext& ctx) {
  OrderingResult out;
  const int n = int(phi.Phi.rows());
  out.p = psd_rank(phi.Phi);

  switch (ctx.kind) {
    case RouteKind::StrictlyProper:
      out.Lambda_tilde = phi.Phi;
      break;
    case RouteKind::NoAlgebraicLoops: {
      auto ldl = ldl_recover_lambda(phi, ctx.noloop_order);
      if (ldl.breakdown || ldl.residual > 1e-8)
        throw std::domain_error("covariance recovery failed: " + ldl.note);
      out.Lambda_tilde = ldl.Lambda_tilde;
      break;
    }
    case RouteKind::FeedthroughRank: {
      if (!ctx.structure)
        throw std::invalid_argument("feedthrough-rank ordering needs the model set structure");
      Eigen::MatrixXd ginf = recover_ginf_from_twr(*ctx.structure, Twr_inf);
      Eigen::MatrixXd ig = Eigen::MatrixXd::Identity(n, n) - ginf;
      out.Lambda_tilde = ig * phi.Phi * ig.transpose();
      break;
    }
    case RouteKind::None:
      throw std::invalid_argument("ordering requires a valid precondition route");
  }

  // Greedy pivoted selection: repeatedly take the largest remaining diagonal
  // of the Schur complement of Lambda_tilde.
  Eigen::MatrixXd a = out.Lambda_tilde;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  std::vector<bool> used(size_t(n), false);
  std::vector<int> chosen;
  for (int step = 0; step < out.p; ++step) {
    int best = -1;
    double best_val = 0.0;
    for (int i = 0; i < n; ++i)
      if (!used[size_t(i)] && a(i, i) > best_val) {
        best_val = a(i, i);
        best = i;
      }
    if (best < 0 || best_val <= 1e-12 * scale)
      throw std::domain_error("no full-rank leading block of the stated rank is achievable");
    used[size_t(best)] = true;
    chosen.push_back(best);
    Eigen::VectorXd col = a.col(best);
    a -= col * col.transpose() / best_val;
  }
  out.perm = chosen;
  for (int i = 0; i < n; ++i)
    if (!used[size_t(i)]) out.perm.push_back(i);
  return out;
}

}  // namespace netident
