#pragma once

#include "netident/model.hpp"
#include "netident/rng.hpp"

#include <Eigen/Dense>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace netident {

/// One simulated experiment: excitations r (K x N), driving noise e (p x N)
/// and the resulting node signals w (L x N).
struct SignalRecord {
  int N = 0;
  Eigen::MatrixXd r, e, w;
};

/// Direct-form II transposed realization of a proper rational transfer
/// function, zero initial state.
class DirectFormFilter {
 public:
  DirectFormFilter() = default;

  explicit DirectFormFilter(const Rat& tf) {
    if (!tf.is_proper())
      throw std::invalid_argument("cannot realize an improper transfer function");
    const int d = tf.den().degree();
    b_.assign(size_t(d) + 1, 0.0);
    a_.assign(size_t(d) + 1, 0.0);
    for (int k = 0; k <= d; ++k) {
      b_[size_t(k)] = tf.num().coeff(d - k).convert_to<double>();
      a_[size_t(k)] = tf.den().coeff(d - k).convert_to<double>();
    }
    state_.assign(size_t(d), 0.0);
  }

  double step(double u) {
    const size_t d = state_.size();
    double y = b_[0] * u + (d ? state_[0] : 0.0);
    for (size_t k = 0; k + 1 < d; ++k)
      state_[k] = state_[k + 1] + b_[k + 1] * u - a_[k + 1] * y;
    if (d) state_[d - 1] = b_[d] * u - a_[d] * y;
    return y;
  }

  // Output before the current input arrives; meaningful for strictly proper
  // filters, where the direct term vanishes.
  double peek() const { return state_.empty() ? 0.0 : state_[0]; }

 private:
  std::vector<double> b_, a_;  // delay-ordered, a_[0] == 1
  std::vector<double> state_;
};

namespace detail {

// Bank of filters realizing one rational matrix column-by-column; output is
// the matrix-filtered sum per row.
class FilterBank {
 public:
  FilterBank() = default;
  FilterBank(const RMat& tf) : rows_(tf.rows()), cols_(tf.cols()) {
    filters_.resize(size_t(rows_) * size_t(cols_));
    active_ = bool_grid();
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        if (!tf.at(i, j).is_zero()) {
          filters_[size_t(i) * size_t(cols_) + size_t(j)] = DirectFormFilter(tf.at(i, j));
          active_[size_t(i) * size_t(cols_) + size_t(j)] = true;
        }
  }

  // y(t) += M(q) u(t)
  void step(const Eigen::VectorXd& u, Eigen::VectorXd& y) {
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        if (active_[size_t(i) * size_t(cols_) + size_t(j)])
          y(i) += filters_[size_t(i) * size_t(cols_) + size_t(j)].step(u(j));
  }

  // Current output of a strictly proper bank, before the input at t is known.
  Eigen::VectorXd peek() const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        if (active_[size_t(i) * size_t(cols_) + size_t(j)])
          y(i) += filters_[size_t(i) * size_t(cols_) + size_t(j)].peek();
    return y;
  }

  void advance(const Eigen::VectorXd& u) {
    Eigen::VectorXd sink = Eigen::VectorXd::Zero(rows_);
    step(u, sink);
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<DirectFormFilter> filters_;
  std::vector<char> active_;
  std::vector<char> bool_grid() const {
    return std::vector<char>(size_t(rows_) * size_t(cols_), 0);
  }
};

inline Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& lambda) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lambda);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Gaussian driving noise with covariance Lambda, seeded.
inline Eigen::MatrixXd gaussian_noise(const Eigen::MatrixXd& lambda, int N, uint64_t seed) {
  const int p = int(lambda.rows());
  Eigen::MatrixXd e(p, N);
  if (p == 0) return e;
  Rng rng(seed);
  Eigen::MatrixXd sqrt_lambda = detail::covariance_sqrt(lambda);
  for (int t = 0; t < N; ++t) {
    Eigen::VectorXd g(p);
    for (int i = 0; i < p; ++i) g(i) = rng.gaussian();
    e.col(t) = sqrt_lambda * g;
  }
  return e;
}

/// Filters the external signals through the network transfer: w = T_wr r +
/// T_we e, realized entrywise as difference equations with zero initial
/// conditions. Well-posedness makes T proper, so no per-sample implicit solve
/// is needed even with algebraic loops. The first `burn_in` samples are
/// dropped from the returned record.
inline SignalRecord simulate(const NetworkModel& m, const Eigen::MatrixXd& r,
                             const Eigen::MatrixXd& e, int burn_in = 0) {
  const int total = int(r.cols());
  if (r.rows() != m.K || e.rows() != m.p || e.cols() != total)
    throw std::invalid_argument("signal dimensions do not match the model");
  if (total <= burn_in) throw std::invalid_argument("record shorter than the burn-in");

  RMat T = network_transfer(m);
  if (!T.all_proper())
    throw std::domain_error("network transfer is improper; the model is not well-posed");
  RMat Twr(m.L, m.K), Twe(m.L, m.p);
  for (int i = 0; i < m.L; ++i) {
    for (int j = 0; j < m.K; ++j) Twr.at(i, j) = T.at(i, j);
    for (int j = 0; j < m.p; ++j) Twe.at(i, j) = T.at(i, m.K + j);
  }
  detail::FilterBank fr(Twr), fe(Twe);

  SignalRecord rec;
  rec.N = total - burn_in;
  rec.r = r.rightCols(rec.N);
  rec.e = e.rightCols(rec.N);
  rec.w = Eigen::MatrixXd::Zero(m.L, rec.N);
  for (int t = 0; t < total; ++t) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m.L);
    fr.step(r.col(t), y);
    fe.step(e.col(t), y);
    if (!y.allFinite() || y.cwiseAbs().maxCoeff() > 1e12)
      throw std::runtime_error("simulation diverged at sample " + std::to_string(t));
    if (t >= burn_in) rec.w.col(t - burn_in) = y;
  }
  return rec;
}

inline SignalRecord simulate(const NetworkModel& m, const Eigen::MatrixXd& r,
                             uint64_t noise_seed, int N, int burn_in = 0) {
  Eigen::MatrixXd e = gaussian_noise(m.Lambda, N, noise_seed);
  return simulate(m, r, e, burn_in);
}

// ---------------------------------------------------------------------------
// Non-identifiability witness family for the 3-node two-excitation benchmark.
// ---------------------------------------------------------------------------

struct WitnessMember {
  NetworkModel model;
  std::vector<Violation> violations;  // the family is algebraic, not automatically stable
};

/// True when the model has the benchmark shape: three nodes, two fixed unit
/// excitations into nodes 1, 2 and 1, 3, no noise, modules 1->3 and 3->2.
inline bool witness_family_applies(const NetworkModel& m) {
  if (m.L != 3 || m.K != 2 || m.p != 0) return false;
  if (!(m.R.at(0, 0) == Rat::one() && m.R.at(1, 1) == Rat::one() &&
        m.R.at(2, 0) == Rat::one() && m.R.at(0, 1).is_zero() && m.R.at(1, 0).is_zero() &&
        m.R.at(2, 1).is_zero()))
    return false;
  const Rat& A = m.G.at(2, 0);
  const Rat& B = m.G.at(1, 2);
  if (A.is_zero() || B.is_zero()) return false;
  if (A == -Rat::one()) return false;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (!((i == 2 && j == 0) || (i == 1 && j == 2)) && !m.G.at(i, j).is_zero()) return false;
  return true;
}

/// Member of the one-parameter family of models sharing the benchmark's
/// network transfer: the module 3->2 becomes g23 and the module 1->2 becomes
/// (A+1)(B - g23). The network transfer is identical by construction; the
/// member may still violate stability, which is reported.
inline WitnessMember witness_family_member(const NetworkModel& s2, const Rat& g23) {
  if (!witness_family_applies(s2))
    throw std::invalid_argument("model does not have the witness-family shape");
  if (!g23.is_proper()) throw std::invalid_argument("replacement module must be proper");
  const Rat& A = s2.G.at(2, 0);
  const Rat& B = s2.G.at(1, 2);
  WitnessMember member;
  member.model = s2;
  member.model.G.at(1, 2) = g23;
  member.model.G.at(1, 0) = (A + Rat::one()) * (B - g23);
  member.violations = validate_model(member.model);
  return member;
}

// ---------------------------------------------------------------------------
// Empirical feedthrough of the disturbance spectrum.
// ---------------------------------------------------------------------------

/// Estimates the feedthrough of the node-disturbance spectrum from a record
/// generated without excitation: the record is whitened with the model's own
/// noise chain (inverting w = T_we e sample by sample, which is exact for
/// zero initial conditions), and the innovation covariance is mapped through
/// the feedthrough of T_we. Converges to the spectrum feedthrough as N grows.
inline Eigen::MatrixXd sample_spectrum_feedthrough(const SignalRecord& rec,
                                                   const NetworkModel& m, int burn_in = 2048) {
  if (rec.N < 1024) throw std::invalid_argument("record too short for spectrum estimation");
  if (rec.r.size() > 0 && rec.r.cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("spectrum estimation requires a record with r = 0");
  if (m.p == 0) return Eigen::MatrixXd::Zero(m.L, m.L);

  RMat ig = RMat::identity(m.L) - m.G;
  RMat Twe = ig.invert() * m.H;
  Eigen::MatrixXd m0 = Twe.feedthrough();  // L x p, full column rank
  RMat tail(m.L, m.p);                     // strictly proper part of T_we
  for (int i = 0; i < m.L; ++i)
    for (int j = 0; j < m.p; ++j)
      tail.at(i, j) = Twe.at(i, j) - Rat::constant(Twe.at(i, j).feedthrough());
  detail::FilterBank ftail(tail);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> pinv(m0);

  const int use_burn = std::min(burn_in, rec.N / 2);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m.p, m.p);
  int count = 0;
  for (int t = 0; t < rec.N; ++t) {
    // the strictly proper part's output at t depends on innovations before t
    Eigen::VectorXd ehat = pinv.solve(rec.w.col(t) - ftail.peek());
    ftail.advance(ehat);
    if (t >= use_burn) {
      cov += ehat * ehat.transpose();
      ++count;
    }
  }
  cov /= double(count);
  return m0 * cov * m0.transpose();
}

// ---------------------------------------------------------------------------
// CSV serialization: header row t, r1..rK, e1..ep, w1..wL, one row per
// sample, 17 significant digits.
// ---------------------------------------------------------------------------

inline void write_csv(std::ostream& os, const SignalRecord& rec) {
  os << "t";
  for (int j = 0; j < rec.r.rows(); ++j) os << ",r" << (j + 1);
  for (int j = 0; j < rec.e.rows(); ++j) os << ",e" << (j + 1);
  for (int j = 0; j < rec.w.rows(); ++j) os << ",w" << (j + 1);
  os << "\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (int t = 0; t < rec.N; ++t) {
    os << t;
    for (int j = 0; j < rec.r.rows(); ++j) put(rec.r(j, t));
    for (int j = 0; j < rec.e.rows(); ++j) put(rec.e(j, t));
    for (int j = 0; j < rec.w.rows(); ++j) put(rec.w(j, t));
    os << "\n";
  }
}

inline SignalRecord read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("empty signal file");
  int K = 0, p = 0, L = 0;
  {
    std::stringstream header(line);
    std::string field;
    if (!std::getline(header, field, ',') || field != "t")
      throw std::invalid_argument("signal file must start with a 't' column");
    while (std::getline(header, field, ',')) {
      if (field.size() < 2) throw std::invalid_argument("bad column name: " + field);
      if (field[0] == 'r')
        ++K;
      else if (field[0] == 'e')
        ++p;
      else if (field[0] == 'w')
        ++L;
      else
        throw std::invalid_argument("bad column name: " + field);
    }
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> vals;
    while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
    if (int(vals.size()) != 1 + K + p + L)
      throw std::invalid_argument("row with wrong number of fields");
    rows.push_back(std::move(vals));
  }
  SignalRecord rec;
  rec.N = int(rows.size());
  rec.r = Eigen::MatrixXd::Zero(K, rec.N);
  rec.e = Eigen::MatrixXd::Zero(p, rec.N);
  rec.w = Eigen::MatrixXd::Zero(L, rec.N);
  for (int t = 0; t < rec.N; ++t) {
    int c = 1;
    for (int j = 0; j < K; ++j) rec.r(j, t) = rows[size_t(t)][size_t(c++)];
    for (int j = 0; j < p; ++j) rec.e(j, t) = rows[size_t(t)][size_t(c++)];
    for (int j = 0; j < L; ++j) rec.w(j, t) = rows[size_t(t)][size_t(c++)];
  }
  return rec;
}

}  // namespace netident
