#include "netident/simulate.hpp"

#include "netident/structure.hpp"

#include "fixtures.hpp"
#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

using namespace netident;
using namespace fixtures;

namespace {

Rat two_over_z() { return Rat(Poly{Coeff(2)}, Poly::z()); }

// Direct-form I filter with explicit input/output histories; the independent
// realization used by the implicit-network oracle below.
struct Df1 {
  std::vector<double> b, a;  // delay-ordered, a[0] == 1
  std::vector<double> uh, yh;

  explicit Df1(const Rat& tf) {
    int d = tf.den().degree();
    b.resize(size_t(d) + 1);
    a.resize(size_t(d) + 1);
    for (int k = 0; k <= d; ++k) {
      b[size_t(k)] = tf.num().coeff(d - k).convert_to<double>();
      a[size_t(k)] = tf.den().coeff(d - k).convert_to<double>();
    }
    uh.assign(size_t(d) + 1, 0.0);
    yh.assign(size_t(d) + 1, 0.0);
  }

  // contribution of strictly past samples to y(t)
  double past() const {
    double acc = 0.0;
    for (size_t k = 1; k < b.size(); ++k) acc += b[k] * uh[k - 1] - a[k] * yh[k - 1];
    return acc;
  }
  double direct() const { return b[0]; }
  void push(double u, double y) {
    for (size_t k = uh.size(); k-- > 1;) {
      uh[k] = uh[k - 1];
      yh[k] = yh[k - 1];
    }
    if (!uh.empty()) {
      uh[0] = u;
      yh[0] = y;
    }
  }
};

// Per-sample implicit solve of w = G w + R r + H e, as an oracle for the
// transfer-based simulator.
Eigen::MatrixXd simulate_implicit(const NetworkModel& m, const Eigen::MatrixXd& r,
                                  const Eigen::MatrixXd& e) {
  const int N = int(r.cols());
  std::vector<std::vector<Df1>> fg, fr, fe;
  auto build = [](const RMat& mat) {
    std::vector<std::vector<Df1>> out;
    for (int i = 0; i < mat.rows(); ++i) {
      out.emplace_back();
      for (int j = 0; j < mat.cols(); ++j) out.back().emplace_back(mat.at(i, j));
    }
    return out;
  };
  fg = build(m.G);
  fr = build(m.R);
  fe = build(m.H);

  Eigen::MatrixXd dg(m.L, m.L);
  for (int i = 0; i < m.L; ++i)
    for (int j = 0; j < m.L; ++j) dg(i, j) = fg[size_t(i)][size_t(j)].direct();
  Eigen::PartialPivLU<Eigen::MatrixXd> solver(Eigen::MatrixXd::Identity(m.L, m.L) - dg);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m.L, N);
  for (int t = 0; t < N; ++t) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m.L);
    for (int i = 0; i < m.L; ++i) {
      for (int j = 0; j < m.L; ++j) rhs(i) += fg[size_t(i)][size_t(j)].past();
      for (int j = 0; j < m.K; ++j)
        rhs(i) += fr[size_t(i)][size_t(j)].direct() * r(j, t) + fr[size_t(i)][size_t(j)].past();
      for (int j = 0; j < m.p; ++j)
        rhs(i) += fe[size_t(i)][size_t(j)].direct() * e(j, t) + fe[size_t(i)][size_t(j)].past();
    }
    Eigen::VectorXd wt = solver.solve(rhs);
    w.col(t) = wt;
    for (int i = 0; i < m.L; ++i) {
      for (int j = 0; j < m.L; ++j) {
        double y = dg(i, j) * wt(j) + fg[size_t(i)][size_t(j)].past();
        fg[size_t(i)][size_t(j)].push(wt(j), y);
      }
      for (int j = 0; j < m.K; ++j) {
        double y = fr[size_t(i)][size_t(j)].direct() * r(j, t) + fr[size_t(i)][size_t(j)].past();
        fr[size_t(i)][size_t(j)].push(r(j, t), y);
      }
      for (int j = 0; j < m.p; ++j) {
        double y = fe[size_t(i)][size_t(j)].direct() * e(j, t) + fe[size_t(i)][size_t(j)].past();
        fe[size_t(i)][size_t(j)].push(e(j, t), y);
      }
    }
  }
  return w;
}

Eigen::MatrixXd impulse(int K, int N, int channel) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(K, N);
  r(channel, 0) = 1.0;
  return r;
}

}  // namespace

TEST_CASE("identity network passes the impulse through") {
  auto m = NetworkModel::make(2, 2, 2);
  m.R = RMat::identity(2);
  m.H = RMat::identity(2);
  m.Lambda = Eigen::MatrixXd::Identity(2, 2);
  int N = 8;
  auto rec = simulate(m, impulse(2, N, 0), Eigen::MatrixXd::Zero(2, N));
  CHECK(rec.w(0, 0) == 1.0);
  CHECK(rec.w.cwiseAbs().sum() == 1.0);
}

TEST_CASE("chain network impulse response") {
  auto s = example1_structure();
  auto m = instantiate(s, s1_theta(Rat::delay(), two_over_z()));
  int N = 6;
  auto rec = simulate(m, impulse(2, N, 0), Eigen::MatrixXd::Zero(0, N));
  // node 3 sees (A B + 1) r1 = 1 + 2 z^-2
  CHECK(rec.w(2, 0) == Catch::Approx(1.0));
  CHECK(rec.w(2, 1) == Catch::Approx(0.0).margin(1e-15));
  CHECK(rec.w(2, 2) == Catch::Approx(2.0));
  CHECK(rec.w(2, 3) == Catch::Approx(0.0).margin(1e-15));
  CHECK(rec.w(2, 4) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("closed loop matches the implicit per-sample recursion") {
  auto s = closedloop_structure();
  auto m = instantiate(s, closedloop_theta());
  int N = 64;
  Eigen::MatrixXd r = Eigen::MatrixXd::Ones(1, N);  // step input
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(1, N);
  auto rec = simulate(m, r, e);
  Eigen::MatrixXd w_oracle = simulate_implicit(m, r, e);
  CHECK((rec.w - w_oracle).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("transfer filtering agrees with the implicit solve on random models") {
  Rng rng(71);
  int done = 0;
  while (done < 25) {
    auto s = fixtures::random_structure(rng, 3);
    auto theta = random_theta(s, rng);
    NetworkModel m = instantiate(s, theta, /*validate=*/false);
    if (!validate_model(m).empty()) continue;
    ++done;
    int N = 40;
    Eigen::MatrixXd r(m.K, N), e(m.p, N);
    for (int t = 0; t < N; ++t) {
      for (int j = 0; j < m.K; ++j) r(j, t) = rng.gaussian();
      for (int j = 0; j < m.p; ++j) e(j, t) = rng.gaussian();
    }
    auto rec = simulate(m, r, e);
    Eigen::MatrixXd w_oracle = simulate_implicit(m, r, e);
    double scale = std::max(1.0, w_oracle.cwiseAbs().maxCoeff());
    CHECK((rec.w - w_oracle).cwiseAbs().maxCoeff() < 1e-10 * scale);
  }
}

TEST_CASE("superposition of excitation responses") {
  auto s = closedloop_structure();
  auto m = instantiate(s, closedloop_theta());
  int N = 48;
  Rng rng(73);
  Eigen::MatrixXd r1(1, N), r2(1, N), e(1, N);
  for (int t = 0; t < N; ++t) {
    r1(0, t) = rng.gaussian();
    r2(0, t) = rng.gaussian();
    e(0, t) = rng.gaussian();
  }
  auto both = simulate(m, r1 + r2, e);
  auto first = simulate(m, r1, e);
  auto second = simulate(m, r2, Eigen::MatrixXd::Zero(1, N));
  CHECK((both.w - first.w - second.w).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("witness family members share the network transfer") {
  Rat A = Rat::delay();
  Rat B = two_over_z();
  auto s = example1_structure();
  auto s2 = instantiate(s, s2_theta(A, B));
  REQUIRE(witness_family_applies(s2));

  SECTION("the true member reproduces the original model") {
    auto member = witness_family_member(s2, B);
    CHECK(member.model.G.at(1, 0).is_zero());
    CHECK(member.violations.empty());
    CHECK(member.model.G == s2.G);
  }
  SECTION("the maximally different member has the same transfer") {
    auto member = witness_family_member(s2, Rat::zero());
    CHECK(member.model.G.at(1, 0) == (A + Rat::one()) * B);
    CHECK(network_transfer(member.model) == network_transfer(s2));
  }
  SECTION("members simulate identically; a perturbed non-member does not") {
    int N = 128;
    Rng rng(79);
    Eigen::MatrixXd r(2, N);
    for (int t = 0; t < N; ++t) {
      r(0, t) = rng.gaussian();
      r(1, t) = rng.gaussian();
    }
    Eigen::MatrixXd e(0, N);
    auto base = simulate(s2, r, e);
    auto member = witness_family_member(s2, Coeff(1, 2) * B);
    REQUIRE(member.violations.empty());
    auto rec = simulate(member.model, r, e);
    CHECK((rec.w - base.w).cwiseAbs().maxCoeff() < 1e-9);

    auto perturbed = member.model;
    perturbed.G.at(1, 0) = perturbed.G.at(1, 0) + Rat::constant(Coeff(1, 1000));
    auto rec_bad = simulate(perturbed, r, e);
    CHECK((rec_bad.w - base.w).cwiseAbs().maxCoeff() > 1e-4);
  }
  SECTION("family construction requires the benchmark shape") {
    auto wrong = instantiate(s, s1_theta(A, B));
    CHECK(!witness_family_applies(wrong));
    CHECK_THROWS_AS(witness_family_member(wrong, B), std::invalid_argument);
  }
  SECTION("unstable members are reported") {
    auto member = witness_family_member(s2, first_order(Coeff(1), Coeff(2)));
    CHECK(!member.violations.empty());
  }
}

TEST_CASE("empirical spectrum feedthrough") {
  SECTION("white noise through the identity") {
    auto m = NetworkModel::make(2, 0, 2);
    m.H = RMat::identity(2);
    m.Lambda = Eigen::MatrixXd::Zero(2, 2);
    m.Lambda(0, 0) = 1.0;
    m.Lambda(1, 1) = 4.0;
    int N = 100000;
    auto rec = simulate(m, Eigen::MatrixXd::Zero(0, N), gaussian_noise(m.Lambda, N, 11));
    auto est = sample_spectrum_feedthrough(rec, m);
    CHECK((est - m.Lambda).cwiseAbs().maxCoeff() < 0.05 * 4.0);
  }
  SECTION("noise-free model gives the zero matrix") {
    auto s = example1_structure();
    auto m = instantiate(s, s1_theta(Rat::delay(), two_over_z()));
    int N = 2048;
    auto rec = simulate(m, Eigen::MatrixXd::Zero(2, N), Eigen::MatrixXd::Zero(0, N));
    CHECK(sample_spectrum_feedthrough(rec, m).isZero(0.0));
  }
  SECTION("five-node instantiation has rank-3 estimate") {
    Rng rng(83);
    auto s = fivenode_structure(false);
    // small-gain instantiation: keeps the fully connected loop stable and the
    // noise filter minimum phase
    ThetaAssignment theta;
    for (const auto& pos : param_positions(s)) {
      Coeff c = Coeff(rng.sign() > 0 ? 1 : -1) * Coeff(rng.uniform_int(2, 4), 64);
      Coeff a = Coeff(rng.uniform_int(-24, 24), 64);
      Rat value = first_order(c, a);
      if (pos.matrix == 'H' && pos.row == pos.col) value = value + Rat::one();
      theta.entries[pos] = value;
    }
    Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(3, 3);
    for (int i = 0; i < 3; ++i) lam(i, i) = rng.uniform(0.5, 2.0);
    lam(0, 1) = lam(1, 0) = 0.3;
    theta.lambda = lam;
    auto m = instantiate(s, theta, /*validate=*/false);
    REQUIRE(validate_model(m).empty());
    int N = 20000;
    auto rec = simulate(m, Eigen::MatrixXd::Zero(2, N), gaussian_noise(m.Lambda, N, 13));
    auto est = sample_spectrum_feedthrough(rec, m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(est);
    int rank = 0;
    for (int i = 0; i < 5; ++i)
      if (es.eigenvalues()(i) > 1e-9 * es.eigenvalues().maxCoeff()) ++rank;
    CHECK(rank == 3);
  }
  SECTION("preconditions are enforced") {
    auto m = NetworkModel::make(1, 1, 1);
    m.R.at(0, 0) = Rat::one();
    m.H.at(0, 0) = Rat::one();
    m.Lambda = Eigen::MatrixXd::Ones(1, 1);
    int N = 2048;
    auto rec = simulate(m, Eigen::MatrixXd::Ones(1, N), gaussian_noise(m.Lambda, N, 17));
    CHECK_THROWS_AS(sample_spectrum_feedthrough(rec, m), std::invalid_argument);
    auto rec_short = simulate(m, Eigen::MatrixXd::Zero(1, 512), gaussian_noise(m.Lambda, 512, 17));
    CHECK_THROWS_AS(sample_spectrum_feedthrough(rec_short, m), std::invalid_argument);
  }
}

TEST_CASE("signal records round-trip through CSV") {
  auto s = closedloop_structure();
  auto m = instantiate(s, closedloop_theta());
  int N = 16;
  auto rec = simulate(m, Eigen::MatrixXd::Ones(1, N), 21, N);
  std::stringstream ss;
  write_csv(ss, rec);
  auto back = read_csv(ss);
  CHECK(back.N == rec.N);
  CHECK(back.r.isApprox(rec.r, 0.0));
  CHECK(back.e.isApprox(rec.e, 0.0));
  CHECK(back.w.isApprox(rec.w, 0.0));

  std::string first_line;
  std::stringstream ss2;
  write_csv(ss2, rec);
  std::getline(ss2, first_line);
  CHECK(first_line == "t,r1,e1,w1,w2");
}

TEST_CASE("burn-in drops leading samples") {
  auto m = NetworkModel::make(1, 1, 0);
  m.R.at(0, 0) = Rat::delay();
  int N = 10;
  Eigen::MatrixXd r = impulse(1, N, 0);
  auto full = simulate(m, r, Eigen::MatrixXd::Zero(0, N));
  auto trimmed = simulate(m, r, Eigen::MatrixXd::Zero(0, N), 2);
  CHECK(trimmed.N == 8);
  CHECK(trimmed.w.isApprox(full.w.rightCols(8)));
}
