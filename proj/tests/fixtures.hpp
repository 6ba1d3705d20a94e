#pragma once

// Canonical structures used across the suites: the two-excitation 3-node
// benchmark with its two data-generating systems S1/S2, the classical closed
// loop, the 5-node correlated-noise network, and the correlated-noise 3-node
// variants.

#include "netident/structure.hpp"

namespace fixtures {

using namespace netident;

inline Rat half_over_z() { return first_order(Coeff(1, 2), Coeff(0)); }  // 0.5/z

// 3 nodes, 2 excitations, disturbance free; every off-diagonal module is an
// independent strictly-proper parameter, R is known and fixed.
inline ModelSetStructure example1_structure(bool restrict_g21 = false) {
  auto s = ModelSetStructure::make(3, 2, 0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) s.Gpat[size_t(i)][size_t(j)] = EntryPattern::param(Properness::StrictlyProper);
  if (restrict_g21) s.Gpat[1][0] = EntryPattern::zero();
  s.Rpat[0][0] = EntryPattern::fixed_entry(Rat::one());
  s.Rpat[1][1] = EntryPattern::fixed_entry(Rat::one());
  s.Rpat[2][0] = EntryPattern::fixed_entry(Rat::one());
  return s;
}

// S1: chain 1 -> 2 -> 3 with modules A and B.
inline ThetaAssignment s1_theta(const Rat& A, const Rat& B, bool restricted = false) {
  ThetaAssignment t;
  t.entries[{'G', 1, 0}] = A;
  t.entries[{'G', 2, 1}] = B;
  t.entries[{'G', 0, 1}] = Rat::zero();
  t.entries[{'G', 0, 2}] = Rat::zero();
  t.entries[{'G', 1, 2}] = Rat::zero();
  t.entries[{'G', 2, 0}] = Rat::zero();
  if (restricted) t.entries.erase({'G', 1, 0});
  return t;
}

// S2: 1 -> 3 via A, 3 -> 2 via B.
inline ThetaAssignment s2_theta(const Rat& A, const Rat& B, bool restricted = false) {
  ThetaAssignment t;
  t.entries[{'G', 2, 0}] = A;
  t.entries[{'G', 1, 2}] = B;
  t.entries[{'G', 0, 1}] = Rat::zero();
  t.entries[{'G', 0, 2}] = Rat::zero();
  t.entries[{'G', 1, 0}] = Rat::zero();
  t.entries[{'G', 2, 1}] = Rat::zero();
  if (restricted) t.entries.erase({'G', 1, 0});
  return t;
}

// Classical closed loop: node 1 = process output (noisy), node 2 = process
// input (excited by r). The controller module 1 -> 2 may carry feedthrough;
// the process module 2 -> 1 is strictly proper.
inline ModelSetStructure closedloop_structure() {
  auto s = ModelSetStructure::make(2, 1, 1);
  s.Gpat[0][1] = EntryPattern::param(Properness::StrictlyProper);
  s.Gpat[1][0] = EntryPattern::param(Properness::Proper);
  s.Rpat[1][0] = EntryPattern::fixed_entry(Rat::one());
  s.Hpat[0][0] = EntryPattern::param(Properness::Proper);  // monic
  s.lambda_diagonal_feedthrough = true;
  s.lambda_kind = LambdaKind::Param;
  return s;
}

inline ThetaAssignment closedloop_theta() {
  ThetaAssignment t;
  t.entries[{'G', 0, 1}] = half_over_z();                       // process 0.5/z
  t.entries[{'G', 1, 0}] = Rat::constant(Coeff(1, 5));          // controller 0.2
  t.entries[{'H', 0, 0}] = Rat::one();                          // H_a = 1
  t.lambda = Eigen::MatrixXd::Ones(1, 1);
  return t;
}

// 5 nodes, noise of rank 3 on the first three nodes with correlation between
// nodes 1 and 2; excitations enter nodes 4 and 5 directly (and optionally
// nodes 1 and 2 as well). Every off-diagonal module is parameterized.
inline ModelSetStructure fivenode_structure(bool excite_nodes_1_2 = false) {
  const int K = excite_nodes_1_2 ? 4 : 2;
  auto s = ModelSetStructure::make(5, K, 3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) s.Gpat[size_t(i)][size_t(j)] = EntryPattern::param(Properness::StrictlyProper);
  int col = 0;
  if (excite_nodes_1_2) {
    s.Rpat[0][size_t(col++)] = EntryPattern::fixed_entry(Rat::one());
    s.Rpat[1][size_t(col++)] = EntryPattern::fixed_entry(Rat::one());
  }
  s.Rpat[3][size_t(col++)] = EntryPattern::fixed_entry(Rat::one());
  s.Rpat[4][size_t(col++)] = EntryPattern::fixed_entry(Rat::one());
  for (int i = 0; i < 3; ++i) s.Hpat[size_t(i)][size_t(i)] = EntryPattern::param(Properness::Proper);
  s.Hpat[0][1] = EntryPattern::param(Properness::StrictlyProper);
  s.Hpat[1][0] = EntryPattern::param(Properness::StrictlyProper);
  return s;
}

// Correlated-noise 3-node set: full-rank noise, modeled correlation between
// nodes 1 and 2, excitations with parameterized gains on nodes 1 and 2.
//   with_r:      include the two R columns
//   diagonal_h:  drop the H12/H21 correlation terms
inline ModelSetStructure corrnoise3_structure(bool with_r, bool diagonal_h) {
  auto s = ModelSetStructure::make(3, with_r ? 2 : 0, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) s.Gpat[size_t(i)][size_t(j)] = EntryPattern::param(Properness::StrictlyProper);
  if (with_r) {
    s.Rpat[0][0] = EntryPattern::param(Properness::Proper);
    s.Rpat[1][1] = EntryPattern::param(Properness::Proper);
  }
  for (int i = 0; i < 3; ++i) s.Hpat[size_t(i)][size_t(i)] = EntryPattern::param(Properness::Proper);
  if (!diagonal_h) {
    s.Hpat[0][1] = EntryPattern::param(Properness::StrictlyProper);
    s.Hpat[1][0] = EntryPattern::param(Properness::StrictlyProper);
  }
  return s;
}

// Random pattern generator for the structure corpus used in property tests.
inline ModelSetStructure random_structure(Rng& rng, int max_nodes = 4) {
  int L = rng.uniform_int(2, max_nodes);
  int p = rng.uniform_int(0, L);
  int K = rng.uniform_int(0, 3);
  auto s = ModelSetStructure::make(L, K, p);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) {
      if (i == j) continue;
      double u = rng.uniform01();
      if (u < 0.5) continue;
      if (u < 0.85)
        s.Gpat[size_t(i)][size_t(j)] = EntryPattern::param(
            rng.uniform01() < 0.5 ? Properness::StrictlyProper : Properness::Proper);
      else
        s.Gpat[size_t(i)][size_t(j)] = EntryPattern::fixed_entry(first_order(
            Coeff(rng.sign() > 0 ? 1 : -1) * Coeff(rng.uniform_int(4, 16), 8),
            Coeff(rng.uniform_int(-12, 12), 16)));
    }
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < K; ++j) {
      double u = rng.uniform01();
      if (u < 0.5) continue;
      if (u < 0.75)
        s.Rpat[size_t(i)][size_t(j)] = EntryPattern::fixed_entry(Rat::one());
      else
        s.Rpat[size_t(i)][size_t(j)] = EntryPattern::param(Properness::Proper);
    }
  for (int i = 0; i < p; ++i) s.Hpat[size_t(i)][size_t(i)] = EntryPattern::param(Properness::Proper);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (i != j && rng.uniform01() < 0.3)
        s.Hpat[size_t(i)][size_t(j)] = EntryPattern::param(Properness::StrictlyProper);
  for (int i = p; i < L; ++i)
    for (int j = 0; j < p; ++j)
      if (rng.uniform01() < 0.3)
        s.Hpat[size_t(i)][size_t(j)] = EntryPattern::param(Properness::StrictlyProper);
  return s;
}

}  // namespace fixtures
