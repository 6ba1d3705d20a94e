#include "netident/identifiability.hpp"

#include "fixtures.hpp"
#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace netident;
using namespace fixtures;

namespace {
Rat two_over_z() { return Rat(Poly{Coeff(2)}, Poly::z()); }
}  // namespace

TEST_CASE("strictly proper detection") {
  CHECK(check_strictly_proper(example1_structure()));
  CHECK(!check_strictly_proper(closedloop_structure()));
  auto all_zero = ModelSetStructure::make(3, 1, 0);
  CHECK(check_strictly_proper(all_zero));
}

TEST_CASE("algebraic loop detection") {
  SECTION("strictly proper structure has an empty feedthrough graph") {
    auto r = check_no_algebraic_loops(example1_structure());
    REQUIRE(r.order.has_value());
  }
  SECTION("closed loop is acyclic and orders the input node first") {
    auto s = closedloop_structure();
    auto r = check_no_algebraic_loops(s);
    REQUIRE(r.order.has_value());
    // node 2 (process input, receiver of the static module) must come first
    CHECK((*r.order)[0] == 1);
    CHECK((*r.order)[1] == 0);
  }
  SECTION("two proper modules facing each other form a loop") {
    auto s = ModelSetStructure::make(2, 0, 0);
    s.Gpat[0][1] = EntryPattern::param(Properness::Proper);
    s.Gpat[1][0] = EntryPattern::param(Properness::Proper);
    auto r = check_no_algebraic_loops(s);
    CHECK(!r.order.has_value());
    CHECK(r.cycle.size() == 2);
  }
  SECTION("reordered feedthrough is upper triangular") {
    Rng rng(5);
    int done = 0;
    while (done < 25) {
      auto s = fixtures::random_structure(rng);
      auto r = check_no_algebraic_loops(s);
      if (!r.order) continue;
      ++done;
      auto theta = random_theta(s, rng);
      auto m = instantiate(s, theta, false);
      Eigen::MatrixXd ginf = m.G.feedthrough();
      const auto& ord = *r.order;
      for (size_t a = 0; a < ord.size(); ++a)
        for (size_t b = 0; b < a; ++b)  // below the diagonal
          CHECK(ginf(ord[a], ord[b]) == 0.0);
    }
  }
}

TEST_CASE("row permutations gather parameterized columns") {
  auto s = example1_structure();
  auto rp = build_row_permutations(s, 0);
  CHECK(rp.alpha == 2);
  CHECK(rp.beta == 0);
  CHECK(rp.P == std::vector<int>{1, 2, 0});
  CHECK(rp.Q == std::vector<int>{0, 1});

  auto fixed_row = ModelSetStructure::make(2, 1, 0);
  fixed_row.Rpat[0][0] = EntryPattern::fixed_entry(Rat::one());
  auto rp2 = build_row_permutations(fixed_row, 0);
  CHECK(rp2.alpha == 0);
  CHECK(rp2.P == std::vector<int>{0, 1});

  auto all_param = ModelSetStructure::make(2, 1, 1);
  all_param.Gpat[0][1] = EntryPattern::param(Properness::Proper);
  all_param.Rpat[0][0] = EntryPattern::param(Properness::Proper);
  all_param.Hpat[0][0] = EntryPattern::param(Properness::Proper);
  auto rp3 = build_row_permutations(all_param, 0);
  CHECK(rp3.alpha == 1);
  CHECK(rp3.beta == 2);
  CHECK(rp3.Q == std::vector<int>{0, 1});  // both input columns are parameterized
}

TEST_CASE("row test matrices reproduce the worked submatrices") {
  Rat A = Rat::delay();
  Rat B = two_over_z();
  auto s = example1_structure();

  SECTION("chain system, first row") {
    auto m = instantiate(s, s1_theta(A, B));
    RMat T = network_transfer(m);
    RMat t1 = row_test_matrix(s, T, 0);
    REQUIRE(t1.rows() == 2);
    REQUIRE(t1.cols() == 2);
    CHECK(t1.at(0, 0) == A);
    CHECK(t1.at(0, 1) == Rat::one());
    CHECK(t1.at(1, 0) == A * B + Rat::one());
    CHECK(t1.at(1, 1) == B);
  }
  SECTION("alternative system, second row is rank deficient") {
    auto m = instantiate(s, s2_theta(A, B));
    RMat T = network_transfer(m);
    RMat t2 = row_test_matrix(s, T, 1);
    CHECK(t2.at(0, 0) == Rat::one());
    CHECK(t2.at(0, 1).is_zero());
    CHECK(t2.at(1, 0) == A + Rat::one());
    CHECK(t2.at(1, 1).is_zero());
    CHECK(normal_rank(t2) == 1);
  }
  SECTION("row without parameters gives an empty matrix") {
    auto fixed_row = ModelSetStructure::make(2, 1, 0);
    fixed_row.Rpat[0][0] = EntryPattern::fixed_entry(Rat::one());
    auto m = instantiate(fixed_row, ThetaAssignment{});
    RMat T = network_transfer(m);
    RMat t = row_test_matrix(fixed_row, T, 0);
    CHECK(t.rows() == 0);
  }
}

TEST_CASE("extraction commutes with evaluation") {
  Rng rng(23);
  int done = 0;
  while (done < 200) {
    auto s = fixtures::random_structure(rng);
    auto theta = random_theta(s, rng);
    auto m = instantiate(s, theta, false);
    RMat T;
    try {
      T = network_transfer(m);
    } catch (const SingularMatrix&) {
      continue;
    } catch (const DegreeOverflow&) {
      continue;
    }
    ++done;
    int i = rng.uniform_int(0, s.L - 1);
    RMat ti = row_test_matrix(s, T, i);
    std::complex<double> z = std::polar(1.07, 2.0 * M_PI * rng.uniform01());
    if (T.near_pole(z)) continue;
    // select-then-evaluate equals evaluate-then-select
    auto rp = build_row_permutations(s, i);
    Eigen::MatrixXcd tz = T.evaluate(z);
    Eigen::MatrixXcd tiz = ti.evaluate(z);
    for (int a = 0; a < rp.alpha; ++a)
      for (int b = 0; b + rp.beta < int(rp.Q.size()); ++b) {
        std::complex<double> want = tz(rp.P[size_t(a)], rp.Q[size_t(b)]);
        CHECK(std::abs(tiz(a, b) - want) < 1e-9 * (1.0 + std::abs(want)));
      }
  }
}

TEST_CASE("diagonalization certificate") {
  SECTION("closed loop succeeds with the identity assignment") {
    auto res = check_diagonalization(closedloop_structure());
    REQUIRE(res.success);
    // row 1 (noisy output) takes the noise column, row 2 the excitation
    CHECK(res.assignment == std::vector<int>{1, 0});
  }
  SECTION("correlated noise without excitation fails") {
    auto res = check_diagonalization(fivenode_structure(false));
    CHECK(!res.success);
    CHECK(res.note.find("w1") != std::string::npos);
  }
  SECTION("adding excitations to the correlated nodes restores success") {
    auto res = check_diagonalization(fivenode_structure(true));
    CHECK(res.success);
  }
  SECTION("correlated-noise 3-node variants") {
    CHECK(check_diagonalization(corrnoise3_structure(true, false)).success);
    CHECK(!check_diagonalization(corrnoise3_structure(false, false)).success);
    CHECK(check_diagonalization(corrnoise3_structure(false, true)).success);
  }
}

TEST_CASE("feedthrough conditions per row") {
  SECTION("strictly proper structures pass vacuously") {
    auto s = example1_structure();
    auto m = instantiate(s, s1_theta(Rat::delay(), two_over_z()));
    auto res = check_feedthrough_conditions_at_model(s, m);
    CHECK(res.ok);
    for (const auto& row : res.rows) {
      CHECK(row.alpha == 0);
      CHECK(row.ok());
    }
  }
  SECTION("loop with the static module feeding the unexcited node passes") {
    // Excitation enters node 2 with unit feedthrough; the static module maps
    // node 2 into node 1, so its feedthrough is visible in the first row of
    // the excitation transfer.
    auto s = ModelSetStructure::make(2, 1, 1);
    s.Gpat[0][1] = EntryPattern::param(Properness::Proper);
    s.Gpat[1][0] = EntryPattern::param(Properness::StrictlyProper);
    s.Rpat[1][0] = EntryPattern::fixed_entry(Rat::one());
    s.Hpat[0][0] = EntryPattern::param(Properness::Proper);
    ThetaAssignment t;
    t.entries[{'G', 0, 1}] = Rat::constant(Coeff(1, 5));
    t.entries[{'G', 1, 0}] = half_over_z();
    t.entries[{'H', 0, 0}] = Rat::one();
    t.lambda = Eigen::MatrixXd::Ones(1, 1);
    auto m = instantiate(s, t);
    auto res = check_feedthrough_conditions_at_model(s, m);
    CHECK(res.ok);
    CHECK(res.rows[0].alpha == 1);
    CHECK(res.rows[0].rank == 1);
  }
  SECTION("closed loop with excitation only at the static module's source fails") {
    // Here the static module feeds the excited node from the unexcited one;
    // its feedthrough leaves no trace in the excitation transfer feedthrough.
    auto s = closedloop_structure();
    auto m = instantiate(s, closedloop_theta());
    auto res = check_feedthrough_conditions_at_model(s, m);
    CHECK(!res.ok);
    CHECK(res.rows[1].alpha == 1);
    CHECK(res.rows[1].rank == 0);
  }
  SECTION("too many free feedthroughs fail the count") {
    auto s = ModelSetStructure::make(2, 1, 0);
    s.Gpat[0][1] = EntryPattern::param(Properness::Proper);
    s.Rpat[0][0] = EntryPattern::param(Properness::Proper);
    s.Rpat[1][0] = EntryPattern::fixed_entry(Rat::one());
    Rng rng(3);
    auto m = instantiate(s, random_theta(s, rng), false);
    auto res = check_feedthrough_conditions_at_model(s, m);
    CHECK(!res.ok);
    CHECK(res.rows[0].alpha + res.rows[0].beta == 2);
    CHECK(!res.rows[0].count_ok);
  }
}

TEST_CASE("precondition route selection") {
  AnalyzeOptions opts;
  SECTION("strictly proper route") {
    auto r = precondition_route(example1_structure(), nullptr, opts);
    CHECK(r.ok);
    CHECK(r.kind == RouteKind::StrictlyProper);
  }
  SECTION("five-node network is strictly proper") {
    auto r = precondition_route(fivenode_structure(false), nullptr, opts);
    CHECK(r.ok);
    CHECK(r.kind == RouteKind::StrictlyProper);
  }
  SECTION("loop-free route for the closed loop") {
    auto s = closedloop_structure();
    auto m = instantiate(s, closedloop_theta());
    auto r = precondition_route(s, &m, opts);
    CHECK(r.ok);
    CHECK(r.kind == RouteKind::NoAlgebraicLoops);
    CHECK(r.noloop_order == std::vector<int>{1, 0});
  }
  SECTION("feedthrough-rank route when correlations forbid the loop-free one") {
    // one proper module, correlated noise feedthrough not asserted diagonal
    auto s = ModelSetStructure::make(2, 2, 2);
    s.Gpat[0][1] = EntryPattern::param(Properness::Proper);
    s.Rpat[0][0] = EntryPattern::fixed_entry(Rat::one());
    s.Rpat[1][1] = EntryPattern::fixed_entry(Rat::one());
    s.Hpat[0][0] = EntryPattern::param(Properness::Proper);
    s.Hpat[1][1] = EntryPattern::param(Properness::Proper);
    s.lambda_diagonal_feedthrough = false;
    auto r = precondition_route(s, nullptr, opts);
    CHECK(r.ok);
    CHECK(r.kind == RouteKind::FeedthroughRank);
  }
  SECTION("no route for a loop without excitation") {
    auto s = ModelSetStructure::make(2, 0, 2);
    s.Gpat[0][1] = EntryPattern::param(Properness::Proper);
    s.Gpat[1][0] = EntryPattern::param(Properness::Proper);
    s.Hpat[0][0] = EntryPattern::param(Properness::Proper);
    s.Hpat[1][1] = EntryPattern::param(Properness::Proper);
    auto r = precondition_route(s, nullptr, opts);
    CHECK(!r.ok);
    CHECK(r.kind == RouteKind::None);
    CHECK(!r.loop_cycle.empty());
  }
}

TEST_CASE("at-model verdicts for the 3-node benchmark") {
  Rat A = Rat::delay();
  Rat B = two_over_z();
  auto s = example1_structure();

  SECTION("identifiable at the chain system") {
    auto m = instantiate(s, s1_theta(A, B));
    auto rep = analyze(s, &m, Mode::AtModel);
    CHECK(rep.overall == Verdict::IdentifiableAtModel);
    for (const auto& row : rep.row_test.rows) {
      CHECK(row.count_ok);
      CHECK(row.rank == 2);
    }
  }
  SECTION("not identifiable at the alternative system") {
    auto m = instantiate(s, s2_theta(A, B));
    auto rep = analyze(s, &m, Mode::AtModel);
    CHECK(rep.overall == Verdict::NotIdentifiable);
    REQUIRE(rep.row_test.witness_row.has_value());
    CHECK(*rep.row_test.witness_row == 1);
    REQUIRE(rep.row_test.witness_singular_values.size() == 2);
    CHECK(rep.row_test.witness_singular_values[1] <
          1e-9 * rep.row_test.witness_singular_values[0]);
  }
  SECTION("restricting the model set flips the verdict") {
    auto sr = example1_structure(/*restrict_g21=*/true);
    auto m = instantiate(sr, s2_theta(A, B, /*restricted=*/true));
    auto rep = analyze(sr, &m, Mode::AtModel);
    CHECK(rep.overall == Verdict::IdentifiableAtModel);
  }
}

TEST_CASE("generic verdicts") {
  SECTION("unexcited five-node set is not identifiable (count fails)") {
    auto rep = analyze(fivenode_structure(false), nullptr, Mode::Generic);
    CHECK(rep.overall == Verdict::NotIdentifiable);
    CHECK(!rep.diagonalization.success);
    REQUIRE(rep.row_test.witness_row.has_value());
    CHECK(!rep.row_test.rows[0].count_ok);
  }
  SECTION("excited five-node set becomes generically identifiable") {
    auto rep = analyze(fivenode_structure(true), nullptr, Mode::Generic);
    CHECK(rep.overall == Verdict::GenericallyIdentifiable);
    CHECK(rep.diagonalization.success);
  }
  SECTION("3-node benchmark is generically identifiable as a structure") {
    auto rep = analyze(example1_structure(), nullptr, Mode::Generic);
    CHECK(rep.overall == Verdict::GenericallyIdentifiable);
  }
  SECTION("closed loop decided by the diagonalization certificate") {
    auto rep = analyze(closedloop_structure(), nullptr, Mode::Generic);
    CHECK(rep.overall == Verdict::GenericallyIdentifiable);
    CHECK(rep.diagonalization.success);
  }
  SECTION("verdicts stable across seeds") {
    for (uint64_t seed : {7ull, 99ull, 2026ull}) {
      AnalyzeOptions opts;
      opts.seed = seed;
      CHECK(analyze(fivenode_structure(false), nullptr, Mode::Generic, opts).overall ==
            Verdict::NotIdentifiable);
      CHECK(analyze(fivenode_structure(true), nullptr, Mode::Generic, opts).overall ==
            Verdict::GenericallyIdentifiable);
    }
  }
}

TEST_CASE("structurally zero row yields a confirmed generic NOT") {
  // Node 3 receives no input at all, so the test matrix of row 2 carries a
  // structurally zero row: structural rank 1 < 2 although the count passes.
  auto s = ModelSetStructure::make(3, 2, 0);
  s.Gpat[1][0] = EntryPattern::param(Properness::StrictlyProper);
  s.Gpat[1][2] = EntryPattern::param(Properness::StrictlyProper);
  s.Rpat[0][0] = EntryPattern::fixed_entry(Rat::one());
  s.Rpat[1][1] = EntryPattern::fixed_entry(Rat::one());
  auto rep = analyze(s, nullptr, Mode::Generic);
  CHECK(rep.overall == Verdict::NotIdentifiable);
  const auto& rec = rep.row_test.rows[1];
  CHECK(rec.count_ok);
  CHECK(rec.structural_rank < rec.required);
  REQUIRE(rep.row_test.witness_row.has_value());
  CHECK(*rep.row_test.witness_row == 1);
}

TEST_CASE("diagonalization success implies generic row-test success") {
  Rng rng(31);
  int done = 0;
  while (done < 40) {
    auto s = fixtures::random_structure(rng);
    if (!check_diagonalization(s).success) continue;
    if (!precondition_route(s, nullptr, AnalyzeOptions{}).ok) continue;
    ++done;
    auto res = check_row_rank_generic(s, AnalyzeOptions{});
    INFO("structure with L=" << s.L << " K=" << s.K << " p=" << s.p);
    CHECK(res.verdict == Verdict::GenericallyIdentifiable);
  }
}

TEST_CASE("verdicts invariant under consistent node renumbering") {
  // Swap the two noise-free nodes of the five-node set (block ordering kept).
  auto s = fivenode_structure(true);
  auto t = s;
  std::swap(t.Gpat[3], t.Gpat[4]);
  for (auto& row : t.Gpat) std::swap(row[3], row[4]);
  std::swap(t.Rpat[3], t.Rpat[4]);
  std::swap(t.Hpat[3], t.Hpat[4]);
  auto rep_s = analyze(s, nullptr, Mode::Generic);
  auto rep_t = analyze(t, nullptr, Mode::Generic);
  CHECK(rep_s.overall == rep_t.overall);
}
