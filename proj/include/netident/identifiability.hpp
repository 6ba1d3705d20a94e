#pragma once

#include "netident/graph.hpp"
#include "netident/model.hpp"
#include "netident/structure.hpp"

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace netident {

enum class Verdict { IdentifiableAtModel, GenericallyIdentifiable, NotIdentifiable, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::IdentifiableAtModel:
      return "IDENTIFIABLE_AT_MODEL";
    case Verdict::GenericallyIdentifiable:
      return "GENERICALLY_IDENTIFIABLE";
    case Verdict::NotIdentifiable:
      return "NOT_IDENTIFIABLE";
    case Verdict::Inconclusive:
      return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

enum class Mode { AtModel, Generic };

struct AnalyzeOptions {
  int trials = 8;
  uint64_t seed = 1;
  double rank_tol = kRankTol;
};

// ---------------------------------------------------------------------------
// Precondition routes: the three structural situations under which equality of
// the data objects reduces to equality of (T, Lambda).
// ---------------------------------------------------------------------------

/// True when no module can carry direct feedthrough anywhere in the set.
inline bool check_strictly_proper(const ModelSetStructure& s) {
  for (int i = 0; i < s.L; ++i)
    for (int j = 0; j < s.L; ++j)
      if (s.Gpat[size_t(i)][size_t(j)].can_have_feedthrough()) return false;
  return true;
}

/// Directed feedthrough graph: edge l -> j whenever module G[j][l] can have a
/// nonzero feedthrough term for some parameter value.
inline BoolMatrix feedthrough_graph(const ModelSetStructure& s) {
  BoolMatrix adj = bool_matrix(s.L, s.L);
  for (int j = 0; j < s.L; ++j)
    for (int l = 0; l < s.L; ++l)
      if (j != l && s.Gpat[size_t(j)][size_t(l)].can_have_feedthrough())
        adj[size_t(l)][size_t(j)] = true;
  return adj;
}

struct NoLoopResult {
  // Node order making the reordered feedthrough of G upper triangular
  // (receivers before senders); empty when a loop exists.
  std::optional<std::vector<int>> order;
  std::vector<int> cycle;  // one offending algebraic loop, node indices
};

/// An algebraic loop is a cycle of modules whose feedthroughs multiply to a
/// nonzero value. Absence of loops is certified by a node reordering.
inline NoLoopResult check_no_algebraic_loops(const ModelSetStructure& s) {
  // Order on the receiver->sender graph: an edge of G[j][l] demands that
  // receiver j precede sender l.
  BoolMatrix demand = bool_matrix(s.L, s.L);
  for (int j = 0; j < s.L; ++j)
    for (int l = 0; l < s.L; ++l)
      if (j != l && s.Gpat[size_t(j)][size_t(l)].can_have_feedthrough())
        demand[size_t(j)][size_t(l)] = true;
  NoLoopResult r;
  std::vector<int> cycle;
  auto order = topological_order(demand, &cycle);
  if (order)
    r.order = *order;
  else
    r.cycle = cycle;
  return r;
}

// ---------------------------------------------------------------------------
// Row permutations and test submatrices.
// ---------------------------------------------------------------------------

/// Column orderings for one row: P lists the module columns of row i with the
/// parameterized ones first; Q lists the input columns with the parameterized
/// ones last. Ties broken by ascending column index.
struct RowPermutations {
  int row = 0;
  std::vector<int> P;  // length L
  std::vector<int> Q;  // length K + p (or K for the feedthrough variant)
  int alpha = 0;       // parameterized module entries in row i
  int beta = 0;        // parameterized input entries in row i
};

inline RowPermutations build_row_permutations(const ModelSetStructure& s, int i) {
  RowPermutations rp;
  rp.row = i;
  for (int j = 0; j < s.L; ++j)
    if (s.Gpat[size_t(i)][size_t(j)].is_param()) rp.P.push_back(j);
  rp.alpha = int(rp.P.size());
  for (int j = 0; j < s.L; ++j)
    if (!s.Gpat[size_t(i)][size_t(j)].is_param()) rp.P.push_back(j);
  const int cols = s.K + s.p;
  std::vector<int> params;
  for (int c = 0; c < cols; ++c) {
    if (s.upat(i, c).is_param())
      params.push_back(c);
    else
      rp.Q.push_back(c);
  }
  rp.beta = int(params.size());
  rp.Q.insert(rp.Q.end(), params.begin(), params.end());
  return rp;
}

/// Same gathering at the feedthrough level: "parameterized" now means a free
/// feedthrough term, and the input side covers only the excitation columns.
inline RowPermutations build_row_permutations_feedthrough(const ModelSetStructure& s, int i) {
  RowPermutations rp;
  rp.row = i;
  for (int j = 0; j < s.L; ++j)
    if (s.Gpat[size_t(i)][size_t(j)].param_feedthrough()) rp.P.push_back(j);
  rp.alpha = int(rp.P.size());
  for (int j = 0; j < s.L; ++j)
    if (!s.Gpat[size_t(i)][size_t(j)].param_feedthrough()) rp.P.push_back(j);
  std::vector<int> params;
  for (int c = 0; c < s.K; ++c) {
    if (s.Rpat[size_t(i)][size_t(c)].param_feedthrough())
      params.push_back(c);
    else
      rp.Q.push_back(c);
  }
  rp.beta = int(params.size());
  rp.Q.insert(rp.Q.end(), params.begin(), params.end());
  return rp;
}

/// Submatrix of T that decides row i: rows are the module columns of row i
/// that are parameterized, columns are the input columns of row i that are
/// not. Dimensions alpha_i x (K + p - beta_i).
inline RMat row_test_matrix(const ModelSetStructure& s, const RMat& T, int i) {
  if (T.rows() != s.L || T.cols() != s.K + s.p)
    throw std::invalid_argument("transfer matrix has wrong dimensions");
  RowPermutations rp = build_row_permutations(s, i);
  std::vector<int> rows(rp.P.begin(), rp.P.begin() + rp.alpha);
  std::vector<int> cols(rp.Q.begin(), rp.Q.end() - rp.beta);
  return T.select(rows, cols);
}

/// Feedthrough-level variant over the excitation transfer only.
inline Eigen::MatrixXd row_test_matrix_inf(const ModelSetStructure& s,
                                           const Eigen::MatrixXd& Twr_inf, int i) {
  if (Twr_inf.rows() != s.L || Twr_inf.cols() != s.K)
    throw std::invalid_argument("feedthrough transfer matrix has wrong dimensions");
  RowPermutations rp = build_row_permutations_feedthrough(s, i);
  Eigen::MatrixXd out(rp.alpha, s.K - rp.beta);
  for (int a = 0; a < rp.alpha; ++a)
    for (int b = 0; b < s.K - rp.beta; ++b) out(a, b) = Twr_inf(rp.P[size_t(a)], rp.Q[size_t(b)]);
  return out;
}

inline int real_matrix_rank(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * sv(0)) ++rank;
  return rank;
}

// ---------------------------------------------------------------------------
// Feedthrough conditions (the route that tolerates algebraic loops).
// ---------------------------------------------------------------------------

struct FeedthroughRowCheck {
  int row = 0;
  int alpha = 0;  // parameterized feedthroughs among the modules of row i
  int beta = 0;   // parameterized feedthroughs among the excitations of row i
  bool count_ok = false;
  int rank = 0;
  int required = 0;
  bool ok() const { return count_ok && rank == required; }
};

struct FeedthroughCheckResult {
  bool ok = false;
  std::vector<FeedthroughRowCheck> rows;
  std::string note;
};

/// Per-row feedthrough conditions evaluated on a concrete excitation
/// feedthrough matrix: at most K free feedthroughs per row, and each
/// feedthrough-level test matrix of full row rank.
inline FeedthroughCheckResult check_feedthrough_conditions(const ModelSetStructure& s,
                                                           const Eigen::MatrixXd& Twr_inf,
                                                           double tol = kRankTol) {
  FeedthroughCheckResult res;
  res.ok = true;
  for (int i = 0; i < s.L; ++i) {
    RowPermutations rp = build_row_permutations_feedthrough(s, i);
    FeedthroughRowCheck row;
    row.row = i;
    row.alpha = rp.alpha;
    row.beta = rp.beta;
    row.count_ok = rp.alpha + rp.beta <= s.K;
    row.required = rp.alpha;
    row.rank = real_matrix_rank(row_test_matrix_inf(s, Twr_inf, i), tol);
    if (!row.ok()) res.ok = false;
    res.rows.push_back(row);
  }
  return res;
}

inline FeedthroughCheckResult check_feedthrough_conditions_at_model(const ModelSetStructure& s,
                                                                    const NetworkModel& m,
                                                                    double tol = kRankTol) {
  return check_feedthrough_conditions(s, feedthrough_matrices(m).Twr_inf, tol);
}

// ---------------------------------------------------------------------------
// Numeric sampling of the parameter distribution. Generic-mode verdicts are
// rank decisions at evaluation points, so the sampled instantiations are
// evaluated directly in floating point; exact arithmetic is reserved for
// at-model analysis and for confirming deficiency witnesses.
// ---------------------------------------------------------------------------

namespace detail {

struct SampledCell {
  enum class Kind { Zero, Fixed, FirstOrder } kind = Kind::Zero;
  Rat fixed;                    // Kind::Fixed
  double c = 0, a = 0, d = 0;   // Kind::FirstOrder: c/(z - a) + d

  std::complex<double> eval(const std::complex<double>& z) const {
    switch (kind) {
      case Kind::Zero:
        return {0.0, 0.0};
      case Kind::Fixed:
        return fixed.evaluate(z);
      case Kind::FirstOrder:
        return std::complex<double>(c, 0.0) / (z - std::complex<double>(a, 0.0)) + d;
    }
    return {0.0, 0.0};
  }

  double feedthrough() const {
    switch (kind) {
      case Kind::Zero:
        return 0.0;
      case Kind::Fixed:
        return fixed.feedthrough().convert_to<double>();
      case Kind::FirstOrder:
        return d;
    }
    return 0.0;
  }

  bool near_pole(const std::complex<double>& z) const {
    return kind == Kind::Fixed && fixed.near_pole(z);
  }
};

struct NumericInstance {
  int L = 0, K = 0, p = 0;
  std::vector<SampledCell> G;  // L x L row-major
  std::vector<SampledCell> U;  // L x (K+p) row-major

  const SampledCell& g(int i, int j) const { return G[size_t(i) * size_t(L) + size_t(j)]; }
  const SampledCell& u(int i, int c) const { return U[size_t(i) * size_t(K + p) + size_t(c)]; }

  Eigen::MatrixXcd eval_G(const std::complex<double>& z) const {
    Eigen::MatrixXcd m(L, L);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) m(i, j) = g(i, j).eval(z);
    return m;
  }
  Eigen::MatrixXcd eval_U(const std::complex<double>& z) const {
    Eigen::MatrixXcd m(L, K + p);
    for (int i = 0; i < L; ++i)
      for (int c = 0; c < K + p; ++c) m(i, c) = u(i, c).eval(z);
    return m;
  }
  bool near_pole(const std::complex<double>& z) const {
    for (const auto& cell : G)
      if (cell.near_pole(z)) return true;
    for (const auto& cell : U)
      if (cell.near_pole(z)) return true;
    return false;
  }
  Eigen::MatrixXd Ginf() const {
    Eigen::MatrixXd m(L, L);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) m(i, j) = g(i, j).feedthrough();
    return m;
  }
  Eigen::MatrixXd Rinf() const {
    Eigen::MatrixXd m(L, K);
    for (int i = 0; i < L; ++i)
      for (int c = 0; c < K; ++c) m(i, c) = u(i, c).feedthrough();
    return m;
  }
};

inline SampledCell sample_cell(const EntryPattern& e, bool monic, Rng& rng) {
  SampledCell cell;
  switch (e.kind) {
    case EntryPattern::Kind::Zero:
      break;
    case EntryPattern::Kind::Fixed:
      cell.kind = SampledCell::Kind::Fixed;
      cell.fixed = e.fixed;
      break;
    case EntryPattern::Kind::Param:
      cell.kind = SampledCell::Kind::FirstOrder;
      cell.c = rng.sign() * rng.uniform(0.5, 2.0);
      cell.a = rng.uniform(-0.9, 0.9);
      cell.d = monic ? 1.0
                     : (e.properness == Properness::Proper ? rng.uniform(0.5, 2.0) : 0.0);
      break;
  }
  return cell;
}

inline NumericInstance sample_numeric_instance(const ModelSetStructure& s, Rng& rng) {
  NumericInstance inst;
  inst.L = s.L;
  inst.K = s.K;
  inst.p = s.p;
  inst.G.resize(size_t(s.L) * size_t(s.L));
  inst.U.resize(size_t(s.L) * size_t(s.K + s.p));
  for (int i = 0; i < s.L; ++i)
    for (int j = 0; j < s.L; ++j)
      inst.G[size_t(i) * size_t(s.L) + size_t(j)] =
          sample_cell(s.Gpat[size_t(i)][size_t(j)], false, rng);
  for (int i = 0; i < s.L; ++i)
    for (int c = 0; c < s.K + s.p; ++c)
      inst.U[size_t(i) * size_t(s.K + s.p) + size_t(c)] =
          sample_cell(s.upat(i, c), s.h_diagonal_pos(i, c), rng);
  return inst;
}

}  // namespace detail

/// Generic variant: samples random instantiations and requires the conditions
/// to hold on every sample.
inline FeedthroughCheckResult check_feedthrough_conditions_generic(const ModelSetStructure& s,
                                                                   const AnalyzeOptions& opts) {
  Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
  FeedthroughCheckResult agg;
  int budget = opts.trials * 8;
  for (int t = 0; t < opts.trials; ++t) {
    for (;;) {
      if (budget-- <= 0) {
        agg.ok = false;
        agg.note = "could not sample a well-posed instantiation";
        return agg;
      }
      auto inst = detail::sample_numeric_instance(s, rng);
      Eigen::MatrixXd ig = Eigen::MatrixXd::Identity(s.L, s.L) - inst.Ginf();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(ig);
      if (!lu.isInvertible()) continue;
      Eigen::MatrixXd twr_inf = lu.solve(inst.Rinf());
      auto res = check_feedthrough_conditions(s, twr_inf, opts.rank_tol);
      if (t == 0) agg = res;
      if (!res.ok) return res;
      break;
    }
  }
  agg.ok = true;
  return agg;
}

// ---------------------------------------------------------------------------
// Route selection.
// ---------------------------------------------------------------------------

enum class RouteKind { StrictlyProper, NoAlgebraicLoops, FeedthroughRank, None };

inline std::string to_string(RouteKind k) {
  switch (k) {
    case RouteKind::StrictlyProper:
      return "strictly_proper";
    case RouteKind::NoAlgebraicLoops:
      return "no_algebraic_loops";
    case RouteKind::FeedthroughRank:
      return "feedthrough_rank";
    case RouteKind::None:
      return "none";
  }
  return "none";
}

struct RouteResult {
  RouteKind kind = RouteKind::None;
  bool ok = false;
  std::vector<int> noloop_order;
  std::vector<int> loop_cycle;
  std::optional<FeedthroughCheckResult> feedthrough;
  std::vector<std::string> notes;
};

/// Picks the first structural situation that justifies deciding
/// identifiability through (T, Lambda): all modules strictly proper; or no
/// algebraic loops with diagonal noise feedthrough; or the per-row
/// feedthrough rank conditions.
inline RouteResult precondition_route(const ModelSetStructure& s, const NetworkModel* m,
                                      const AnalyzeOptions& opts = {}) {
  RouteResult r;
  if (check_strictly_proper(s)) {
    r.kind = RouteKind::StrictlyProper;
    r.ok = true;
    return r;
  }
  auto noloop = check_no_algebraic_loops(s);
  if (noloop.order) {
    if (s.lambda_diagonal_feedthrough) {
      bool diag_ok = true;
      if (m && m->p > 0) {
        Eigen::MatrixXd phi = m->H.feedthrough() * m->Lambda * m->H.feedthrough().transpose();
        double scale = std::max(1.0, phi.cwiseAbs().maxCoeff());
        Eigen::MatrixXd off = phi - Eigen::MatrixXd(phi.diagonal().asDiagonal());
        if (off.cwiseAbs().maxCoeff() > 1e-9 * scale) {
          diag_ok = false;
          r.notes.push_back("model contradicts the diagonal noise feedthrough assertion");
        }
      }
      if (diag_ok) {
        r.kind = RouteKind::NoAlgebraicLoops;
        r.ok = true;
        r.noloop_order = *noloop.order;
        return r;
      }
    } else {
      r.notes.push_back("no algebraic loops, but diagonal noise feedthrough is not asserted");
    }
  } else {
    std::string cyc = "algebraic loop through nodes";
    for (int v : noloop.cycle) cyc += " w" + std::to_string(v + 1);
    r.notes.push_back(cyc);
    r.loop_cycle = noloop.cycle;
  }
  FeedthroughCheckResult fc = m ? check_feedthrough_conditions_at_model(s, *m, opts.rank_tol)
                                : check_feedthrough_conditions_generic(s, opts);
  if (fc.ok) {
    r.kind = RouteKind::FeedthroughRank;
    r.ok = true;
    r.feedthrough = fc;
    return r;
  }
  r.feedthrough = fc;
  r.notes.push_back("feedthrough count/rank conditions fail");
  r.kind = RouteKind::None;
  r.ok = false;
  return r;
}

// ---------------------------------------------------------------------------
// Diagonalization test: a parameter-independent column selection that gives
// every node its own structurally exclusive input.
// ---------------------------------------------------------------------------

struct DiagonalizationResult {
  bool success = false;
  std::vector<int> assignment;  // row -> input column, 0-based; empty on failure
  std::string note;
};

/// Searches for L distinct input columns, one per node, each structurally
/// nonzero in its node's row and structurally zero in every other row
/// (the column-permutation family of diagonalizing transformations).
/// Success is a sufficient certificate for generic identifiability of the
/// whole set; failure is not a proof of the opposite.
inline DiagonalizationResult check_diagonalization(const ModelSetStructure& s) {
  const int cols = s.K + s.p;
  BoolMatrix usable = bool_matrix(s.L, cols);
  for (int c = 0; c < cols; ++c) {
    int nonzero_row = -1;
    int nonzero_count = 0;
    for (int i = 0; i < s.L; ++i)
      if (s.upat(i, c).struct_nonzero()) {
        nonzero_row = i;
        ++nonzero_count;
      }
    if (nonzero_count == 1) usable[size_t(nonzero_row)][size_t(c)] = true;
  }
  Matching match = max_bipartite_matching(usable, cols);
  DiagonalizationResult res;
  if (match.size == s.L) {
    res.success = true;
    res.assignment = match.row_to_col;
  } else {
    res.note = "no exclusive input column for";
    for (int i = 0; i < s.L; ++i)
      if (match.row_to_col[size_t(i)] < 0) res.note += " w" + std::to_string(i + 1);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Per-row count and rank test (the decisive criterion).
// ---------------------------------------------------------------------------

struct RowRankRecord {
  int row = 0;
  int alpha = 0;
  int beta = 0;
  bool count_ok = false;
  int rank = 0;
  int required = 0;
  bool ok = false;
  // generic-mode diagnostics
  int trials = 0;
  int deficient_trials = 0;
  int structural_rank = -1;
  bool exact_deficiency = false;
};

struct RowRankTestResult {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<RowRankRecord> rows;
  std::optional<int> witness_row;
  std::vector<double> witness_singular_values;
  std::string witness_text;
  std::vector<std::string> notes;
};

namespace detail {

// Structural nonzero pattern of T = (I - G)^{-1} [R H]: entry (j, c) can be
// nonzero iff some node l with a structurally nonzero input U[l][c] reaches j
// through structurally nonzero modules.
inline BoolMatrix transfer_pattern(const ModelSetStructure& s) {
  BoolMatrix edges = bool_matrix(s.L, s.L);  // edges[l][j]: l -> j
  for (int j = 0; j < s.L; ++j)
    for (int l = 0; l < s.L; ++l)
      if (j != l && s.Gpat[size_t(j)][size_t(l)].struct_nonzero())
        edges[size_t(l)][size_t(j)] = true;
  BoolMatrix reach = reachability_closure(edges);
  const int cols = s.K + s.p;
  BoolMatrix pat = bool_matrix(s.L, cols);
  for (int j = 0; j < s.L; ++j)
    for (int c = 0; c < cols; ++c) {
      for (int l = 0; l < s.L && !pat[size_t(j)][size_t(c)]; ++l)
        if (reach[size_t(j)][size_t(l)] && s.upat(l, c).struct_nonzero())
          pat[size_t(j)][size_t(c)] = true;
    }
  return pat;
}

inline BoolMatrix row_test_pattern(const ModelSetStructure& s, const BoolMatrix& tpat, int i) {
  RowPermutations rp = build_row_permutations(s, i);
  BoolMatrix out = bool_matrix(rp.alpha, s.K + s.p - rp.beta);
  for (int a = 0; a < rp.alpha; ++a)
    for (size_t b = 0; b + size_t(rp.beta) < rp.Q.size(); ++b)
      out[size_t(a)][b] = tpat[size_t(rp.P[size_t(a)])][size_t(rp.Q[b])];
  return out;
}

// Exact rank through minors, exponential; used only to confirm deficiency on
// small test matrices before declaring non-identifiability.
inline int exact_rank_minors(const RMat& m) {
  int maxk = std::min(m.rows(), m.cols());
  auto det_rec = [](auto&& self, const RMat& a) -> Rat {
    int n = a.rows();
    if (n == 1) return a.at(0, 0);
    Rat acc;
    for (int j = 0; j < n; ++j) {
      if (a.at(0, j).is_zero()) continue;
      std::vector<int> rows, cols;
      for (int i = 1; i < n; ++i) rows.push_back(i);
      for (int c = 0; c < n; ++c)
        if (c != j) cols.push_back(c);
      Rat term = a.at(0, j) * self(self, a.select(rows, cols));
      acc = (j % 2 == 0) ? acc + term : acc - term;
    }
    return acc;
  };
  for (int k = maxk; k >= 1; --k) {
    std::vector<int> rsel(static_cast<size_t>(k));
    std::vector<int> csel(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) rsel[size_t(i)] = i;
    for (;;) {
      for (int i = 0; i < k; ++i) csel[size_t(i)] = i;
      for (;;) {
        if (!det_rec(det_rec, m.select(rsel, csel)).is_zero()) return k;
        int i = k - 1;
        while (i >= 0 && csel[size_t(i)] == m.cols() - k + i) --i;
        if (i < 0) break;
        ++csel[size_t(i)];
        for (int j = i + 1; j < k; ++j) csel[size_t(j)] = csel[size_t(j - 1)] + 1;
      }
      int i = k - 1;
      while (i >= 0 && rsel[size_t(i)] == m.rows() - k + i) --i;
      if (i < 0) break;
      ++rsel[size_t(i)];
      for (int j = i + 1; j < k; ++j) rsel[size_t(j)] = rsel[size_t(j - 1)] + 1;
    }
  }
  return 0;
}

inline std::string render_matrix(const RMat& m) {
  std::ostringstream os;
  for (int i = 0; i < m.rows(); ++i) {
    os << (i == 0 ? "[" : " ");
    for (int j = 0; j < m.cols(); ++j) os << (j ? ", " : "[") << m.at(i, j).to_string();
    os << "]" << (i + 1 == m.rows() ? "]" : "\n");
  }
  return os.str();
}

}  // namespace detail

/// Decides identifiability at one concrete model: every row must have at most
/// K + p parameterized entries and a full-row-rank test matrix. Necessary and
/// sufficient under independent, unrestricted parameterization.
inline RowRankTestResult check_row_rank_at_model(const ModelSetStructure& s,
                                                 const NetworkModel& m,
                                                 const AnalyzeOptions& opts = {}) {
  RowRankTestResult res;
  RMat T = network_transfer(m);
  bool all_ok = true;
  for (int i = 0; i < s.L; ++i) {
    RowPermutations rp = build_row_permutations(s, i);
    RowRankRecord rec;
    rec.row = i;
    rec.alpha = rp.alpha;
    rec.beta = rp.beta;
    rec.count_ok = rp.alpha + rp.beta <= s.K + s.p;
    rec.required = rp.alpha;
    RMat ti = row_test_matrix(s, T, i);
    auto info = normal_rank_info(ti, opts.trials, opts.seed + uint64_t(i) * 1315423911ull,
                                 opts.rank_tol);
    rec.rank = info.rank;
    rec.ok = rec.count_ok && rec.rank == rec.required;
    if (!rec.ok && all_ok) {
      all_ok = false;
      res.witness_row = i;
      res.witness_singular_values = info.singular_values;
      res.witness_text = detail::render_matrix(ti);
    }
    res.rows.push_back(rec);
  }
  res.verdict = all_ok ? Verdict::IdentifiableAtModel : Verdict::NotIdentifiable;
  return res;
}

/// Generic-mode test: samples random instantiations of the parameterized
/// entries. Full rank on every sample certifies the verdict on a dense open
/// parameter set (reported as GENERICALLY_IDENTIFIABLE, not as a universal
/// certificate). A NOT verdict additionally requires the deficiency to be
/// structural or exactly confirmed on a sample, so an unlucky draw can never
/// produce a false negative.
inline RowRankTestResult check_row_rank_generic(const ModelSetStructure& s,
                                                const AnalyzeOptions& opts = {}) {
  RowRankTestResult res;
  Rng rng(opts.seed);
  BoolMatrix tpat = detail::transfer_pattern(s);

  res.rows.resize(size_t(s.L));
  for (int i = 0; i < s.L; ++i) {
    RowPermutations rp = build_row_permutations(s, i);
    RowRankRecord& rec = res.rows[size_t(i)];
    rec.row = i;
    rec.alpha = rp.alpha;
    rec.beta = rp.beta;
    rec.count_ok = rp.alpha + rp.beta <= s.K + s.p;
    rec.required = rp.alpha;
    rec.structural_rank =
        structural_rank(detail::row_test_pattern(s, tpat, i), s.K + s.p - rp.beta);
  }

  // Row-test ranks for each sampled instantiation, evaluated numerically:
  // T(z) = (I - G(z))^{-1} U(z) at random points on the evaluation circle,
  // rank as the maximum over the points.
  std::vector<std::vector<int>> row_cols(size_t(s.L));
  std::vector<std::vector<int>> row_rows(size_t(s.L));
  for (int i = 0; i < s.L; ++i) {
    RowPermutations rp = build_row_permutations(s, i);
    row_rows[size_t(i)].assign(rp.P.begin(), rp.P.begin() + rp.alpha);
    row_cols[size_t(i)].assign(rp.Q.begin(), rp.Q.end() - rp.beta);
  }

  int sampled = 0;
  int budget = opts.trials * 8;
  std::vector<uint64_t> deficient_sample_seed(size_t(s.L), 0);
  while (sampled < opts.trials) {
    if (budget-- <= 0) {
      res.notes.push_back("could not sample enough well-posed instantiations");
      res.verdict = Verdict::Inconclusive;
      return res;
    }
    uint64_t sample_seed = rng.next_u64();
    Rng sample_rng(sample_seed);
    auto inst = detail::sample_numeric_instance(s, sample_rng);
    std::vector<int> sample_rank(size_t(s.L), 0);
    int points = 0;
    int point_budget = opts.trials * 16;
    bool ill_posed = false;
    while (points < opts.trials) {
      if (point_budget-- <= 0) {
        ill_posed = true;
        break;
      }
      std::complex<double> z = std::polar(kEvalRadius, 2.0 * M_PI * sample_rng.uniform01());
      if (inst.near_pole(z)) continue;
      Eigen::MatrixXcd ig = Eigen::MatrixXcd::Identity(s.L, s.L) - inst.eval_G(z);
      Eigen::FullPivLU<Eigen::MatrixXcd> lu(ig);
      if (!lu.isInvertible()) continue;
      Eigen::MatrixXcd tz = lu.solve(inst.eval_U(z));
      ++points;
      for (int i = 0; i < s.L; ++i) {
        const auto& rr = row_rows[size_t(i)];
        const auto& rc = row_cols[size_t(i)];
        if (rr.empty() || rc.empty()) continue;
        Eigen::MatrixXcd sub(rr.size(), rc.size());
        for (size_t a = 0; a < rr.size(); ++a)
          for (size_t b = 0; b < rc.size(); ++b) sub(long(a), long(b)) = tz(rr[a], rc[b]);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(sub);
        const auto& sv = svd.singularValues();
        int rank = 0;
        if (sv.size() > 0 && sv(0) > 0.0)
          for (int k = 0; k < sv.size(); ++k)
            if (sv(k) > opts.rank_tol * sv(0)) ++rank;
        sample_rank[size_t(i)] = std::max(sample_rank[size_t(i)], rank);
      }
    }
    if (ill_posed) continue;
    ++sampled;
    for (int i = 0; i < s.L; ++i) {
      RowRankRecord& rec = res.rows[size_t(i)];
      ++rec.trials;
      rec.rank = std::max(rec.rank, sample_rank[size_t(i)]);
      if (sample_rank[size_t(i)] < rec.required) {
        ++rec.deficient_trials;
        deficient_sample_seed[size_t(i)] = sample_seed;
      }
    }
  }

  // Exact test matrix from a grid-rational instantiation, used only to
  // confirm a deficiency before a NOT verdict.
  auto exact_row_test = [&](int i, uint64_t seed) -> std::optional<RMat> {
    Rng trng(seed ^ 0xabcdef123456789ull);
    for (int attempt = 0; attempt < 8; ++attempt) {
      auto theta = random_theta(s, trng);
      NetworkModel m = instantiate(s, theta, /*validate=*/false);
      try {
        RMat T = network_transfer(m);
        return row_test_matrix(s, T, i);
      } catch (const SingularMatrix&) {
        continue;
      } catch (const DegreeOverflow&) {
        return std::nullopt;
      }
    }
    return std::nullopt;
  };

  bool any_not = false, any_inconclusive = false;
  for (int i = 0; i < s.L; ++i) {
    RowRankRecord& rec = res.rows[size_t(i)];
    if (!rec.count_ok) {
      // The count condition is structural: it fails for every parameter value.
      rec.ok = false;
      any_not = true;
      if (!res.witness_row) {
        res.witness_row = i;
        res.witness_text = "row " + std::to_string(i + 1) + " has " +
                           std::to_string(rec.alpha + rec.beta) +
                           " parameterized entries for " + std::to_string(s.K + s.p) +
                           " inputs";
      }
      continue;
    }
    if (rec.deficient_trials == 0) {
      rec.ok = true;
      continue;
    }
    if (rec.deficient_trials == rec.trials) {
      // Deficient on every sample; confirm before declaring NOT.
      std::optional<RMat> ti;
      if (rec.structural_rank < rec.required) {
        rec.ok = false;
        any_not = true;
      } else if (rec.alpha <= 4 && s.K + s.p - rec.beta <= 6 &&
                 (ti = exact_row_test(i, deficient_sample_seed[size_t(i)])) &&
                 detail::exact_rank_minors(*ti) < rec.required) {
        rec.exact_deficiency = true;
        rec.ok = false;
        any_not = true;
      } else {
        rec.ok = false;
        any_inconclusive = true;
        res.notes.push_back("row " + std::to_string(i + 1) +
                            " deficient in all samples but not structurally confirmed");
        continue;
      }
      if (!res.witness_row) {
        res.witness_row = i;
        if (!ti) ti = exact_row_test(i, deficient_sample_seed[size_t(i)]);
        if (ti) {
          res.witness_text = detail::render_matrix(*ti);
          auto info = normal_rank_info(*ti, opts.trials, opts.seed, opts.rank_tol);
          res.witness_singular_values = info.singular_values;
        }
      }
    } else {
      rec.ok = false;
      any_inconclusive = true;
      res.notes.push_back("row " + std::to_string(i + 1) + " rank verdict unstable across samples");
    }
  }
  res.verdict = any_not               ? Verdict::NotIdentifiable
                : any_inconclusive    ? Verdict::Inconclusive
                                      : Verdict::GenericallyIdentifiable;
  return res;
}

// ---------------------------------------------------------------------------
// Composed analysis.
// ---------------------------------------------------------------------------

struct IdentifiabilityReport {
  Mode mode = Mode::Generic;
  AnalyzeOptions options;
  RouteResult route;
  DiagonalizationResult diagonalization;
  RowRankTestResult row_test;
  Verdict overall = Verdict::Inconclusive;
  std::vector<std::string> notes;
};

/// Runs the precondition routes, the diagonalization certificate and the
/// decisive per-row test, and merges the verdicts.
inline IdentifiabilityReport analyze(const ModelSetStructure& s, const NetworkModel* m,
                                     Mode mode, const AnalyzeOptions& opts = {}) {
  auto sviol = validate_structure(s);
  if (!sviol.empty())
    throw std::invalid_argument("invalid model set structure: " + sviol.front());
  if (mode == Mode::AtModel && !m)
    throw std::invalid_argument("at-model analysis requires a concrete model");

  IdentifiabilityReport rep;
  rep.mode = mode;
  rep.options = opts;
  rep.route = precondition_route(s, mode == Mode::AtModel ? m : nullptr, opts);
  rep.diagonalization = check_diagonalization(s);
  rep.notes.push_back(
      "parameterized entries are treated as independent and free within their properness class");
  if (s.p > 0 && s.p < s.L)
    rep.notes.push_back(
        "stable left invertibility of the rectangular noise filter is assumed, not verified");

  if (!rep.route.ok) {
    rep.overall = Verdict::Inconclusive;
    rep.notes.push_back("no precondition route applies; verdict inconclusive");
    return rep;
  }

  if (mode == Mode::AtModel) {
    rep.row_test = check_row_rank_at_model(s, *m, opts);
    rep.overall = rep.row_test.verdict;
    if (rep.diagonalization.success &&
        rep.row_test.verdict == Verdict::NotIdentifiable)
      rep.notes.push_back(
          "diagonalization certificate disagrees with the at-model rank test");
  } else {
    rep.row_test = check_row_rank_generic(s, opts);
    if (rep.row_test.verdict == Verdict::GenericallyIdentifiable) {
      rep.overall = Verdict::GenericallyIdentifiable;
    } else if (rep.row_test.verdict == Verdict::NotIdentifiable) {
      rep.overall = Verdict::NotIdentifiable;
      if (rep.diagonalization.success)
        rep.notes.push_back(
            "diagonalization certificate disagrees with the generic rank test");
    } else if (rep.diagonalization.success) {
      rep.overall = Verdict::GenericallyIdentifiable;
      rep.notes.push_back("decided by the diagonalization certificate");
    } else {
      rep.overall = Verdict::Inconclusive;
    }
  }
  return rep;
}

}  // namespace netident
