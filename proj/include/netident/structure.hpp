#pragma once

#include "netident/model.hpp"
#include "netident/rng.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace netident {

enum class Properness { Proper, StrictlyProper };

/// One cell of a parameterized matrix: fixed to zero, fixed to a concrete
/// rational function, or an independently parameterized unknown.
struct EntryPattern {
  enum class Kind { Zero, Fixed, Param };
  Kind kind = Kind::Zero;
  Rat fixed;
  Properness properness = Properness::Proper;

  static EntryPattern zero() { return {}; }
  static EntryPattern fixed_entry(Rat r) {
    EntryPattern e;
    e.kind = r.is_zero() ? Kind::Zero : Kind::Fixed;
    e.fixed = std::move(r);
    return e;
  }
  static EntryPattern param(Properness p = Properness::Proper) {
    EntryPattern e;
    e.kind = Kind::Param;
    e.properness = p;
    return e;
  }

  bool is_zero() const { return kind == Kind::Zero; }
  bool is_param() const { return kind == Kind::Param; }
  bool is_fixed() const { return kind == Kind::Fixed; }

  // Structurally nonzero: can be nonzero for some (generic) parameter value.
  bool struct_nonzero() const { return kind != Kind::Zero; }

  // Whether the entry's feedthrough term is free (parameterized at infinity).
  bool param_feedthrough() const {
    return kind == Kind::Param && properness == Properness::Proper;
  }

  // Whether the entry can contribute a nonzero direct feedthrough at all.
  bool can_have_feedthrough() const {
    switch (kind) {
      case Kind::Zero:
        return false;
      case Kind::Fixed:
        return fixed.is_proper() && fixed.feedthrough() != 0;
      case Kind::Param:
        return properness == Properness::Proper;
    }
    return false;
  }
};

using PatternGrid = std::vector<std::vector<EntryPattern>>;

enum class LambdaKind { Fixed, Param };

/// The parameterized model set: per-entry tags for G, R, H plus the noise
/// covariance description. Node ordering follows the convention that the
/// first p nodes carry the full-rank noise block.
struct ModelSetStructure {
  int L = 0;
  int K = 0;
  int p = 0;
  PatternGrid Gpat, Rpat, Hpat;
  // Asserts that H(inf) Lambda H(inf)^T is diagonal for every model in the set.
  bool lambda_diagonal_feedthrough = false;
  LambdaKind lambda_kind = LambdaKind::Param;
  Eigen::MatrixXd lambda_fixed;

  static ModelSetStructure make(int L, int K, int p) {
    ModelSetStructure s;
    s.L = L;
    s.K = K;
    s.p = p;
    s.Gpat.assign(size_t(L), std::vector<EntryPattern>(size_t(L)));
    s.Rpat.assign(size_t(L), std::vector<EntryPattern>(size_t(K)));
    s.Hpat.assign(size_t(L), std::vector<EntryPattern>(size_t(p)));
    return s;
  }

  // Pattern of U = [R H], row-major per row.
  const EntryPattern& upat(int i, int c) const {
    return c < K ? Rpat[size_t(i)][size_t(c)] : Hpat[size_t(i)][size_t(c - K)];
  }

  bool h_diagonal_pos(int i, int c) const { return c >= K && (c - K) == i; }

  int count_params() const {
    int n = 0;
    for (const auto* grid : {&Gpat, &Rpat, &Hpat})
      for (const auto& row : *grid)
        for (const auto& e : row)
          if (e.is_param()) ++n;
    return n;
  }
};

/// Structural invariants of a model set. Returns human-readable violations.
inline std::vector<std::string> validate_structure(const ModelSetStructure& s) {
  std::vector<std::string> v;
  if (s.L < 1 || s.K < 0 || s.p < 0 || s.p > s.L) {
    v.push_back("inconsistent dimensions (need L >= 1, 0 <= p <= L, K >= 0)");
    return v;
  }
  auto grid_ok = [&](const PatternGrid& g, int rows, int cols) {
    if (int(g.size()) != rows) return false;
    for (const auto& row : g)
      if (int(row.size()) != cols) return false;
    return true;
  };
  if (!grid_ok(s.Gpat, s.L, s.L) || !grid_ok(s.Rpat, s.L, s.K) || !grid_ok(s.Hpat, s.L, s.p)) {
    v.push_back("pattern grid dimensions do not match L, K, p");
    return v;
  }
  for (int i = 0; i < s.L; ++i)
    if (!s.Gpat[size_t(i)][size_t(i)].is_zero())
      v.push_back("G diagonal must be zero: G[" + std::to_string(i + 1) + "][" +
                  std::to_string(i + 1) + "]");
  for (int i = 0; i < s.L; ++i)
    for (int j = 0; j < s.L; ++j) {
      const auto& e = s.Gpat[size_t(i)][size_t(j)];
      if (e.is_fixed() && !e.fixed.is_proper())
        v.push_back("fixed G entry must be proper: G[" + std::to_string(i + 1) + "][" +
                    std::to_string(j + 1) + "]");
    }
  // Upper p x p block of H behaves as a monic square filter.
  for (int i = 0; i < s.p; ++i)
    for (int j = 0; j < s.p; ++j) {
      const auto& e = s.Hpat[size_t(i)][size_t(j)];
      std::string name = "H[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]";
      if (i == j) {
        if (e.is_zero()) v.push_back("monic H diagonal cannot be zero: " + name);
        if (e.is_fixed() && (!e.fixed.is_proper() || e.fixed.feedthrough() != 1))
          v.push_back("fixed H diagonal must have feedthrough 1: " + name);
        if (e.is_param() && e.properness != Properness::Proper)
          v.push_back("H diagonal parameters are monic; use the proper class: " + name);
      } else {
        if (e.is_fixed() && (!e.fixed.is_proper() || e.fixed.feedthrough() != 0))
          v.push_back("off-diagonal upper H must be strictly proper: " + name);
        if (e.is_param() && e.properness != Properness::StrictlyProper)
          v.push_back("off-diagonal upper H parameters must be strictly proper: " + name);
      }
    }
  if (s.lambda_kind == LambdaKind::Fixed) {
    if (s.lambda_fixed.rows() != s.p || s.lambda_fixed.cols() != s.p)
      v.push_back("fixed Lambda must be p x p");
    else if (s.p > 0) {
      if (!s.lambda_fixed.isApprox(s.lambda_fixed.transpose(), 1e-12))
        v.push_back("fixed Lambda must be symmetric");
      else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.lambda_fixed);
        if (es.eigenvalues().minCoeff() <= 0.0)
          v.push_back("fixed Lambda must be positive definite");
      }
    }
  }
  if (s.lambda_diagonal_feedthrough) {
    // The diagonal-feedthrough assertion forces zero feedthrough in H_b and a
    // diagonal covariance.
    for (int i = s.p; i < s.L; ++i)
      for (int j = 0; j < s.p; ++j) {
        const auto& e = s.Hpat[size_t(i)][size_t(j)];
        if (e.param_feedthrough() ||
            (e.is_fixed() && e.fixed.is_proper() && e.fixed.feedthrough() != 0))
          v.push_back("diagonal noise feedthrough asserted but H[" + std::to_string(i + 1) +
                      "][" + std::to_string(j + 1) + "] can have feedthrough");
      }
    if (s.lambda_kind == LambdaKind::Fixed && s.p > 0 &&
        !s.lambda_fixed.isApprox(Eigen::MatrixXd(s.lambda_fixed.diagonal().asDiagonal()), 1e-12))
      v.push_back("diagonal noise feedthrough asserted but fixed Lambda is not diagonal");
  }
  return v;
}

struct ParamPos {
  char matrix = 'G';  // 'G', 'R' or 'H'
  int row = 0;
  int col = 0;
  auto operator<=>(const ParamPos&) const = default;
};

inline std::string to_string(const ParamPos& p) {
  return std::string(1, p.matrix) + "[" + std::to_string(p.row + 1) + "][" +
         std::to_string(p.col + 1) + "]";
}

/// Concrete values for every parameterized position (plus Lambda when it is
/// parameterized).
struct ThetaAssignment {
  std::map<ParamPos, Rat> entries;
  std::optional<Eigen::MatrixXd> lambda;
};

class InstantiationError : public std::runtime_error {
 public:
  explicit InstantiationError(const std::string& what) : std::runtime_error(what) {}
};

inline std::vector<ParamPos> param_positions(const ModelSetStructure& s) {
  std::vector<ParamPos> out;
  auto walk = [&](char name, const PatternGrid& g) {
    for (int i = 0; i < int(g.size()); ++i)
      for (int j = 0; j < int(g[size_t(i)].size()); ++j)
        if (g[size_t(i)][size_t(j)].is_param()) out.push_back({name, i, j});
  };
  walk('G', s.Gpat);
  walk('R', s.Rpat);
  walk('H', s.Hpat);
  return out;
}

namespace detail {

inline void check_assignment_class(const ModelSetStructure& s, const ParamPos& pos,
                                   const Rat& value) {
  const EntryPattern& e = pos.matrix == 'G'   ? s.Gpat[size_t(pos.row)][size_t(pos.col)]
                          : pos.matrix == 'R' ? s.Rpat[size_t(pos.row)][size_t(pos.col)]
                                              : s.Hpat[size_t(pos.row)][size_t(pos.col)];
  if (!value.is_proper())
    throw InstantiationError("assignment for " + to_string(pos) + " is improper");
  if (e.properness == Properness::StrictlyProper && !value.is_strictly_proper())
    throw InstantiationError("assignment for " + to_string(pos) +
                             " must be strictly proper");
  if (pos.matrix == 'H' && pos.row == pos.col && value.feedthrough() != 1)
    throw InstantiationError("assignment for monic position " + to_string(pos) +
                             " must have feedthrough 1");
}

}  // namespace detail

/// Builds the concrete model for a parameter assignment. Theta must cover the
/// parameterized positions exactly; the result is validated unless
/// `validate` is false (used by randomized sampling).
inline NetworkModel instantiate(const ModelSetStructure& s, const ThetaAssignment& theta,
                                bool validate = true) {
  auto viols = validate_structure(s);
  if (!viols.empty()) throw InstantiationError("invalid structure: " + viols.front());

  NetworkModel m = NetworkModel::make(s.L, s.K, s.p);
  size_t used = 0;
  auto fill = [&](char name, const PatternGrid& g, RMat& target) {
    for (int i = 0; i < int(g.size()); ++i)
      for (int j = 0; j < int(g[size_t(i)].size()); ++j) {
        const EntryPattern& e = g[size_t(i)][size_t(j)];
        switch (e.kind) {
          case EntryPattern::Kind::Zero:
            break;
          case EntryPattern::Kind::Fixed:
            target.at(i, j) = e.fixed;
            break;
          case EntryPattern::Kind::Param: {
            auto it = theta.entries.find({name, i, j});
            if (it == theta.entries.end())
              throw InstantiationError("missing assignment for " +
                                       to_string(ParamPos{name, i, j}));
            detail::check_assignment_class(s, it->first, it->second);
            target.at(i, j) = it->second;
            ++used;
            break;
          }
        }
      }
  };
  fill('G', s.Gpat, m.G);
  fill('R', s.Rpat, m.R);
  fill('H', s.Hpat, m.H);
  if (used != theta.entries.size())
    throw InstantiationError("theta assigns positions that are not parameterized");

  if (s.p > 0) {
    if (s.lambda_kind == LambdaKind::Fixed) {
      m.Lambda = s.lambda_fixed;
    } else {
      if (!theta.lambda)
        throw InstantiationError("Lambda is parameterized; theta must supply it");
      if (theta.lambda->rows() != s.p || theta.lambda->cols() != s.p)
        throw InstantiationError("theta Lambda has wrong dimensions");
      m.Lambda = *theta.lambda;
    }
  }

  if (validate) {
    auto model_viols = validate_model(m);
    if (!model_viols.empty()) {
      std::string msg = "instantiated model violates:";
      for (const auto& x : model_viols) msg += " " + x.code + "(" + x.detail + ")";
      throw InstantiationError(msg);
    }
  }
  return m;
}

/// Reads the parameter values back out of a concrete model that matches the
/// structure's fixed/zero pattern.
inline ThetaAssignment extract_theta(const ModelSetStructure& s, const NetworkModel& m) {
  ThetaAssignment theta;
  auto walk = [&](char name, const PatternGrid& g, const RMat& src) {
    for (int i = 0; i < int(g.size()); ++i)
      for (int j = 0; j < int(g[size_t(i)].size()); ++j)
        if (g[size_t(i)][size_t(j)].is_param())
          theta.entries[{name, i, j}] = src.at(i, j);
  };
  walk('G', s.Gpat, m.G);
  walk('R', s.Rpat, m.R);
  walk('H', s.Hpat, m.H);
  if (s.p > 0 && s.lambda_kind == LambdaKind::Param) theta.lambda = m.Lambda;
  return theta;
}

namespace detail {

// Exact rational on a 1/64 grid. Drawing raw doubles into exact arithmetic
// would drag 52-bit denominators through every gcd downstream.
inline Coeff sample_grid(Rng& rng, double lo, double hi) {
  long long n = llround(rng.uniform(lo, hi) * 64.0);
  long long lo_n = llround(lo * 64.0), hi_n = llround(hi * 64.0);
  n = std::min(std::max(n, lo_n), hi_n);
  return Coeff(n, 64);
}

}  // namespace detail

/// Random instantiation used for generic-mode sampling: every parameterized
/// entry becomes c/(z - a) with |c| in [0.5, 2], random sign, and a pole a in
/// (-0.9, 0.9); proper-class entries get an extra feedthrough in [0.5, 2],
/// monic positions a unit feedthrough.
inline ThetaAssignment random_theta(const ModelSetStructure& s, Rng& rng) {
  ThetaAssignment theta;
  for (const ParamPos& pos : param_positions(s)) {
    const EntryPattern& e = pos.matrix == 'G'   ? s.Gpat[size_t(pos.row)][size_t(pos.col)]
                            : pos.matrix == 'R' ? s.Rpat[size_t(pos.row)][size_t(pos.col)]
                                                : s.Hpat[size_t(pos.row)][size_t(pos.col)];
    Coeff c = Coeff(rng.sign() > 0 ? 1 : -1) * detail::sample_grid(rng, 0.5, 2.0);
    Coeff a = detail::sample_grid(rng, -0.875, 0.875);
    Rat value = first_order(c, a);
    if (pos.matrix == 'H' && pos.row == pos.col) {
      value = value + Rat::one();
    } else if (e.properness == Properness::Proper) {
      value = value + Rat::constant(detail::sample_grid(rng, 0.5, 2.0));
    }
    theta.entries[pos] = value;
  }
  if (s.p > 0 && s.lambda_kind == LambdaKind::Param) {
    Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(s.p, s.p);
    for (int i = 0; i < s.p; ++i) lam(i, i) = rng.uniform(0.5, 2.0);
    if (!s.lambda_diagonal_feedthrough && s.p > 1) {
      Eigen::MatrixXd a(s.p, s.p);
      for (int i = 0; i < s.p; ++i)
        for (int j = 0; j < s.p; ++j) a(i, j) = rng.gaussian() * 0.3;
      lam += a * a.transpose();
    }
    theta.lambda = lam;
  }
  return theta;
}

}  // namespace netident
