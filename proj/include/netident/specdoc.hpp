#pragma once

#include "netident/structure.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace netident {

class SpecParseError : public std::runtime_error {
 public:
  explicit SpecParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Parsed model-set document: the structure plus an optional concrete
/// parameter assignment for at-model analysis and simulation.
struct SpecDocument {
  ModelSetStructure structure;
  std::optional<ThetaAssignment> theta;
};

namespace detail {

using json = nlohmann::ordered_json;

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw SpecParseError(where + ": " + what);
}

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) fail(where, "unknown key '" + key + "'");
  }
}

// Exact scalar from a JSON number or string. Strings accept "p/q" and plain
// decimal notation; floating JSON numbers are converted exactly from their
// binary value.
inline Coeff parse_coeff(const json& v, const std::string& where) {
  namespace mp = boost::multiprecision;
  if (v.is_number_integer()) return Coeff(v.get<int64_t>());
  if (v.is_number_float()) return Coeff(v.get<double>());
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.empty()) fail(where, "empty coefficient string");
    auto slash = s.find('/');
    try {
      if (slash != std::string::npos) {
        mp::cpp_int num(s.substr(0, slash));
        mp::cpp_int den(s.substr(slash + 1));
        if (den == 0) fail(where, "zero denominator in '" + s + "'");
        return Coeff(num, den);
      }
      auto dot = s.find('.');
      if (dot == std::string::npos) return Coeff(mp::cpp_int(s), 1);
      std::string digits = s.substr(0, dot) + s.substr(dot + 1);
      size_t frac_len = s.size() - dot - 1;
      mp::cpp_int den = 1;
      for (size_t i = 0; i < frac_len; ++i) den *= 10;
      return Coeff(mp::cpp_int(digits), den);
    } catch (const std::exception&) {
      fail(where, "cannot parse coefficient '" + s + "'");
    }
  }
  fail(where, "coefficient must be a number or a string");
}

inline Poly parse_poly(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "coefficient list must be an array (ascending powers of z)");
  std::vector<Coeff> c;
  for (size_t i = 0; i < v.size(); ++i)
    c.push_back(parse_coeff(v[i], where + "[" + std::to_string(i) + "]"));
  return Poly(std::move(c));
}

inline Rat parse_rat(const json& v, const std::string& where) {
  if (!v.is_object()) fail(where, "expected an object with 'num' and 'den'");
  reject_unknown_keys(v, {"num", "den"}, where);
  if (!v.contains("num") || !v.contains("den")) fail(where, "needs both 'num' and 'den'");
  Poly num = parse_poly(v["num"], where + ".num");
  Poly den = parse_poly(v["den"], where + ".den");
  if (den.is_zero()) fail(where, "zero denominator polynomial");
  return Rat(num, den);
}

inline EntryPattern parse_cell(const json& v, const std::string& where) {
  if (v.is_string()) {
    if (v.get<std::string>() == "0") return EntryPattern::zero();
    fail(where, "string cells must be \"0\"");
  }
  if (v.is_number() && v.get<double>() == 0.0) return EntryPattern::zero();
  if (!v.is_object()) fail(where, "cell must be \"0\", {\"fixed\": ...} or {\"param\": ...}");
  reject_unknown_keys(v, {"fixed", "param"}, where);
  if (v.contains("fixed") == v.contains("param"))
    fail(where, "cell needs exactly one of 'fixed' or 'param'");
  if (v.contains("fixed")) return EntryPattern::fixed_entry(parse_rat(v["fixed"], where + ".fixed"));
  const json& p = v["param"];
  if (!p.is_object()) fail(where + ".param", "must be an object");
  reject_unknown_keys(p, {"properness"}, where + ".param");
  Properness prop = Properness::Proper;
  if (p.contains("properness")) {
    std::string cls = p["properness"].get<std::string>();
    if (cls == "strict")
      prop = Properness::StrictlyProper;
    else if (cls == "proper")
      prop = Properness::Proper;
    else
      fail(where + ".param.properness", "must be \"strict\" or \"proper\"");
  }
  return EntryPattern::param(prop);
}

inline PatternGrid parse_grid(const json& v, int rows, int cols, const std::string& name) {
  if (!v.is_array() || int(v.size()) != rows)
    fail(name, "must be an array of " + std::to_string(rows) + " rows");
  PatternGrid grid(size_t(rows));
  for (int i = 0; i < rows; ++i) {
    const json& row = v[size_t(i)];
    if (!row.is_array() || int(row.size()) != cols)
      fail(name + "[" + std::to_string(i + 1) + "]",
           "must be an array of " + std::to_string(cols) + " cells");
    for (int j = 0; j < cols; ++j)
      grid[size_t(i)].push_back(parse_cell(
          row[size_t(j)], name + "[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]"));
  }
  return grid;
}

inline Eigen::MatrixXd parse_real_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "must be a nonempty array of rows");
  int rows = int(v.size());
  int cols = int(v[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!v[size_t(i)].is_array() || int(v[size_t(i)].size()) != cols)
      fail(where, "rows must all have the same length");
    for (int j = 0; j < cols; ++j) {
      const json& x = v[size_t(i)][size_t(j)];
      if (!x.is_number()) fail(where, "entries must be numbers");
      m(i, j) = x.get<double>();
    }
  }
  return m;
}

}  // namespace detail

/// Strict parse of a model-set document. Unknown keys are rejected; messages
/// carry the JSON path (or the byte position for syntax errors).
inline SpecDocument parse_spec(const std::string& text) {
  using detail::fail;
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecParseError(std::string("syntax error: ") + e.what());
  }
  if (!doc.is_object()) fail("document", "must be a JSON object");
  detail::reject_unknown_keys(doc, {"version", "L", "K", "p", "G", "R", "H", "lambda", "theta"},
                              "document");
  for (const char* key : {"version", "L", "K", "p", "G", "R"})
    if (!doc.contains(key)) fail("document", std::string("missing key '") + key + "'");
  if (!doc["version"].is_number_integer() || doc["version"].get<int>() != 1)
    fail("version", "this tool reads version 1 documents");

  SpecDocument out;
  ModelSetStructure& s = out.structure;
  s.L = doc["L"].get<int>();
  s.K = doc["K"].get<int>();
  s.p = doc["p"].get<int>();
  if (s.L < 1 || s.K < 0 || s.p < 0 || s.p > s.L)
    fail("document", "need L >= 1, K >= 0 and 0 <= p <= L");

  s.Gpat = detail::parse_grid(doc["G"], s.L, s.L, "G");
  s.Rpat = detail::parse_grid(doc["R"], s.L, s.K, "R");
  if (s.p > 0) {
    if (!doc.contains("H")) fail("document", "p > 0 requires an H grid");
    s.Hpat = detail::parse_grid(doc["H"], s.L, s.p, "H");
    if (!doc.contains("lambda")) fail("document", "p > 0 requires a lambda description");
    const json& lam = doc["lambda"];
    detail::reject_unknown_keys(lam, {"fixed", "param"}, "lambda");
    if (lam.contains("fixed") == lam.contains("param"))
      fail("lambda", "needs exactly one of 'fixed' or 'param'");
    if (lam.contains("fixed")) {
      s.lambda_kind = LambdaKind::Fixed;
      s.lambda_fixed = detail::parse_real_matrix(lam["fixed"], "lambda.fixed");
      if (s.lambda_fixed.rows() != s.p || s.lambda_fixed.cols() != s.p)
        fail("lambda.fixed", "must be p x p");
    } else {
      s.lambda_kind = LambdaKind::Param;
      const json& lp = lam["param"];
      detail::reject_unknown_keys(lp, {"diagonal_feedthrough"}, "lambda.param");
      if (lp.contains("diagonal_feedthrough"))
        s.lambda_diagonal_feedthrough = lp["diagonal_feedthrough"].get<bool>();
    }
  } else {
    if (doc.contains("H") && !doc["H"].empty()) {
      const json& h = doc["H"];
      if (!h.is_array() || int(h.size()) != s.L) fail("H", "must have L rows");
      for (const auto& row : h)
        if (!row.is_array() || !row.empty()) fail("H", "rows must be empty when p = 0");
    }
    s.Hpat.assign(size_t(s.L), {});
    if (doc.contains("lambda")) fail("lambda", "p = 0 admits no lambda block");
  }

  auto sviol = validate_structure(s);
  if (!sviol.empty()) fail("document", sviol.front());

  if (doc.contains("theta")) {
    const json& th = doc["theta"];
    detail::reject_unknown_keys(th, {"entries", "lambda"}, "theta");
    ThetaAssignment theta;
    if (th.contains("entries")) {
      if (!th["entries"].is_array()) fail("theta.entries", "must be an array");
      for (size_t i = 0; i < th["entries"].size(); ++i) {
        const json& ent = th["entries"][i];
        std::string where = "theta.entries[" + std::to_string(i) + "]";
        detail::reject_unknown_keys(ent, {"matrix", "row", "col", "num", "den"}, where);
        for (const char* key : {"matrix", "row", "col", "num", "den"})
          if (!ent.contains(key)) fail(where, std::string("missing key '") + key + "'");
        std::string mat = ent["matrix"].get<std::string>();
        if (mat != "G" && mat != "R" && mat != "H") fail(where, "matrix must be G, R or H");
        int row = ent["row"].get<int>() - 1;
        int col = ent["col"].get<int>() - 1;
        int rows = s.L, cols = mat == "G" ? s.L : (mat == "R" ? s.K : s.p);
        if (row < 0 || row >= rows || col < 0 || col >= cols) fail(where, "index out of range");
        ParamPos pos{mat[0], row, col};
        if (theta.entries.count(pos)) fail(where, "duplicate assignment");
        theta.entries[pos] = detail::parse_rat(ent, where);
      }
    }
    if (th.contains("lambda"))
      theta.lambda = detail::parse_real_matrix(th["lambda"], "theta.lambda");
    out.theta = std::move(theta);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization (inverse of the parser on the document structures).
// ---------------------------------------------------------------------------

namespace detail {

inline json coeff_to_json(const Coeff& c) {
  namespace mp = boost::multiprecision;
  if (mp::denominator(c) == 1) {
    mp::cpp_int n = mp::numerator(c);
    if (n >= std::numeric_limits<int64_t>::min() && n <= std::numeric_limits<int64_t>::max())
      return json(n.convert_to<int64_t>());
  }
  return json(c.str());
}

inline json poly_to_json(const Poly& p) {
  json arr = json::array();
  if (p.is_zero()) {
    arr.push_back(0);
    return arr;
  }
  for (int k = 0; k <= p.degree(); ++k) arr.push_back(coeff_to_json(p.coeff(k)));
  return arr;
}

inline json rat_to_json(const Rat& r) {
  json obj;
  obj["num"] = poly_to_json(r.num());
  obj["den"] = poly_to_json(r.den());
  return obj;
}

inline json cell_to_json(const EntryPattern& e) {
  switch (e.kind) {
    case EntryPattern::Kind::Zero:
      return json("0");
    case EntryPattern::Kind::Fixed: {
      json obj;
      obj["fixed"] = rat_to_json(e.fixed);
      return obj;
    }
    case EntryPattern::Kind::Param: {
      json obj;
      obj["param"]["properness"] =
          e.properness == Properness::StrictlyProper ? "strict" : "proper";
      return obj;
    }
  }
  return json("0");
}

inline json grid_to_json(const PatternGrid& g) {
  json rows = json::array();
  for (const auto& row : g) {
    json r = json::array();
    for (const auto& cell : row) r.push_back(cell_to_json(cell));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json real_matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace detail

inline std::string serialize_spec(const SpecDocument& doc) {
  using detail::json;
  const ModelSetStructure& s = doc.structure;
  json out;
  out["version"] = 1;
  out["L"] = s.L;
  out["K"] = s.K;
  out["p"] = s.p;
  out["G"] = detail::grid_to_json(s.Gpat);
  out["R"] = detail::grid_to_json(s.Rpat);
  if (s.p > 0) {
    out["H"] = detail::grid_to_json(s.Hpat);
    if (s.lambda_kind == LambdaKind::Fixed)
      out["lambda"]["fixed"] = detail::real_matrix_to_json(s.lambda_fixed);
    else
      out["lambda"]["param"]["diagonal_feedthrough"] = s.lambda_diagonal_feedthrough;
  }
  if (doc.theta) {
    json entries = json::array();
    for (const auto& [pos, value] : doc.theta->entries) {
      json ent;
      ent["matrix"] = std::string(1, pos.matrix);
      ent["row"] = pos.row + 1;
      ent["col"] = pos.col + 1;
      ent["num"] = detail::poly_to_json(value.num());
      ent["den"] = detail::poly_to_json(value.den());
      entries.push_back(std::move(ent));
    }
    out["theta"]["entries"] = std::move(entries);
    if (doc.theta->lambda) out["theta"]["lambda"] = detail::real_matrix_to_json(*doc.theta->lambda);
  }
  return out.dump(2) + "\n";
}

}  // namespace netident
