#pragma once

#include "netident/identifiability.hpp"
#include "netident/version.hpp"

#include <json.hpp>

#include <sstream>
#include <string>

namespace netident {

/// Machine-readable report. Key order and number formatting are fixed, so an
/// identical analysis produces a byte-identical document.
inline nlohmann::ordered_json report_to_json(const IdentifiabilityReport& rep) {
  using json = nlohmann::ordered_json;
  json out;
  out["tool_version"] = kToolVersion;
  out["mode"] = rep.mode == Mode::AtModel ? "at_model" : "generic";
  out["seed"] = rep.options.seed;
  out["trials"] = rep.options.trials;
  out["rank_tol"] = rep.options.rank_tol;
  out["overall"] = to_string(rep.overall);

  json route;
  route["kind"] = to_string(rep.route.kind);
  route["ok"] = rep.route.ok;
  if (!rep.route.noloop_order.empty()) {
    json order = json::array();
    for (int v : rep.route.noloop_order) order.push_back(v + 1);
    route["node_order"] = std::move(order);
  }
  if (!rep.route.loop_cycle.empty()) {
    json cyc = json::array();
    for (int v : rep.route.loop_cycle) cyc.push_back(v + 1);
    route["algebraic_loop"] = std::move(cyc);
  }
  out["route"] = std::move(route);

  json t1;
  t1["verdict"] = rep.diagonalization.success ? "success" : "inconclusive";
  if (rep.diagonalization.success) {
    json match = json::array();
    for (int c : rep.diagonalization.assignment) match.push_back(c + 1);
    t1["matching"] = std::move(match);
  } else {
    t1["matching"] = nullptr;
    if (!rep.diagonalization.note.empty()) t1["note"] = rep.diagonalization.note;
  }
  out["theorem1"] = std::move(t1);

  json t2;
  t2["verdict"] = to_string(rep.row_test.verdict);
  json rows = json::array();
  for (const auto& rec : rep.row_test.rows) {
    json row;
    row["row"] = rec.row + 1;
    row["alpha"] = rec.alpha;
    row["beta"] = rec.beta;
    row["count_ok"] = rec.count_ok;
    row["rank"] = rec.rank;
    row["required"] = rec.required;
    row["verdict"] = rec.ok ? "ok" : "fail";
    rows.push_back(std::move(row));
  }
  t2["rows"] = std::move(rows);
  out["theorem2"] = std::move(t2);

  if (rep.row_test.witness_row) {
    json wit;
    wit["row"] = *rep.row_test.witness_row + 1;
    if (!rep.row_test.witness_singular_values.empty()) {
      json sv = json::array();
      for (double v : rep.row_test.witness_singular_values) sv.push_back(v);
      wit["singular_values"] = std::move(sv);
    }
    if (!rep.row_test.witness_text.empty()) wit["matrix"] = rep.row_test.witness_text;
    out["witness"] = std::move(wit);
  } else {
    out["witness"] = nullptr;
  }

  json notes = json::array();
  for (const auto& n : rep.route.notes) notes.push_back(n);
  for (const auto& n : rep.row_test.notes) notes.push_back(n);
  for (const auto& n : rep.notes) notes.push_back(n);
  out["notes"] = std::move(notes);
  return out;
}

inline std::string report_to_text(const IdentifiabilityReport& rep) {
  std::ostringstream os;
  os << "mode:            " << (rep.mode == Mode::AtModel ? "at-model" : "generic") << "\n";
  os << "route:           " << to_string(rep.route.kind) << (rep.route.ok ? "" : " (none applies)")
     << "\n";
  if (!rep.route.noloop_order.empty()) {
    os << "node order:      ";
    for (size_t i = 0; i < rep.route.noloop_order.size(); ++i)
      os << (i ? " " : "") << "w" << rep.route.noloop_order[i] + 1;
    os << "\n";
  }
  os << "diagonalization: " << (rep.diagonalization.success ? "success" : "inconclusive");
  if (rep.diagonalization.success) {
    os << "  (";
    for (size_t i = 0; i < rep.diagonalization.assignment.size(); ++i)
      os << (i ? ", " : "") << "w" << i + 1 << "<-u" << rep.diagonalization.assignment[i] + 1;
    os << ")";
  }
  os << "\n";
  if (!rep.row_test.rows.empty()) {
    os << "row tests (alpha beta count rank/required verdict):\n";
    for (const auto& rec : rep.row_test.rows) {
      os << "  w" << rec.row + 1 << ":  " << rec.alpha << " " << rec.beta << "  "
         << (rec.count_ok ? "ok" : "FAIL") << "  " << rec.rank << "/" << rec.required << "  "
         << (rec.ok ? "ok" : "FAIL") << "\n";
    }
  }
  if (rep.row_test.witness_row) {
    os << "witness row:     w" << *rep.row_test.witness_row + 1 << "\n";
    if (!rep.row_test.witness_singular_values.empty()) {
      os << "singular values: ";
      for (size_t i = 0; i < rep.row_test.witness_singular_values.size(); ++i)
        os << (i ? " " : "") << rep.row_test.witness_singular_values[i];
      os << "\n";
    }
    if (!rep.row_test.witness_text.empty()) os << rep.row_test.witness_text << "\n";
  }
  for (const auto& n : rep.route.notes) os << "note: " << n << "\n";
  for (const auto& n : rep.row_test.notes) os << "note: " << n << "\n";
  for (const auto& n : rep.notes) os << "note: " << n << "\n";
  os << "overall:         " << to_string(rep.overall) << "\n";
  return os.str();
}

}  // namespace netident
