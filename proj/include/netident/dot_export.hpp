#pragma once

#include "netident/structure.hpp"

#include <ostream>
#include <string>

namespace netident {

/// Writes the directed module graph: node signals as circles, excitation and
/// noise sources as boxes and diamonds. Fixed modules draw solid,
/// parameterized ones dashed; structural zeros are omitted.
inline void export_dot(std::ostream& os, const ModelSetStructure& s,
                       const std::string& name = "network") {
  auto style = [](const EntryPattern& e) {
    return e.is_param() ? std::string("dashed") : std::string("solid");
  };
  os << "digraph " << name << " {\n";
  os << "  rankdir=LR;\n";
  for (int i = 0; i < s.L; ++i)
    os << "  w" << i + 1 << " [shape=circle];\n";
  for (int k = 0; k < s.K; ++k)
    os << "  r" << k + 1 << " [shape=box];\n";
  for (int j = 0; j < s.p; ++j)
    os << "  e" << j + 1 << " [shape=diamond];\n";
  for (int i = 0; i < s.L; ++i)
    for (int j = 0; j < s.L; ++j) {
      const auto& e = s.Gpat[size_t(i)][size_t(j)];
      if (e.is_zero()) continue;
      os << "  w" << j + 1 << " -> w" << i + 1 << " [style=" << style(e) << ", label=\"G"
         << i + 1 << j + 1 << "\"];\n";
    }
  for (int i = 0; i < s.L; ++i)
    for (int k = 0; k < s.K; ++k) {
      const auto& e = s.Rpat[size_t(i)][size_t(k)];
      if (e.is_zero()) continue;
      os << "  r" << k + 1 << " -> w" << i + 1 << " [style=" << style(e) << "];\n";
    }
  for (int i = 0; i < s.L; ++i)
    for (int j = 0; j < s.p; ++j) {
      const auto& e = s.Hpat[size_t(i)][size_t(j)];
      if (e.is_zero()) continue;
      os << "  e" << j + 1 << " -> w" << i + 1 << " [style=" << style(e) << "];\n";
    }
  os << "}\n";
}

}  // namespace netident
