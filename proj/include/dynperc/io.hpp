#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "dynperc/errors.hpp"
#include "dynperc/version.hpp"

namespace dynperc {

/// Locale-independent decimal formatting; times are printed with 9
/// significant digits.
inline std::string format_sig(double v, int significant = 9) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant, v);
  return buf;
}

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

/// CSV file with the deterministic comment header every output starts with:
/// artifact version plus the full effective configuration.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const ConfigEcho& echo,
            const std::vector<std::string>& columns)
      : out_(path) {
    if (!out_) throw ConfigError("out", "cannot open '" + path + "' for writing");
    out_ << "# " << kArtifactName << " " << kVersion << "\n";
    for (const auto& [key, value] : echo) out_ << "# " << key << " = " << value << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace dynperc
