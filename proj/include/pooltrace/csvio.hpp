#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pooltrace {

/// Minimal CSV writer: header row then value rows.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  template <class... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((write_cell(values, first), first = false), ...);
    out_ << '\n';
  }

 private:
  template <class T>
  void write_cell(const T& v, bool first) {
    if (!first) out_ << ',';
    out_ << v;
  }
  std::ofstream out_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path, bool skip_header = true);

}  // namespace pooltrace
