#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "unipose/util/kv.hpp"

namespace unipose::train {

/// Append-only line log. Each line is `<kind> key=value key=value ...` with
/// no spaces inside values.
class RunLog {
 public:
  RunLog() = default;
  /// Also appends every line to `path`.
  explicit RunLog(const std::string& path);

  using Fields = std::vector<std::pair<std::string, std::string>>;
  void write(const std::string& kind, const Fields& fields);
  /// One `config` line per entry, keys prefixed with `prefix`.
  void config(const util::KeyValues& kv, const std::string& prefix = "");

  const std::vector<std::string>& lines() const { return lines_; }
  /// Values of `key` on every line of `kind`, in order.
  std::vector<std::string> column(const std::string& kind, const std::string& key) const;

  static std::string number(double v);

 private:
  std::vector<std::string> lines_;
  std::ofstream file_;
};

}  // namespace unipose::train
