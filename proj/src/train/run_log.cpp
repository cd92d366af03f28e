#include "unipose/train/run_log.hpp"

#include <charconv>
#include <sstream>

#include "unipose/data/image_io.hpp"

namespace unipose::train {

RunLog::RunLog(const std::string& path) : file_(path, std::ios::app) {
  if (!file_) throw data::IoError("cannot open run log '" + path + "'");
}

namespace {

std::string sanitize(std::string v) {
  for (char& c : v) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '=') c = '_';
  }
  return v.empty() ? "-" : v;
}

}  // namespace

void RunLog::write(const std::string& kind, const Fields& fields) {
  std::string line = kind;
  for (const auto& [k, v] : fields) line += " " + sanitize(k) + "=" + sanitize(v);
  lines_.push_back(line);
  if (file_.is_open()) {
    file_ << line << '\n';
    file_.flush();
  }
}

void RunLog::config(const util::KeyValues& kv, const std::string& prefix) {
  for (const auto& [k, v] : kv.entries()) write("config", {{prefix + k, v}});
}

std::vector<std::string> RunLog::column(const std::string& kind, const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& line : lines_) {
    std::istringstream in(line);
    std::string word;
    in >> word;
    if (word != kind) continue;
    while (in >> word) {
      const auto eq = word.find('=');
      if (eq != std::string::npos && word.substr(0, eq) == key) out.push_back(word.substr(eq + 1));
    }
  }
  return out;
}

std::string RunLog::number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace unipose::train
