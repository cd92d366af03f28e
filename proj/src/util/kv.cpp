#include "unipose/util/kv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace unipose::util {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
N parse_number(const std::string& key, const std::string& text) {
  N value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw KvError("key '" + key + "': '" + text + "' is not a valid number");
  }
  return value;
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw KvError("line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw KvError("line " + std::to_string(number) + ": empty key");
    if (kv.has(key)) throw KvError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    kv.values_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw KvError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string KeyValues::str() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void KeyValues::set(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of("=\n# \t") != std::string::npos) {
    throw KvError("invalid key '" + key + "'");
  }
  if (value.find('\n') != std::string::npos) throw KvError("value for '" + key + "' spans lines");
  values_[key] = value;
}

void KeyValues::set(const std::string& key, double value) {
  // Shortest representation that round-trips exactly.
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  set(key, std::string(buf, ptr));
}

void KeyValues::set(const std::string& key, const std::vector<int>& value) {
  std::string s;
  for (std::size_t i = 0; i < value.size(); ++i) s += (i ? "," : "") + std::to_string(value[i]);
  set(key, s);
}

std::string KeyValues::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw KvError("missing key '" + key + "'");
  return it->second;
}

int KeyValues::get_int(const std::string& key) const { return parse_number<int>(key, get_string(key)); }

double KeyValues::get_double(const std::string& key) const {
  const double v = parse_number<double>(key, get_string(key));
  if (!std::isfinite(v)) throw KvError("key '" + key + "': value must be finite");
  return v;
}

bool KeyValues::get_bool(const std::string& key) const {
  const auto v = get_string(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw KvError("key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<int> KeyValues::get_int_list(const std::string& key) const {
  const auto v = get_string(key);
  std::vector<int> out;
  if (v.empty()) return out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  return out;
}

void KeyValues::read(const std::string& key, int& out) const {
  if (has(key)) out = get_int(key);
}
void KeyValues::read(const std::string& key, double& out) const {
  if (has(key)) out = get_double(key);
}
void KeyValues::read(const std::string& key, bool& out) const {
  if (has(key)) out = get_bool(key);
}
void KeyValues::read(const std::string& key, std::string& out) const {
  if (has(key)) out = get_string(key);
}
void KeyValues::read(const std::string& key, std::vector<int>& out) const {
  if (has(key)) out = get_int_list(key);
}

KeyValues KeyValues::subset(const std::string& prefix) const {
  KeyValues out;
  for (const auto& [k, v] : values_) {
    if (k.rfind(prefix, 0) == 0 && k.size() > prefix.size()) out.values_[k.substr(prefix.size())] = v;
  }
  return out;
}

void KeyValues::merge(const KeyValues& other, const std::string& prefix) {
  for (const auto& [k, v] : other.values_) values_[prefix + k] = v;
}

}  // namespace unipose::util
