#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace unipose::util {

class KvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat "key = value" text documents. Blank lines and lines starting with
/// '#' are ignored; keys are kept sorted so serialization is canonical.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text);
  static KeyValues load(const std::string& path);
  std::string str() const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, const std::vector<int>& value);
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  std::string get_string(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  /// Readers that leave `out` untouched when the key is absent.
  void read(const std::string& key, int& out) const;
  void read(const std::string& key, double& out) const;
  void read(const std::string& key, bool& out) const;
  void read(const std::string& key, std::string& out) const;
  void read(const std::string& key, std::vector<int>& out) const;

  /// Keys starting with `prefix`, with the prefix removed.
  KeyValues subset(const std::string& prefix) const;
  /// Copies every entry of `other` under `prefix`.
  void merge(const KeyValues& other, const std::string& prefix = "");

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace unipose::util
