#pragma once

#include <map>
#include <string>
#include <vector>

namespace eden {

/// Flat `key = value` text files (configs, generator specs, thresholds,
/// manifests). Lines starting with '#' and blank lines are ignored.
class KvFile {
 public:
  static KvFile parse(const std::string& text);
  static KvFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, long long value);
  void set_bool(const std::string& key, bool value);

  /// All keys in insertion order.
  const std::vector<std::string>& keys() const { return order_; }

  /// Throws if any key is not in `allowed`, naming the offender.
  void require_known_keys(const std::vector<std::string>& allowed) const;

  std::string serialize() const;  // one `key = value` per line, insertion order
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace eden
