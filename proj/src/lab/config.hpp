#pragma once

#include <map>
#include <string>
#include <vector>

namespace klab::lab {

// Flat key-value text with [section] headers. Keys are addressed as
// "section.key"; '#' starts a comment. Only keys that exist in the defaults
// are accepted, so typos fail at parse time with the line number.
class Config {
 public:
  static Config defaults();
  // Parses text on top of the defaults. origin names the source in errors.
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& raw(const std::string& key) const;
  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;  // comma separated

  // Overrides an existing key (sweeps, --seed); the value is checked like a parsed one.
  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace klab::lab
