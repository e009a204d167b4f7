#include "avse/core/kv_config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "avse/core/checksum.h"
#include "avse/core/error.h"

namespace avse {

namespace {

std::string Trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double ToDouble(const std::string& key, const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error("config key '" + key + "': not a number: '" + text + "'");
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(const std::string& text,
                                     const std::string& source) {
  KeyValueConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(source + ":" + std::to_string(lineno) +
                  ": expected key=value");
    cfg.values_[Trim(line.substr(0, eq))] = Trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::ReadFile(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return Parse(ss.str(), path.string());
}

void KeyValueConfig::Merge(const KeyValueConfig& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string KeyValueConfig::GetString(const std::string& key,
                                      const std::string& def) const {
  auto it = values_.find(key);
  return it == values_.end() ? def : it->second;
}

double KeyValueConfig::GetDouble(const std::string& key, double def) const {
  auto it = values_.find(key);
  return it == values_.end() ? def : ToDouble(key, it->second);
}

std::int64_t KeyValueConfig::GetInt(const std::string& key,
                                    std::int64_t def) const {
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  std::int64_t v = 0;
  const std::string& t = it->second;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw Error("config key '" + key + "': not an integer: '" + t + "'");
  return v;
}

bool KeyValueConfig::GetBool(const std::string& key, bool def) const {
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  const std::string& t = it->second;
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw Error("config key '" + key + "': not a boolean: '" + t + "'");
}

std::vector<double> KeyValueConfig::GetDoubleList(
    const std::string& key, const std::vector<double>& def) const {
  auto it = values_.find(key);
  return it == values_.end() ? def : ParseDoubleList(it->second);
}

std::string KeyValueConfig::Canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t KeyValueConfig::Hash() const { return Fnv1a64(Canonical()); }

std::vector<double> ParseDoubleList(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(ToDouble("list", item));
  }
  return out;
}

}  // namespace avse
