#ifndef AVSE_CORE_KV_CONFIG_H_
#define AVSE_CORE_KV_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace avse {

// Line-oriented `key=value` configuration. '#' starts a comment; blank lines
// are ignored; later assignments override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig Parse(const std::string& text,
                              const std::string& source = "<string>");
  static KeyValueConfig ReadFile(const std::filesystem::path& path);

  bool Has(const std::string& key) const { return values_.count(key) > 0; }
  void Set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }
  void Merge(const KeyValueConfig& other);

  std::string GetString(const std::string& key, const std::string& def) const;
  double GetDouble(const std::string& key, double def) const;
  std::int64_t GetInt(const std::string& key, std::int64_t def) const;
  bool GetBool(const std::string& key, bool def) const;
  std::vector<double> GetDoubleList(const std::string& key,
                                    const std::vector<double>& def) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Sorted "key=value\n" lines; the input of Hash().
  std::string Canonical() const;
  std::uint64_t Hash() const;

 private:
  std::map<std::string, std::string> values_;
};

std::vector<double> ParseDoubleList(const std::string& text);

}  // namespace avse

#endif  // AVSE_CORE_KV_CONFIG_H_
