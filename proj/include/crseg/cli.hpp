#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace crseg::cli {

// Plain key=value experiment config. Getters record the key and its final
// value (default or explicit); after a command has pulled its parameters,
// reject_unknown() refuses any key the command never asked for, and
// resolved() echoes exactly the parameters the run used.
class Config {
 public:
  static Config from_file(const std::filesystem::path& path);
  static Config from_string(const std::string& text);

  void apply_override(const std::string& key_equals_value);

  std::string get_str(const std::string& key, std::optional<std::string> def = std::nullopt);
  double get_num(const std::string& key, std::optional<double> def = std::nullopt);
  long long get_int(const std::string& key, std::optional<long long> def = std::nullopt);
  bool get_flag(const std::string& key, bool def);  // 0/1

  void reject_unknown() const;
  std::string resolved(const std::string& header_comment) const;

 private:
  std::string raw(const std::string& key, const std::optional<std::string>& def);
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> resolved_;
};

// Entry point behind the binary: crseg <command> --config <path>
// [--set key=value ...] --out <dir>. Returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace crseg::cli
