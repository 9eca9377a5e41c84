#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qmc::cli {

/// Plain key=value configuration ('#' starts a comment). Command-line
/// overrides are merged on top of the file contents.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;
  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         const std::vector<std::int64_t>& fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Subcommand drivers; each writes CSV rows to `out`.
void run_price(const Config& cfg, std::ostream& out);
void run_converge(const Config& cfg, std::ostream& out);
void run_mlmc(const Config& cfg, std::ostream& out);
void run_demo_rejection(const Config& cfg, std::ostream& out);
void run_paths(const Config& cfg, std::ostream& out);

/// Full command-line entry point. Exit codes: 0 success, 1 configuration
/// error, 2 numerical failure.
int run_main(int argc, const char* const* argv);

}  // namespace qmc::cli
