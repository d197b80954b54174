#ifndef WARPGUARD_TOOLS_CLI_H_
#define WARPGUARD_TOOLS_CLI_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpguard/fraction.h"
#include "warpguard/interpreter.h"

namespace warpguard::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kArtifactError = 3,
  kExecutionError = 4,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode : std::uint8_t { kDetect, kCorrect, kNone };

struct RunConfig {
  std::string kernel_path;
  std::string fixture;
  std::string inputs_path;
  bool declared = false;  // fixtures: use the declared profile instead of measuring
  Fraction tau{1, 20};
  Mode mode = Mode::kDetect;
  std::string profile_mode = "pruned";
  double sample = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;  // 0: derived from the golden run
  std::string cost_table;
  Fraction remap_overhead{0};
  std::filesystem::path out = "warpguard-out";
  std::optional<FaultSite> fault;
  unsigned workers = 0;
  std::vector<Fraction> taus;  // sweep

  // Throws ConfigError.
  void validate(bool needs_source) const;
  std::string to_json() const;
};

std::string_view mode_name(Mode m);

// Parses "t:d:b".
FaultSite parse_fault(std::string_view text);
// "a,b,c" or "start:stop:step", both inclusive.
std::vector<Fraction> parse_tau_list(std::string_view text);
std::vector<Fraction> parse_tau_range(std::string_view text);

// args excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace warpguard::cli

#endif  // WARPGUARD_TOOLS_CLI_H_
