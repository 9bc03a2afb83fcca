#pragma once

// Run configuration: a flat JSON object per subcommand. Precedence is
// preset defaults < config file < command-line flags.

#include "caprob/sweeps.h"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace caprob {

enum class ParamType { Int, Double, String, Bool, IntList, DoubleList, StringList };

std::string to_string(ParamType type);

struct ParamSpec {
  std::string key;
  ParamType type;
  std::string help;
};

/// Keys shared by every subcommand.
const std::vector<ParamSpec>& global_params();

const std::vector<std::string>& command_names();

/// Subcommand-specific keys in declaration order. Throws InvalidArgument.
std::vector<ParamSpec> command_params(const std::string& command);

/// Default values of the subcommand keys under a preset.
nlohmann::json command_defaults(const std::string& command, const std::string& preset);

struct RunConfig {
  std::string command;
  std::string preset = "desk";
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "results";
  double tolerance_nats = 0.0;
  nlohmann::json params = nlohmann::json::object();  // every subcommand key, filled

  /// Flat object including "command"; parse_config_text reads it back unchanged.
  nlohmann::json to_json() const;

  bool operator==(const RunConfig& other) const;
};

/// (key, raw text) pairs; lists are comma-separated.
using FlagOverrides = std::vector<std::pair<std::string, std::string>>;

RunConfig parse_config_text(const std::string& command, const std::string& text,
                            const FlagOverrides& overrides = {});

/// Empty path means no file: defaults plus overrides.
RunConfig parse_config(const std::string& command, const std::string& path,
                       const FlagOverrides& overrides = {});

/// Closest valid key by edit distance, for "did you mean" hints.
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);
std::size_t edit_distance(const std::string& a, const std::string& b);

// Typed views of a parsed config.

BoundSweepOptions bound_sweep_options(const RunConfig& config);
AchievabilityOptions achievability_options(const RunConfig& config);
LeakOptions leak_options(const RunConfig& config);
DpiOptions dpi_options(const RunConfig& config);
AuditOptions audit_options(const RunConfig& config);
MultistepOptions multistep_options(const RunConfig& config);

struct EncoderCeilingOptions {
  std::string clean, pert;
  std::string baseline_clean, baseline_pert;  // optional reference encoder
};
EncoderCeilingOptions encoder_ceiling_options(const RunConfig& config);

struct ShiftSignatureOptions {
  std::string defended_clean, defended_pert;
  std::string vanilla_clean, vanilla_pert;
  double rel_threshold = 0.10;
};
ShiftSignatureOptions shift_signature_options(const RunConfig& config);

}  // namespace caprob
