#pragma once

// Run configuration: flat key = value text with [sections]. Keys are unique
// across sections, so the same names double as command-line flags.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sebert/data.hpp"
#include "sebert/errors.hpp"
#include "sebert/eval.hpp"
#include "sebert/model.hpp"
#include "sebert/optim.hpp"
#include "sebert/training.hpp"

namespace sebert {

/// Raised for unknown keys, malformed lines and bad values.
class ConfigError : public ContractError {
 public:
  using ContractError::ContractError;
};

struct RunConfig {
  ModelConfig model;
  OptimizerConfig optimizer;
  TrainConfig train;
  SynthConfig synth;
  std::uint64_t synth_seed = 0;
  std::size_t top_k = 5;
  std::filesystem::path train_path;
  std::filesystem::path dev_path;
  std::filesystem::path checkpoint_path;
  std::filesystem::path log_path;

  RunConfig();

  /// Applies one key = value pair. Throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Every recognised key, grouped by section.
  static const std::map<std::string, std::vector<std::string>>& sections();
  /// Current value of a key in the same textual form `set` accepts.
  std::string get(const std::string& key) const;
  /// Writes a complete config file for the current values.
  std::string to_text() const;

  void validate() const;
};

/// Parses config text on top of `base`. `#` and `;` start comment lines. Keys
/// before the first section header are accepted from any section; under a
/// header they must belong to it.
RunConfig parse_config(std::istream& in, RunConfig base = RunConfig());
RunConfig load_config(const std::filesystem::path& path);

}  // namespace sebert
