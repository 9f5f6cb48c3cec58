#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "pinnstab/harness.hpp"

namespace pinnstab {

/// Environment variable holding the default output root.
inline constexpr const char* kOutEnv = "PINNSTAB_OUT";

/// `$PINNSTAB_OUT` when set and non-empty, otherwise "out".
std::filesystem::path default_output_root();

/// Applies `key = value` lines to `config`. Sections ([run], [train],
/// [grids], [perturbation], [capacity], [energy], [regularization],
/// [refinement], [noniid], [thresholds]) scope the keys; lines before the
/// first section belong to [run]. `#` and `;` start comments. Lists are
/// comma separated. Errors name the origin, line and key.
void apply_config_text(RunConfig& config, std::string_view text, const std::string& origin = "<config>");

/// Reads and applies a file. Throws IoError when unreadable.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// "all" or a comma list of problem names.
void select_pdes(RunConfig& config, std::string_view names);

/// "all" or a comma list of experiment names.
void select_experiments(RunConfig& config, std::string_view names);

/// Command-line values; set fields win over the file.
struct Overrides {
  std::optional<std::string> pde;
  std::optional<std::string> experiment;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool overwrite = false;
};

/// Defaults, then the config file, then the flags; validated.
RunConfig parse_config(const Overrides& flags);

/// Every recognised `section.key`, for documentation and tests.
const std::vector<std::string>& config_keys();

}  // namespace pinnstab
