#pragma once

// Run configuration: INI-style `key = value` files with [section] headers,
// `section.key` overrides and WTDIAG_SECTION_KEY environment variables.
// Precedence, lowest first: defaults, file, environment, command line.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wtdiag/pipeline.hpp"

namespace wtdiag {

inline constexpr const char* env_prefix = "WTDIAG_";

struct RunConfig {
    PipelineConfig pipeline;
    std::filesystem::path out = "out";

    void validate() const;
};

/// Sets one dotted key; throws ValidationError naming the key on unknown
/// keys or unparsable values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Current value of a key in the same syntax the parser accepts.
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// Every accepted dotted key, sorted.
std::vector<std::string> config_keys();

/// Applies a config file; errors carry "path:line".
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "<text>");

/// Applies WTDIAG_* variables from `env` (name -> value). Variables with the
/// prefix that match no key are rejected.
void apply_environment(RunConfig& cfg, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_environment();

/// Environment variable name of a dotted key: scenario.gamma_local -> WTDIAG_SCENARIO_GAMMA_LOCAL.
std::string env_name(const std::string& key);

/// Renders the full config as a file that parses back to the same values.
std::string to_config_text(const RunConfig& cfg);

}  // namespace wtdiag
