#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "regionblend/pipeline.hpp"

namespace regionblend {

// Plain `key = value` config file; '#' starts a comment. Keys mirror
// RunConfig fields one-to-one; command-line flags override file values.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Applies key/value pairs onto a RunConfig; unknown keys or malformed values
// raise ConfigError.
void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv);

// Echo of every config key in fixed order (used by the run manifest).
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

SolverKind parse_solver(const std::string& name);
CopyMaskMode parse_copy_mask(const std::string& name);
std::string solver_name(SolverKind k);
std::string copy_mask_name(CopyMaskMode m);

}  // namespace regionblend
