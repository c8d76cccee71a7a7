#pragma once

#include <string>

#include "dreptile/harness.hpp"

namespace dreptile {

/// Reads an ExperimentConfig from a JSON file. Absent keys keep their
/// defaults; unknown keys are rejected so typos do not pass silently.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

/// Full config with every key present.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace dreptile
