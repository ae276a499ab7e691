#pragma once

// Simulation campaign configuration: a shared settings block plus one row
// per panel geometry, loaded from a JSON document. The schema is strict:
// unknown keys anywhere are rejected before any work starts.

#include <string>
#include <vector>

#include "hetvar/simulation.hpp"

namespace hetvar {

struct RunConfig {
  std::vector<SimulationConfig> rows;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace hetvar
