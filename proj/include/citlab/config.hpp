#pragma once

#include "citlab/ci_tests.hpp"
#include "citlab/simbench.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace citlab {

using Json = nlohmann::json;

/// Raised for configuration files that fail schema checks.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct IoPaths {
  std::string data;
  std::string out;
};

/// Settings of `citlab test`. Every field has a default; JSON objects may
/// omit keys but may not add unknown ones.
struct RunConfig {
  std::uint64_t seed = 0;
  LearnerConfig learner;
  GaussianConfig gaussian;
  TestConfig test;
  IoPaths io;

  void validate() const;
};

RunConfig run_config_from_json(const Json& j);
Json to_json(const RunConfig& c);
RunConfig load_run_config(const std::string& path);

/// Settings of `citlab simulate`: a base SimConfig and one-at-a-time grids.
struct GridSpec {
  std::string vary;
  std::vector<double> values;
};

struct SimulationPlan {
  SimConfig base;
  std::vector<GridSpec> grids;
  int reps = 400;
  bool hrt_everywhere = false;
  int workers = 1;
  SimLearners learners;
  TestConfig test;

  void validate() const;
};

/// One-at-a-time grids around the default setting, with a banded L(X)
/// estimate and the vPCM banded hint.
SimulationPlan default_grid_plan();
SimulationPlan simulation_plan_from_json(const Json& j);
Json to_json(const SimulationPlan& plan);
SimulationPlan load_simulation_plan(const std::string& path);

/// Section-level (de)serialisers, shared by both file formats.
LearnerConfig learner_from_json(const Json& j);
Json to_json(const LearnerConfig& c);
GaussianConfig gaussian_from_json(const Json& j);
Json to_json(const GaussianConfig& c);
TestConfig test_config_from_json(const Json& j);
Json to_json(const TestConfig& c);
SimConfig sim_config_from_json(const Json& j);
Json to_json(const SimConfig& c);

std::string to_string(Sided s);
Sided sided_from_string(const std::string& name);

/// Hex SHA-256 of the compact JSON dump.
std::string config_hash(const Json& j);

/// Reproduction record written next to every output.
Json make_manifest(const std::string& command, const Json& config, std::uint64_t seed);
void write_json(const Json& j, const std::string& path);
Json read_json(const std::string& path);

/// Worker count from CITLAB_WORKERS when set, else `fallback`.
int workers_from_env(int fallback);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace citlab
