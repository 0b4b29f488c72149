#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bivboost/engine.hpp"

namespace bivboost::config {

// Declarative model configuration, parsed from a strict JSON document: one
// config drives fit, predict and score. Unknown keys are rejected.
struct ModelConfig {
  std::string family;
  std::vector<std::string> responses;
  double nu = 0.1;
  int m_max = 5000;
  std::string offsets = "mle";
  std::string stabilization = "none";
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = all cores
  bool stop_on_no_improvement = false;
  bool record_diagnostics = false;
  std::string validation_file;   // optional
  double validation_split = 0.0;  // optional seeded row split when no file is given
  std::string adjacency_file;   // optional, required by mrf learners
  // empty => all numeric covariates as linear learners for every parameter
  std::vector<std::vector<bl::BaseLearnerSpec>> learners;
  bool learners_given = false;
  std::vector<std::optional<double>> offset_overrides;
};

ModelConfig parse_config(const std::string& path);
ModelConfig parse_config_text(const std::string& text, const std::string& origin = "config");

// Resolves the config against a dataset: expands the default all-linear
// layout, checks that referenced columns exist and builds the engine spec.
engine::ModelSpec build_model_spec(const ModelConfig& config, const DataTable& table);

}  // namespace bivboost::config
