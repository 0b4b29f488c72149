#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bivboost/baselearners.hpp"
#include "bivboost/data.hpp"
#include "bivboost/families.hpp"

namespace bivboost::simulate {

// Built-in benchmark scenarios: linear bivariate-Bernoulli designs in low and
// high dimension, linear and smooth bivariate-Poisson designs, and a Gaussian
// design with linear, smooth and spatial effects on a grid map.
enum class ScenarioId {
  bern_linear_low,
  bern_linear_high,
  pois_linear,
  pois_nonlinear,
  gauss_spatial,
};

std::string scenario_name(ScenarioId id);
ScenarioId scenario_from_name(const std::string& name);
std::vector<std::string> scenario_names();

struct ScenarioSpec {
  ScenarioId id = ScenarioId::pois_linear;
  int n_train = 1000;
  int n_val = 1500;
  int n_test = 1000;
  int p = 0;  // 0 uses the scenario default
  std::uint64_t seed = 1;
  int grid_rows = 18;
  int grid_cols = 18;
};

struct SpatialMap {
  bl::Adjacency adjacency;       // rook-neighbour grid graph
  Eigen::MatrixXd centroids;     // S x 2 standardized coordinates
  Eigen::VectorXd field;         // smooth spatial surface per region
};

struct TruthRecord {
  std::vector<std::vector<std::string>> informative;         // per parameter
  std::vector<std::map<std::string, double>> linear_slopes;  // per parameter
  Eigen::VectorXd intercepts;
  bool has_spatial = false;
};

struct SimulatedDataset {
  families::FamilySpec family;
  int p = 0;
  DataTable train, val, test;
  Eigen::MatrixXd eta_train, eta_val, eta_test;
  Eigen::MatrixXd params_train, params_val, params_test;
  SpatialMap map;  // populated for the spatial scenario
  TruthRecord truth;
};

// Gaussian rows with covariance rho^{|i-j|}; the AR(1) recursion used here is
// the Cholesky transport of that Toeplitz matrix.
Eigen::MatrixXd toeplitz_mvn(long n, int p, double rho, std::uint64_t seed);

// Grid map with rook adjacency, standardized centroids and the spatial field
// evaluated on them.
SpatialMap spatial_map(int grid_rows, int grid_cols);

SimulatedDataset make_scenario(const ScenarioSpec& spec);

// Base-learner layout ordinarily used with each scenario.
std::vector<std::vector<bl::BaseLearnerSpec>> scenario_learners(ScenarioId id, int p);

// Fixed predictor offsets that reduce the family to independent margins
// (psi = 1, lambda3 ~ 0, rho = 0).
std::vector<std::optional<double>> independence_overrides(const families::FamilySpec& family);

int default_p(ScenarioId id);

}  // namespace bivboost::simulate
