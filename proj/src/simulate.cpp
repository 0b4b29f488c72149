#include "bivboost/simulate.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bivboost/common.hpp"
#include "bivboost/scoring.hpp"

namespace bivboost::simulate {

namespace {

using families::FamilyId;
using families::FamilySpec;

std::string covariate_name(int j) { return "x" + std::to_string(j + 1); }

Eigen::MatrixXd uniform_matrix(long n, int p, Rng& rng) {
  Eigen::MatrixXd x(n, p);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.uniform();
  }
  return x;
}

Eigen::MatrixXd toeplitz_rows(long n, int p, double rho, Rng& rng) {
  Eigen::MatrixXd x(n, p);
  const double tail = std::sqrt(1.0 - rho * rho);
  for (long i = 0; i < n; ++i) {
    double prev = rng.normal();
    x(i, 0) = prev;
    for (int j = 1; j < p; ++j) {
      prev = rho * prev + tail * rng.normal();
      x(i, j) = prev;
    }
  }
  return x;
}

struct PartData {
  DataTable table;
  Eigen::MatrixXd eta;
  Eigen::MatrixXd params;
};

Eigen::MatrixXd true_eta(ScenarioId id, const Eigen::MatrixXd& x,
                         const Eigen::VectorXd& spatial) {
  const long n = x.rows();
  Eigen::MatrixXd eta;
  switch (id) {
    case ScenarioId::bern_linear_low:
    case ScenarioId::bern_linear_high:
      eta.resize(n, 3);
      for (long i = 0; i < n; ++i) {
        eta(i, 0) = x(i, 0) + 1.5 * x(i, 1) - x(i, 2) + 1.5 * x(i, 3);
        eta(i, 1) = 2.0 * x(i, 0) - x(i, 1) + 1.5 * x(i, 2);
        eta(i, 2) = -1.5 + x(i, 4) + 1.5 * x(i, 5);
      }
      break;
    case ScenarioId::pois_linear:
      eta.resize(n, 3);
      for (long i = 0; i < n; ++i) {
        eta(i, 0) = -x(i, 0) + 0.5 * x(i, 1) + 1.5 * x(i, 2);
        eta(i, 1) = 2.0 * x(i, 0) - x(i, 2) + 1.5 * x(i, 3) + x(i, 4);
        eta(i, 2) = 0.5 * x(i, 4) + x(i, 5) - 0.5 * x(i, 6);
      }
      break;
    case ScenarioId::pois_nonlinear:
      eta.resize(n, 3);
      for (long i = 0; i < n; ++i) {
        eta(i, 0) = std::sqrt(x(i, 0)) * x(i, 0);
        eta(i, 1) = std::cos(2.0 * x(i, 1));
        eta(i, 2) = std::sin(x(i, 2));
      }
      break;
    case ScenarioId::gauss_spatial:
      eta.resize(n, 5);
      for (long i = 0; i < n; ++i) {
        const double f = spatial[i];
        eta(i, 0) = std::sin(2.0 * x(i, 0)) / 0.5 + x(i, 5) + 0.5 * x(i, 6) + f;
        eta(i, 1) = 2.0 + 3.0 * std::cos(2.0 * x(i, 1)) + 0.5 * x(i, 6) + x(i, 7) + f;
        eta(i, 2) = std::sqrt(x(i, 2)) * x(i, 2) - 0.5 * x(i, 7) + f;
        eta(i, 3) = std::cos(x(i, 3)) * x(i, 3) + 0.25 * x(i, 8) + f;
        eta(i, 4) = std::log(x(i, 4) * x(i, 4)) + x(i, 9) + f;
      }
      break;
  }
  return eta;
}

PartData build_part(const ScenarioSpec& spec, const FamilySpec& family, int p, long n,
                    const SpatialMap* map, std::uint64_t part_seed) {
  Rng rng(part_seed);
  const bool toeplitz = spec.id == ScenarioId::bern_linear_low ||
                        spec.id == ScenarioId::bern_linear_high ||
                        spec.id == ScenarioId::pois_linear;
  Eigen::MatrixXd x = toeplitz ? toeplitz_rows(n, p, 0.5, rng) : uniform_matrix(n, p, rng);

  std::vector<std::string> regions;
  Eigen::VectorXd spatial = Eigen::VectorXd::Zero(n);
  if (map) {
    regions.reserve(static_cast<std::size_t>(n));
    const auto s = static_cast<long>(map->adjacency.regions.size());
    for (long i = 0; i < n; ++i) {
      const auto r = rng.uniform_int(s);
      regions.push_back(map->adjacency.regions[static_cast<std::size_t>(r)]);
      spatial[i] = map->field[r];
    }
  }

  PartData part;
  part.eta = true_eta(spec.id, x, spatial);
  part.params.resize(n, family.param_count);
  Eigen::MatrixXd y(n, 2);
  for (long i = 0; i < n; ++i) {
    part.params.row(i) =
        families::inverse_link(family, part.eta.row(i).transpose()).transpose();
    const auto [y1, y2] = scoring::sample_one(family, part.params.row(i).transpose(), rng);
    y(i, 0) = y1;
    y(i, 1) = y2;
  }

  for (int j = 0; j < p; ++j) part.table.add_numeric(covariate_name(j), x.col(j));
  if (map) part.table.add_labels("region", std::move(regions));
  part.table.add_numeric("y1", y.col(0));
  part.table.add_numeric("y2", y.col(1));
  return part;
}

TruthRecord truth_record(ScenarioId id) {
  TruthRecord t;
  switch (id) {
    case ScenarioId::bern_linear_low:
    case ScenarioId::bern_linear_high:
      t.informative = {{"x1", "x2", "x3", "x4"}, {"x1", "x2", "x3"}, {"x5", "x6"}};
      t.linear_slopes = {{{"x1", 1.0}, {"x2", 1.5}, {"x3", -1.0}, {"x4", 1.5}},
                         {{"x1", 2.0}, {"x2", -1.0}, {"x3", 1.5}},
                         {{"x5", 1.0}, {"x6", 1.5}}};
      t.intercepts = (Eigen::VectorXd(3) << 0.0, 0.0, -1.5).finished();
      break;
    case ScenarioId::pois_linear:
      t.informative = {{"x1", "x2", "x3"}, {"x1", "x3", "x4", "x5"}, {"x5", "x6", "x7"}};
      t.linear_slopes = {{{"x1", -1.0}, {"x2", 0.5}, {"x3", 1.5}},
                         {{"x1", 2.0}, {"x3", -1.0}, {"x4", 1.5}, {"x5", 1.0}},
                         {{"x5", 0.5}, {"x6", 1.0}, {"x7", -0.5}}};
      t.intercepts = Eigen::VectorXd::Zero(3);
      break;
    case ScenarioId::pois_nonlinear:
      t.informative = {{"x1"}, {"x2"}, {"x3"}};
      t.linear_slopes = {{}, {}, {}};
      t.intercepts = Eigen::VectorXd::Zero(3);
      break;
    case ScenarioId::gauss_spatial:
      t.informative = {{"x1", "x6", "x7", "region"},
                       {"x2", "x7", "x8", "region"},
                       {"x3", "x8", "region"},
                       {"x4", "x9", "region"},
                       {"x5", "x10", "region"}};
      t.linear_slopes = {{{"x6", 1.0}, {"x7", 0.5}},
                         {{"x7", 0.5}, {"x8", 1.0}},
                         {{"x8", -0.5}},
                         {{"x9", 0.25}},
                         {{"x10", 1.0}}};
      t.intercepts = (Eigen::VectorXd(5) << 0.0, 2.0, 0.0, 0.0, 0.0).finished();
      t.has_spatial = true;
      break;
  }
  return t;
}

}  // namespace

std::string scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::bern_linear_low:
      return "bern_linear_low";
    case ScenarioId::bern_linear_high:
      return "bern_linear_high";
    case ScenarioId::pois_linear:
      return "pois_linear";
    case ScenarioId::pois_nonlinear:
      return "pois_nonlinear";
    case ScenarioId::gauss_spatial:
      return "gauss_spatial";
  }
  return "?";
}

ScenarioId scenario_from_name(const std::string& name) {
  for (const auto id : {ScenarioId::bern_linear_low, ScenarioId::bern_linear_high,
                        ScenarioId::pois_linear, ScenarioId::pois_nonlinear,
                        ScenarioId::gauss_spatial}) {
    if (scenario_name(id) == name) return id;
  }
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

std::vector<std::string> scenario_names() {
  return {"bern_linear_low", "bern_linear_high", "pois_linear", "pois_nonlinear",
          "gauss_spatial"};
}

int default_p(ScenarioId id) {
  switch (id) {
    case ScenarioId::bern_linear_high:
      return 1000;
    default:
      return 10;
  }
}

Eigen::MatrixXd toeplitz_mvn(long n, int p, double rho, std::uint64_t seed) {
  if (n < 1 || p < 1) throw std::invalid_argument("n and p must be positive");
  if (!(rho > -1.0 && rho < 1.0)) throw std::invalid_argument("|rho| must be < 1");
  Rng rng(seed);
  return toeplitz_rows(n, p, rho, rng);
}

SpatialMap spatial_map(int grid_rows, int grid_cols) {
  if (grid_rows < 1 || grid_cols < 1) throw std::invalid_argument("grid must be non-empty");
  SpatialMap map;
  const int s = grid_rows * grid_cols;
  map.centroids.resize(s, 2);
  char label[16];
  for (int r = 0; r < grid_rows; ++r) {
    for (int c = 0; c < grid_cols; ++c) {
      const int id = r * grid_cols + c;
      std::snprintf(label, sizeof(label), "r%03d", id);
      map.adjacency.regions.emplace_back(label);
      map.centroids(id, 0) = static_cast<double>(c);
      map.centroids(id, 1) = static_cast<double>(r);
      if (c + 1 < grid_cols) map.adjacency.edges.push_back({id, id + 1});
      if (r + 1 < grid_rows) map.adjacency.edges.push_back({id, id + grid_cols});
    }
  }
  // standardize centroid coordinates over regions
  for (int d = 0; d < 2; ++d) {
    const double mean = map.centroids.col(d).mean();
    const double sd =
        std::sqrt((map.centroids.col(d).array() - mean).square().sum() / static_cast<double>(s));
    if (sd > 0.0) {
      map.centroids.col(d) = (map.centroids.col(d).array() - mean) / sd;
    } else {
      map.centroids.col(d).setZero();
    }
  }
  map.field.resize(s);
  for (int i = 0; i < s; ++i) {
    map.field[i] = std::sin(map.centroids(i, 0)) * std::cos(0.5 * map.centroids(i, 1));
  }
  return map;
}

SimulatedDataset make_scenario(const ScenarioSpec& spec) {
  SimulatedDataset out;
  const bool gaussian = spec.id == ScenarioId::gauss_spatial;
  const bool poisson = spec.id == ScenarioId::pois_linear || spec.id == ScenarioId::pois_nonlinear;
  out.family = FamilySpec::make(gaussian ? FamilyId::gaussian2
                                         : poisson ? FamilyId::poisson2 : FamilyId::bernoulli2);
  out.p = spec.p > 0 ? spec.p : default_p(spec.id);
  if (out.p < 10) throw std::invalid_argument("scenarios need at least 10 covariates");
  if (spec.n_train < 2 || spec.n_val < 0 || spec.n_test < 0) {
    throw std::invalid_argument("invalid dataset sizes");
  }

  const SpatialMap* map = nullptr;
  if (gaussian) {
    out.map = spatial_map(spec.grid_rows, spec.grid_cols);
    map = &out.map;
  }

  auto train = build_part(spec, out.family, out.p, spec.n_train, map, hash_seed(spec.seed, 1));
  auto val = build_part(spec, out.family, out.p, spec.n_val, map, hash_seed(spec.seed, 2));
  auto test = build_part(spec, out.family, out.p, spec.n_test, map, hash_seed(spec.seed, 3));
  out.train = std::move(train.table);
  out.val = std::move(val.table);
  out.test = std::move(test.table);
  out.eta_train = std::move(train.eta);
  out.eta_val = std::move(val.eta);
  out.eta_test = std::move(test.eta);
  out.params_train = std::move(train.params);
  out.params_val = std::move(val.params);
  out.params_test = std::move(test.params);
  out.truth = truth_record(spec.id);
  return out;
}

std::vector<std::vector<bl::BaseLearnerSpec>> scenario_learners(ScenarioId id, int p) {
  auto linear_on = [](int j) {
    bl::BaseLearnerSpec s;
    s.kind = bl::Kind::linear;
    s.covariate = covariate_name(j);
    return s;
  };
  auto pspline_on = [](int j) {
    bl::BaseLearnerSpec s;
    s.kind = bl::Kind::pspline;
    s.covariate = covariate_name(j);
    return s;
  };

  std::vector<std::vector<bl::BaseLearnerSpec>> layout;
  switch (id) {
    case ScenarioId::bern_linear_low:
    case ScenarioId::bern_linear_high:
    case ScenarioId::pois_linear: {
      std::vector<bl::BaseLearnerSpec> per_param;
      for (int j = 0; j < p; ++j) per_param.push_back(linear_on(j));
      layout.assign(3, per_param);
      break;
    }
    case ScenarioId::pois_nonlinear: {
      std::vector<bl::BaseLearnerSpec> per_param;
      for (int j = 0; j < p; ++j) per_param.push_back(pspline_on(j));
      layout.assign(3, per_param);
      break;
    }
    case ScenarioId::gauss_spatial: {
      std::vector<bl::BaseLearnerSpec> per_param;
      for (int j = 0; j < 5 && j < p; ++j) per_param.push_back(pspline_on(j));
      for (int j = 5; j < p; ++j) per_param.push_back(linear_on(j));
      bl::BaseLearnerSpec mrf;
      mrf.kind = bl::Kind::mrf;
      mrf.covariate = "region";
      per_param.push_back(mrf);
      layout.assign(5, per_param);
      break;
    }
  }
  return layout;
}

std::vector<std::optional<double>> independence_overrides(const FamilySpec& family) {
  switch (family.id) {
    case FamilyId::bernoulli2:
      return {std::nullopt, std::nullopt, 0.0};  // psi = 1
    case FamilyId::poisson2:
      return {std::nullopt, std::nullopt, -30.0};  // lambda3 ~ 1e-13
    case FamilyId::gaussian2:
      return {std::nullopt, std::nullopt, std::nullopt, std::nullopt, 0.0};  // rho = 0
  }
  throw std::invalid_argument("unknown family id");
}

}  // namespace bivboost::simulate
