#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bivboost/common.hpp"
#include "bivboost/families.hpp"
#include "bivboost/simulate.hpp"

using namespace bivboost;
using namespace bivboost::simulate;

TEST_CASE("toeplitz covariates: single column and empirical covariance") {
  const Eigen::MatrixXd single = toeplitz_mvn(100000, 1, 0.5, 11);
  CHECK(std::abs(single.col(0).mean()) < 3.0 / std::sqrt(100000.0));
  CHECK(std::abs(single.col(0).squaredNorm() / 100000.0 - 1.0) < 0.02);

  const long n = 100000;
  const Eigen::MatrixXd x = toeplitz_mvn(n, 4, 0.5, 17);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const double target = std::pow(0.5, std::abs(a - b));
      const double cov = (x.col(a).array() * x.col(b).array()).mean();
      // 3 standard errors for a product-moment estimate
      CHECK(std::abs(cov - target) < 3.0 * 1.5 / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST_CASE("spatial map: edges, centroids and field evaluation") {
  const auto tiny = spatial_map(1, 2);
  CHECK(tiny.adjacency.regions.size() == 2);
  CHECK(tiny.adjacency.edges.size() == 1);

  const auto grid = spatial_map(4, 4);
  CHECK(grid.adjacency.regions.size() == 16);
  CHECK(grid.adjacency.edges.size() == 24);  // rook count
  CHECK(grid.adjacency.n_components() == 1);

  // standardized coordinates and the field formula
  CHECK(std::abs(grid.centroids.col(0).mean()) < 1e-12);
  CHECK(std::abs(grid.centroids.col(1).mean()) < 1e-12);
  for (int i = 0; i < 16; ++i) {
    const double expected =
        std::sin(grid.centroids(i, 0)) * std::cos(0.5 * grid.centroids(i, 1));
    CHECK(grid.field[i] == doctest::Approx(expected));
    CHECK(std::abs(grid.field[i]) <= 1.0);
  }
}

TEST_CASE("scenario truth: printed predictor values") {
  // poisson linear: lambda3 weights on x5, x6, x7
  ScenarioSpec spec;
  spec.id = ScenarioId::pois_linear;
  spec.n_train = 50;
  spec.n_val = 10;
  spec.n_test = 10;
  const auto data = make_scenario(spec);
  CHECK(data.truth.linear_slopes[2].at("x5") == 0.5);
  CHECK(data.truth.linear_slopes[2].at("x6") == 1.0);
  CHECK(data.truth.linear_slopes[2].at("x7") == -0.5);
  for (long i = 0; i < 20; ++i) {
    const double expected = 0.5 * data.train.numeric("x5")[i] + data.train.numeric("x6")[i] -
                            0.5 * data.train.numeric("x7")[i];
    CHECK(data.eta_train(i, 2) == doctest::Approx(expected).epsilon(1e-12));
  }
  // true parameters are the predictors pushed through the inverse links
  for (long i = 0; i < 20; ++i) {
    CHECK(data.params_train(i, 2) == doctest::Approx(std::exp(data.eta_train(i, 2))));
  }
}

TEST_CASE("bernoulli scenario at the origin row") {
  // with all covariates at zero the marginals are 1/2 and the association
  // reduces to its intercept
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 10);
  const auto family = families::FamilySpec::make(families::FamilyId::bernoulli2);
  Eigen::VectorXd eta(3);
  eta << 0.0, 0.0, -1.5;  // predictors vanish except the psi intercept
  const Eigen::VectorXd params = families::inverse_link(family, eta);
  CHECK(params[0] == doctest::Approx(0.5));
  CHECK(params[1] == doctest::Approx(0.5));
  CHECK(params[2] == doctest::Approx(std::exp(-1.5)));
}

TEST_CASE("gaussian scenario: printed mu2 predictor at the midpoint") {
  ScenarioSpec spec;
  spec.id = ScenarioId::gauss_spatial;
  spec.n_train = 40;
  spec.n_val = 10;
  spec.n_test = 10;
  spec.grid_rows = 4;
  spec.grid_cols = 4;
  const auto data = make_scenario(spec);

  // recompute mu2 for the first rows: 2 + 3cos(2 x2) + 0.5 x7 + x8 + f
  const auto& x2 = data.train.numeric("x2");
  const auto& x7 = data.train.numeric("x7");
  const auto& x8 = data.train.numeric("x8");
  const auto& regions = data.train.labels("region");
  for (long i = 0; i < 20; ++i) {
    const int r = data.map.adjacency.index_of(regions[static_cast<std::size_t>(i)]);
    const double expected =
        2.0 + 3.0 * std::cos(2.0 * x2[i]) + 0.5 * x7[i] + x8[i] + data.map.field[r];
    CHECK(data.eta_train(i, 1) == doctest::Approx(expected).epsilon(1e-12));
  }

  // at x = 0.5 and zero region effect the value is 2 + 3cos(1) + 0.75
  const double at_mid = 2.0 + 3.0 * std::cos(1.0) + 0.5 * 0.5 + 0.5;
  CHECK(at_mid == doctest::Approx(2.0 + 3.0 * std::cos(1.0) + 0.75));
}

TEST_CASE("seeded generation is reproducible and seeds differ across parts") {
  ScenarioSpec spec;
  spec.id = ScenarioId::bern_linear_low;
  spec.n_train = 30;
  spec.n_val = 20;
  spec.n_test = 10;
  spec.seed = 5;
  const auto a = make_scenario(spec);
  const auto b = make_scenario(spec);
  CHECK((a.train.numeric("x1") - b.train.numeric("x1")).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.train.numeric("y1") - b.train.numeric("y1")).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.val.numeric("x1") - a.train.numeric("x1").head(20)).cwiseAbs().maxCoeff() > 0.0);

  spec.seed = 6;
  const auto c = make_scenario(spec);
  CHECK((a.train.numeric("x1") - c.train.numeric("x1")).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("truth parameters beat a perturbed parameter matrix on average") {
  int wins = 0;
  for (int rep = 0; rep < 20; ++rep) {
    ScenarioSpec spec;
    spec.id = ScenarioId::pois_linear;
    spec.n_train = 200;
    spec.n_val = 10;
    spec.n_test = 10;
    spec.seed = 100 + static_cast<std::uint64_t>(rep);
    const auto data = make_scenario(spec);
    const Eigen::MatrixXd y = data.train.responses("y1", "y2");
    const double truth_nll = families::negloglik(data.family, y, data.eta_train);
    const Eigen::MatrixXd perturbed = data.eta_train.array() + 0.5;
    const double perturbed_nll = families::negloglik(data.family, y, perturbed);
    if (truth_nll < perturbed_nll) ++wins;
  }
  CHECK(wins >= 19);
}

TEST_CASE("truth record matches the nonzero predictor terms") {
  ScenarioSpec spec;
  spec.id = ScenarioId::gauss_spatial;
  spec.n_train = 20;
  spec.n_val = 10;
  spec.n_test = 10;
  spec.grid_rows = 3;
  spec.grid_cols = 3;
  const auto data = make_scenario(spec);
  CHECK(data.truth.informative[4] ==
        std::vector<std::string>{"x5", "x10", "region"});
  CHECK(data.truth.intercepts[1] == 2.0);
  CHECK(data.truth.has_spatial);
}

TEST_CASE("scenario learner layouts") {
  const auto linear_layout = scenario_learners(ScenarioId::pois_linear, 10);
  CHECK(linear_layout.size() == 3);
  CHECK(linear_layout[0].size() == 10);
  CHECK(linear_layout[0][0].kind == bl::Kind::linear);

  const auto smooth_layout = scenario_learners(ScenarioId::pois_nonlinear, 10);
  CHECK(smooth_layout[1][3].kind == bl::Kind::pspline);

  const auto gauss_layout = scenario_learners(ScenarioId::gauss_spatial, 10);
  CHECK(gauss_layout.size() == 5);
  CHECK(gauss_layout[0].size() == 11);
  CHECK(gauss_layout[0][0].kind == bl::Kind::pspline);
  CHECK(gauss_layout[0][5].kind == bl::Kind::linear);
  CHECK(gauss_layout[0][10].kind == bl::Kind::mrf);

  const auto overrides =
      independence_overrides(families::FamilySpec::make(families::FamilyId::poisson2));
  CHECK(overrides[2].has_value());
  CHECK(std::exp(*overrides[2]) < 1e-12);
}

#include "bivboost/engine.hpp"
#include "bivboost/scoring.hpp"

TEST_CASE("smooth poisson scenario: spline boosting recovers the informative effects") {
  ScenarioSpec spec;
  spec.id = ScenarioId::pois_nonlinear;
  spec.seed = 2;
  spec.n_train = 500;
  spec.n_val = 400;
  spec.n_test = 300;
  const auto data = make_scenario(spec);

  engine::ModelSpec mspec;
  mspec.family = data.family;
  mspec.response_columns = {"y1", "y2"};
  mspec.learners = scenario_learners(spec.id, data.p);
  mspec.m_max = 400;
  mspec.threads = 2;
  mspec.offsets_mode = engine::OffsetsMode::zero;
  mspec.stabilization = engine::Stabilization::l2;
  const auto model = engine::fit(mspec, data.train, &data.val);

  const auto report = engine::coefficients(model);
  CHECK(report.effects[0].count("x1") == 1);
  CHECK(report.effects[1].count("x2") == 1);
  CHECK(report.effects[2].count("x3") == 1);

  // the fitted model should get close to the truth risk on test data
  const Eigen::MatrixXd ytest = data.test.responses("y1", "y2");
  const double fit_nll =
      scoring::nll_score(data.family, engine::predict(model, data.test).params, ytest);
  const double truth_nll = scoring::nll_score(data.family, data.params_test, ytest);
  CHECK(fit_nll < truth_nll * 1.05);
  CHECK(fit_nll > truth_nll * 0.90);
}
