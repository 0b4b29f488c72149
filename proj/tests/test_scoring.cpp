#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bivboost/common.hpp"
#include "bivboost/scoring.hpp"

using namespace bivboost;
using namespace bivboost::scoring;
using families::FamilyId;
using families::FamilySpec;

TEST_CASE("auc: separation, ties and the pair-counting oracle") {
  Eigen::VectorXd labels(6), scores(6);
  labels << 0, 0, 0, 1, 1, 1;
  scores << 0.1, 0.2, 0.3, 0.7, 0.8, 0.9;
  CHECK(auc(scores, labels) == doctest::Approx(1.0));

  scores.setConstant(0.4);
  CHECK(auc(scores, labels) == doctest::Approx(0.5));

  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 40;
    Eigen::VectorXd s(n), l(n);
    for (int i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform() * 10.0) / 10.0;  // force ties
      l[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
    }
    if (l.sum() == 0 || l.sum() == n) continue;
    double pairs = 0.0, wins = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (l[i] == 1.0 && l[j] == 0.0) {
          pairs += 1.0;
          if (s[i] > s[j]) wins += 1.0;
          else if (s[i] == s[j]) wins += 0.5;
        }
      }
    }
    CHECK(auc(s, l) == doctest::Approx(wins / pairs).epsilon(1e-12));
  }

  Eigen::VectorXd one_class = Eigen::VectorXd::Zero(6);
  CHECK_THROWS(auc(scores, one_class));
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  Rng rng(5);
  const int n = 200;
  Eigen::VectorXd s(n), l(n);
  for (int i = 0; i < n; ++i) {
    s[i] = rng.normal();
    l[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
  }
  const double base = auc(s, l);
  Eigen::VectorXd t1 = s.array().exp();
  Eigen::VectorXd t2 = 3.0 * s.array() - 7.0;
  CHECK(auc(t1, l) == doctest::Approx(base).epsilon(1e-14));
  CHECK(auc(t2, l) == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("brier score basics and oracle") {
  Eigen::VectorXd labels(4);
  labels << 0, 1, 1, 0;
  CHECK(brier(labels, labels) == doctest::Approx(0.0));
  CHECK(brier(Eigen::VectorXd::Constant(4, 0.5), labels) == doctest::Approx(0.25));

  Rng rng(7);
  Eigen::VectorXd p(50), l(50);
  for (int i = 0; i < 50; ++i) {
    p[i] = rng.uniform();
    l[i] = rng.uniform() < p[i] ? 1.0 : 0.0;
  }
  double direct = 0.0;
  for (int i = 0; i < 50; ++i) direct += std::pow(p[i] - l[i], 2);
  CHECK(brier(p, l) == doctest::Approx(direct / 50.0).epsilon(1e-14));
}

TEST_CASE("msep: perfect fit, constant predictor, loop oracle") {
  Rng rng(11);
  const int n = 80;
  Eigen::MatrixXd y(n, 2);
  for (int i = 0; i < n; ++i) {
    y(i, 0) = rng.normal();
    y(i, 1) = 2.0 + rng.normal();
  }
  auto [a, b] = msep(y, y);
  CHECK(a == 0.0);
  CHECK(b == 0.0);

  Eigen::MatrixXd mean_pred(n, 2);
  mean_pred.col(0).setConstant(y.col(0).mean());
  mean_pred.col(1).setConstant(y.col(1).mean());
  const auto [v1, v2] = msep(mean_pred, y);
  const double var1 = (y.col(0).array() - y.col(0).mean()).square().sum() / n;
  CHECK(v1 == doctest::Approx(var1).epsilon(1e-12));

  Eigen::MatrixXd pred = y;
  for (int i = 0; i < n; ++i) pred(i, 0) += rng.normal();
  double direct = 0.0;
  for (int i = 0; i < n; ++i) direct += std::pow(pred(i, 0) - y(i, 0), 2);
  CHECK(msep(pred, y).first == doctest::Approx(direct / n).epsilon(1e-12));
  (void)v2;
}

TEST_CASE("poisson sampler: covariance matches the shared rate") {
  const auto family = FamilySpec::make(FamilyId::poisson2);
  Eigen::VectorXd params(3);
  params << 2.0, 3.0, 1.0;
  const long n = 100000;
  const Eigen::MatrixXd draws = sample(family, params, n, 1234);

  const double m1 = draws.col(0).mean();
  const double m2 = draws.col(1).mean();
  CHECK(m1 == doctest::Approx(3.0).epsilon(0.02));
  CHECK(m2 == doctest::Approx(4.0).epsilon(0.02));

  double cov = 0.0, m22 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double d1 = draws(i, 0) - m1;
    const double d2 = draws(i, 1) - m2;
    cov += d1 * d2;
    m22 += d1 * d1 * d2 * d2;
  }
  cov /= n;
  m22 /= n;
  const double se = std::sqrt((m22 - cov * cov) / n);
  CHECK(std::abs(cov - 1.0) < 3.0 * se);
}

TEST_CASE("bernoulli sampler: independent cells at psi = 1") {
  const auto family = FamilySpec::make(FamilyId::bernoulli2);
  Eigen::VectorXd params(3);
  params << 0.6, 0.3, 1.0;
  const long n = 100000;
  const Eigen::MatrixXd draws = sample(family, params, n, 99);
  double n11 = 0;
  for (long i = 0; i < n; ++i) {
    if (draws(i, 0) == 1.0 && draws(i, 1) == 1.0) ++n11;
  }
  const double p11 = n11 / static_cast<double>(n);
  const double se = std::sqrt(0.18 * 0.82 / static_cast<double>(n));
  CHECK(std::abs(p11 - 0.18) < 3.0 * se);
}

TEST_CASE("gaussian sampler: correlation converges") {
  const auto family = FamilySpec::make(FamilyId::gaussian2);
  Eigen::VectorXd params(5);
  params << 1.0, -2.0, 1.5, 0.5, 0.6;
  const long n = 100000;
  const Eigen::MatrixXd draws = sample(family, params, n, 2024);
  const double m1 = draws.col(0).mean();
  const double m2 = draws.col(1).mean();
  double v1 = 0, v2 = 0, cv = 0;
  for (long i = 0; i < n; ++i) {
    const double d1 = draws(i, 0) - m1;
    const double d2 = draws(i, 1) - m2;
    v1 += d1 * d1;
    v2 += d2 * d2;
    cv += d1 * d2;
  }
  const double rho_hat = cv / std::sqrt(v1 * v2);
  const double se = (1.0 - 0.36) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(rho_hat - 0.6) < 3.0 * se);
}

TEST_CASE("energy score: degenerate forecast and two-point enumeration") {
  Eigen::MatrixXd point(4, 2);
  point << 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0;
  CHECK(energy_score_from_samples(point, 1.0, 2.0) == 0.0);

  // equal-weight two-point predictive {(0,0), (1,0)} against y = (0,0):
  // exact value by enumeration is 1/2 - 1/4 = 1/4
  Eigen::MatrixXd two(2, 2);
  two << 0.0, 0.0, 1.0, 0.0;
  CHECK(energy_score_from_samples(two, 0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-12));

  // the same with multiplicity keeps the value
  Eigen::MatrixXd rep(6, 2);
  rep << 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0;
  CHECK(energy_score_from_samples(rep, 0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("energy score matches the closed form for a standard normal forecast") {
  // For X, X' iid standard bivariate normal and y = 0:
  //   E||X - y|| = sqrt(pi/2), E||X - X'|| = sqrt(pi),
  // so ES = sqrt(pi/2) - sqrt(pi)/2.
  const auto family = FamilySpec::make(FamilyId::gaussian2);
  Eigen::MatrixXd params(1, 5);
  params << 0.0, 0.0, 1.0, 1.0, 0.0;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(1, 2);

  const int s = 100000;
  const double es = energy_score(family, params, y, s, 7, 2);
  const double expected = std::sqrt(3.14159265358979323846 / 2.0) -
                          0.5 * std::sqrt(3.14159265358979323846);
  // Monte Carlo tolerance ~ 3 sd of the estimator
  CHECK(std::abs(es - expected) < 0.01);
}

TEST_CASE("energy score is seed-reproducible and order-independent by row") {
  const auto family = FamilySpec::make(FamilyId::poisson2);
  Rng rng(17);
  Eigen::MatrixXd params(20, 3), y(20, 2);
  for (int i = 0; i < 20; ++i) {
    params(i, 0) = 1.0 + rng.uniform();
    params(i, 1) = 2.0 + rng.uniform();
    params(i, 2) = 0.5 * rng.uniform();
    y(i, 0) = rng.poisson(params(i, 0));
    y(i, 1) = rng.poisson(params(i, 1));
  }
  const double a = energy_score(family, params, y, 200, 42, 1);
  const double b = energy_score(family, params, y, 200, 42, 2);
  CHECK(a == b);  // bit-identical across thread counts

  std::vector<double> rows;
  energy_score(family, params, y, 200, 42, 1, &rows);
  for (const double r : rows) CHECK(r >= 0.0);
}

TEST_CASE("nll score equals the families risk and doubles under duplication") {
  const auto family = FamilySpec::make(FamilyId::gaussian2);
  Eigen::MatrixXd params(2, 5), y(2, 2);
  params << 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 2.0, 0.5, 0.3;
  y << 0.3, -0.2, 1.5, 0.9;
  const double nll = nll_score(family, params, y);
  double direct = 0.0;
  for (int i = 0; i < 2; ++i) {
    direct -= families::log_density(family, y(i, 0), y(i, 1), params.row(i).transpose());
  }
  CHECK(nll == doctest::Approx(direct).epsilon(1e-14));

  Eigen::MatrixXd params2(4, 5), y2(4, 2);
  params2 << params, params;
  y2 << y, y;
  CHECK(nll_score(family, params2, y2) == doctest::Approx(2.0 * nll).epsilon(1e-14));
}

TEST_CASE("score report assembles the family's default metrics as CSV") {
  const auto family = FamilySpec::make(FamilyId::bernoulli2);
  Rng rng(23);
  const int n = 300;
  Eigen::MatrixXd params(n, 3), y(n, 2);
  for (int i = 0; i < n; ++i) {
    params(i, 0) = 0.2 + 0.6 * rng.uniform();
    params(i, 1) = 0.2 + 0.6 * rng.uniform();
    params(i, 2) = 1.0;
    y(i, 0) = rng.uniform() < params(i, 0) ? 1.0 : 0.0;
    y(i, 1) = rng.uniform() < params(i, 1) ? 1.0 : 0.0;
  }
  const auto report = score_report(family, params, y, {"auc", "brier", "nll", "energy"}, 100, 5, 1);
  CHECK(report.rows.size() == 6);
  const std::string csv = report.to_csv();
  CHECK(csv.find("metric,margin,value,sd") == 0);
  CHECK(csv.find("auc,y1,") != std::string::npos);
  CHECK(csv.find("energy,joint,") != std::string::npos);

  for (const auto& row : report.rows) {
    if (row.metric == "auc") {
      CHECK(row.value >= 0.0);
      CHECK(row.value <= 1.0);
    }
    if (row.metric == "brier") {
      CHECK(row.value >= 0.0);
      CHECK(row.value <= 1.0);
    }
    if (row.metric == "energy") CHECK(row.value >= 0.0);
  }
}
