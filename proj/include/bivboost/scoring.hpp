#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bivboost/common.hpp"
#include "bivboost/families.hpp"

namespace bivboost::scoring {

// Mann-Whitney AUC with ties counted one half. Throws when only one class is
// present.
double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

// Mean squared difference between probabilities and binary outcomes.
double brier(const Eigen::VectorXd& probabilities, const Eigen::VectorXd& labels);

// Per-margin mean squared error of the predicted marginal means.
std::pair<double, double> msep(const Eigen::MatrixXd& predicted_means,
                               const Eigen::MatrixXd& responses);

// Predicted marginal means per family (Poisson margins are lambda_k + lambda3).
Eigen::MatrixXd marginal_means(const families::FamilySpec& family,
                               const Eigen::MatrixXd& params);

// One draw from the family law; consumes the stream.
std::pair<double, double> sample_one(const families::FamilySpec& family,
                                     const Eigen::VectorXd& params, Rng& rng);

// count x 2 response draws under a fixed parameter vector.
Eigen::MatrixXd sample(const families::FamilySpec& family, const Eigen::VectorXd& params,
                       long count, std::uint64_t seed);

// Energy score of one observation against an explicit predictive sample:
//   mean_s ||x_s - y||  -  1/(2 S^2) sum_{s,t} ||x_s - x_t||.
double energy_score_from_samples(const Eigen::MatrixXd& samples, double y1, double y2);

// Monte Carlo energy score averaged over observations. Each row draws
// mc_samples from its fitted predictive distribution using a per-row seed
// derived from `seed`, so results are independent of evaluation order.
double energy_score(const families::FamilySpec& family, const Eigen::MatrixXd& params,
                    const Eigen::MatrixXd& responses, int mc_samples, std::uint64_t seed,
                    int threads = 1, std::vector<double>* per_row = nullptr);

// Held-out risk from fitted parameters (sum of negative log contributions).
double nll_score(const families::FamilySpec& family, const Eigen::MatrixXd& params,
                 const Eigen::MatrixXd& responses, std::vector<double>* per_row = nullptr);

struct ScoreRow {
  std::string metric;
  std::string margin;  // "y1", "y2" or "joint"
  double value = 0.0;
  double sd = std::numeric_limits<double>::quiet_NaN();  // sd of per-row contributions
};

struct ScoreReport {
  std::vector<ScoreRow> rows;
  long n = 0;
  std::string family;
  int mc_samples = 0;
  std::uint64_t seed = 0;

  std::string to_csv() const;  // header metric,margin,value,sd
};

// Assembles the default metric set for the family: AUC/Brier per margin for
// binary responses, MSEP per margin for count/continuous ones, plus the joint
// negative log-likelihood and energy score.
ScoreReport score_report(const families::FamilySpec& family, const Eigen::MatrixXd& params,
                         const Eigen::MatrixXd& responses,
                         const std::vector<std::string>& metrics, int mc_samples,
                         std::uint64_t seed, int threads = 1);

}  // namespace bivboost::scoring
