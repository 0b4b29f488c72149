#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace bivboost::families {

// Response families. Parameter order is fixed:
//   bernoulli2: (p1, p2, psi)              -- marginal probabilities, odds ratio
//   poisson2:   (lambda1, lambda2, lambda3) -- component rates, shared rate
//   gaussian2:  (mu1, mu2, sigma1, sigma2, rho)
enum class FamilyId { bernoulli2, poisson2, gaussian2 };

struct FamilySpec {
  FamilyId id;
  int param_count;
  std::vector<std::string> parameter_names;

  static FamilySpec make(FamilyId id);
  static FamilySpec from_name(const std::string& name);
  std::string name() const;
};

struct BivariateBinaryParams {
  double p1, p2, psi;
};

struct CellProbabilities {
  double p00, p01, p10, p11;
  bool clamped = false;  // any cell hit the floor and the table was renormalized
};

struct BivariatePoissonParams {
  double lambda1, lambda2, lambda3;
};

struct BivariateGaussianParams {
  double mu1, mu2, sigma1, sigma2, rho;
};

// Arguments of log/logit links beyond this bound raise a domain error.
inline constexpr double kLinkSaturation = 700.0;
// Joint cells below this floor are clamped (keeps log-likelihoods finite in
// saturated boosting steps).
inline constexpr double kCellFloor = 1e-12;
// |rho| is capped at 1 - kRhoMargin so the covariance stays well conditioned.
inline constexpr double kRhoMargin = 1e-10;

// Predictor -> parameter maps. Throws std::domain_error when a log/logit
// argument exceeds kLinkSaturation or eta is non-finite.
Eigen::VectorXd inverse_link(const FamilySpec& family, const Eigen::VectorXd& eta);
// Parameter -> predictor maps (round-trips inverse_link away from saturation).
Eigen::VectorXd forward_link(const FamilySpec& family, const Eigen::VectorXd& params);

BivariateBinaryParams binary_params(const Eigen::VectorXd& params);
BivariatePoissonParams poisson_params(const Eigen::VectorXd& params);
BivariateGaussianParams gaussian_params(const Eigen::VectorXd& params);

// Joint cell table from marginals and odds ratio (Dale's formula, evaluated
// in a root form that is stable through psi = 1).
CellProbabilities cell_probs(const BivariateBinaryParams& params);

double bernoulli_logpmf(int y1, int y2, const BivariateBinaryParams& params,
                        bool* clamped = nullptr);
double poisson_logpmf(long y1, long y2, const BivariatePoissonParams& params);
double gaussian_logpdf(double y1, double y2, const BivariateGaussianParams& params);

// Gradients of the log-likelihood with respect to the additive predictors
// (chain rule through the links is already applied).
Eigen::Vector3d bernoulli_grad(int y1, int y2, const Eigen::Vector3d& eta);
Eigen::Vector3d poisson_grad(long y1, long y2, const Eigen::Vector3d& eta);
Eigen::Matrix<double, 5, 1> gaussian_grad(double y1, double y2,
                                          const Eigen::Matrix<double, 5, 1>& eta);

// Generic entry points used by the boosting engine and the scorers.
double log_density(const FamilySpec& family, double y1, double y2,
                   const Eigen::VectorXd& params);
Eigen::VectorXd predictor_gradient(const FamilySpec& family, double y1, double y2,
                                   const Eigen::VectorXd& eta);

// Boosting risk: -sum_i log density(y_i | inverse_link(eta_i)). Row errors are
// rethrown with the row index attached. `clamp_warnings`, when given, counts
// rows whose Bernoulli cells were clamped.
double negloglik(const FamilySpec& family, const Eigen::MatrixXd& responses,
                 const Eigen::MatrixXd& eta, long* clamp_warnings = nullptr);

// Same risk evaluated from fitted parameters instead of predictors.
double negloglik_params(const FamilySpec& family, const Eigen::MatrixXd& responses,
                        const Eigen::MatrixXd& params);

// Checks response columns against the family (binary, counts, reals).
// Throws std::invalid_argument naming the first offending row.
void validate_responses(const FamilySpec& family, const Eigen::MatrixXd& responses);

}  // namespace bivboost::families
