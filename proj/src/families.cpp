#include "bivboost/families.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bivboost/common.hpp"

namespace bivboost::families {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kProbEps = 1e-15;

void check_finite(const Eigen::VectorXd& eta) {
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (!std::isfinite(eta[i])) throw std::domain_error("predictor is not finite");
  }
}

void check_saturation(double eta, const char* what) {
  if (std::abs(eta) > kLinkSaturation) {
    std::ostringstream msg;
    msg << what << " link argument " << eta << " exceeds saturation bound " << kLinkSaturation;
    throw std::domain_error(msg.str());
  }
}

double sigmoid(double eta) {
  double p;
  if (eta >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-eta));
  } else {
    const double e = std::exp(eta);
    p = e / (1.0 + e);
  }
  return std::clamp(p, kProbEps, 1.0 - kProbEps);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double rho_from_eta(double eta) {
  const double rho_max = 1.0 - kRhoMargin;
  const double eta_cap = rho_max / std::sqrt((1.0 - rho_max) * (1.0 + rho_max));
  if (eta > eta_cap) return rho_max;
  if (eta < -eta_cap) return -rho_max;
  return eta / std::sqrt(1.0 + eta * eta);
}

double eta_from_rho(double rho) { return rho / std::sqrt((1.0 - rho) * (1.0 + rho)); }

// Dale quadratic pieces shared between cell_probs and the Bernoulli gradient:
// p11 is the root of (psi-1) x^2 - a x + psi p1 p2 with
// a = 1 + (p1+p2)(psi-1), and disc_root = sqrt(a^2 + b) with
// b = -4 psi (psi-1) p1 p2. For a > 0 the conjugate form 2 psi p1 p2 / (a + h)
// has no cancellation and passes smoothly through psi = 1; a <= 0 can only
// happen for psi < 1 where the textbook form is itself stable.
struct DaleRoot {
  double p11;
  double disc_root;
};

DaleRoot dale_p11(double p1, double p2, double psi) {
  const double a = 1.0 + (p1 + p2) * (psi - 1.0);
  const double b = -4.0 * psi * (psi - 1.0) * p1 * p2;
  const double h = std::sqrt(std::max(a * a + b, 0.0));
  double p11;
  if (a > 0.0) {
    p11 = 2.0 * psi * p1 * p2 / (a + h);
  } else {
    p11 = (a - h) / (2.0 * (psi - 1.0));
  }
  const double lo = std::max(0.0, p1 + p2 - 1.0);
  const double hi = std::min(p1, p2);
  return {std::clamp(p11, lo, hi), h};
}

void validate_binary_params(const BivariateBinaryParams& p) {
  if (!(p.p1 > 0.0 && p.p1 < 1.0) || !(p.p2 > 0.0 && p.p2 < 1.0)) {
    throw std::invalid_argument("marginal probabilities must lie in (0, 1)");
  }
  if (!(p.psi > 0.0)) throw std::invalid_argument("odds ratio must be positive");
}

// log sum_k choose(y1,k) choose(y2,k) k! r^k and the weighted mean of k under
// those terms, both in log space. Terms follow the recurrence
// t_{k+1}/t_k = (y1-k)(y2-k)/(k+1) * r.
struct PoissonSeries {
  double log_sum;    // log S, always >= 0 (k = 0 term is 1)
  double mean_k;     // sum k t_k / sum t_k
};

PoissonSeries poisson_series(long y1, long y2, double log_r, bool with_mean) {
  const long m = std::min(y1, y2);
  if (m == 0 || log_r == -std::numeric_limits<double>::infinity()) return {0.0, 0.0};

  double lt = 0.0;
  double max_lt = 0.0;
  thread_local std::vector<double> terms;
  terms.clear();
  terms.push_back(0.0);
  for (long k = 0; k < m; ++k) {
    lt += std::log(static_cast<double>(y1 - k)) + std::log(static_cast<double>(y2 - k)) -
          std::log(static_cast<double>(k + 1)) + log_r;
    terms.push_back(lt);
    max_lt = std::max(max_lt, lt);
  }
  double sum = 0.0;
  double ksum = 0.0;
  for (long k = 0; k <= m; ++k) {
    const double w = std::exp(terms[static_cast<std::size_t>(k)] - max_lt);
    sum += w;
    if (with_mean) ksum += static_cast<double>(k) * w;
  }
  return {max_lt + std::log(sum), with_mean ? ksum / sum : 0.0};
}

void validate_poisson_params(const BivariatePoissonParams& p) {
  if (!(p.lambda1 > 0.0) || !(p.lambda2 > 0.0)) {
    throw std::invalid_argument("poisson component rates must be positive");
  }
  if (!(p.lambda3 >= 0.0)) throw std::invalid_argument("shared rate must be non-negative");
}

void validate_gaussian_params(const BivariateGaussianParams& p) {
  if (!(p.sigma1 > 0.0) || !(p.sigma2 > 0.0)) {
    throw std::invalid_argument("standard deviations must be positive");
  }
  if (!(std::abs(p.rho) < 1.0)) throw std::invalid_argument("|rho| must be < 1");
}

long checked_count(double y, const char* which) {
  const double r = std::nearbyint(y);
  if (!(y >= 0.0) || r != y) {
    std::ostringstream msg;
    msg << which << " must be a non-negative integer, got " << y;
    throw std::domain_error(msg.str());
  }
  return static_cast<long>(r);
}

int checked_binary(double y, const char* which) {
  if (y != 0.0 && y != 1.0) {
    std::ostringstream msg;
    msg << which << " must be 0 or 1, got " << y;
    throw std::domain_error(msg.str());
  }
  return static_cast<int>(y);
}

}  // namespace

FamilySpec FamilySpec::make(FamilyId id) {
  switch (id) {
    case FamilyId::bernoulli2:
      return {id, 3, {"p1", "p2", "psi"}};
    case FamilyId::poisson2:
      return {id, 3, {"lambda1", "lambda2", "lambda3"}};
    case FamilyId::gaussian2:
      return {id, 5, {"mu1", "mu2", "sigma1", "sigma2", "rho"}};
  }
  throw std::invalid_argument("unknown family id");
}

FamilySpec FamilySpec::from_name(const std::string& name) {
  if (name == "bernoulli2") return make(FamilyId::bernoulli2);
  if (name == "poisson2") return make(FamilyId::poisson2);
  if (name == "gaussian2") return make(FamilyId::gaussian2);
  throw std::invalid_argument("unknown family '" + name +
                              "' (expected bernoulli2, poisson2 or gaussian2)");
}

std::string FamilySpec::name() const {
  switch (id) {
    case FamilyId::bernoulli2:
      return "bernoulli2";
    case FamilyId::poisson2:
      return "poisson2";
    case FamilyId::gaussian2:
      return "gaussian2";
  }
  return "?";
}

Eigen::VectorXd inverse_link(const FamilySpec& family, const Eigen::VectorXd& eta) {
  if (eta.size() != family.param_count) {
    throw std::invalid_argument("predictor vector has wrong length");
  }
  check_finite(eta);
  Eigen::VectorXd out(eta.size());
  switch (family.id) {
    case FamilyId::bernoulli2:
      check_saturation(eta[0], "p1");
      check_saturation(eta[1], "p2");
      check_saturation(eta[2], "psi");
      out << sigmoid(eta[0]), sigmoid(eta[1]), std::exp(eta[2]);
      break;
    case FamilyId::poisson2:
      check_saturation(eta[0], "lambda1");
      check_saturation(eta[1], "lambda2");
      check_saturation(eta[2], "lambda3");
      out << std::exp(eta[0]), std::exp(eta[1]), std::exp(eta[2]);
      break;
    case FamilyId::gaussian2:
      check_saturation(eta[2], "sigma1");
      check_saturation(eta[3], "sigma2");
      out << eta[0], eta[1], std::exp(eta[2]), std::exp(eta[3]), rho_from_eta(eta[4]);
      break;
  }
  return out;
}

Eigen::VectorXd forward_link(const FamilySpec& family, const Eigen::VectorXd& params) {
  if (params.size() != family.param_count) {
    throw std::invalid_argument("parameter vector has wrong length");
  }
  Eigen::VectorXd out(params.size());
  switch (family.id) {
    case FamilyId::bernoulli2:
      out << logit(params[0]), logit(params[1]), std::log(params[2]);
      break;
    case FamilyId::poisson2:
      out << std::log(params[0]), std::log(params[1]), std::log(params[2]);
      break;
    case FamilyId::gaussian2:
      out << params[0], params[1], std::log(params[2]), std::log(params[3]),
          eta_from_rho(params[4]);
      break;
  }
  return out;
}

BivariateBinaryParams binary_params(const Eigen::VectorXd& p) {
  return {p[0], p[1], p[2]};
}

BivariatePoissonParams poisson_params(const Eigen::VectorXd& p) {
  return {p[0], p[1], p[2]};
}

BivariateGaussianParams gaussian_params(const Eigen::VectorXd& p) {
  return {p[0], p[1], p[2], p[3], p[4]};
}

CellProbabilities cell_probs(const BivariateBinaryParams& params) {
  validate_binary_params(params);
  const auto root = dale_p11(params.p1, params.p2, params.psi);
  CellProbabilities c;
  c.p11 = root.p11;
  c.p10 = params.p1 - c.p11;
  c.p01 = params.p2 - c.p11;
  c.p00 = 1.0 - params.p1 - params.p2 + c.p11;
  c.clamped = false;
  if (c.p00 < kCellFloor || c.p01 < kCellFloor || c.p10 < kCellFloor || c.p11 < kCellFloor) {
    c.clamped = true;
    c.p00 = std::max(c.p00, kCellFloor);
    c.p01 = std::max(c.p01, kCellFloor);
    c.p10 = std::max(c.p10, kCellFloor);
    c.p11 = std::max(c.p11, kCellFloor);
    const double total = c.p00 + c.p01 + c.p10 + c.p11;
    c.p00 /= total;
    c.p01 /= total;
    c.p10 /= total;
    c.p11 /= total;
  }
  return c;
}

double bernoulli_logpmf(int y1, int y2, const BivariateBinaryParams& params, bool* clamped) {
  const CellProbabilities c = cell_probs(params);
  if (clamped) *clamped = c.clamped;
  if (y1 == 1 && y2 == 1) return std::log(c.p11);
  if (y1 == 1 && y2 == 0) return std::log(c.p10);
  if (y1 == 0 && y2 == 1) return std::log(c.p01);
  if (y1 == 0 && y2 == 0) return std::log(c.p00);
  throw std::domain_error("binary responses must be 0 or 1");
}

Eigen::Vector3d bernoulli_grad(int y1, int y2, const Eigen::Vector3d& eta) {
  const FamilySpec spec = FamilySpec::make(FamilyId::bernoulli2);
  const Eigen::VectorXd par = inverse_link(spec, eta);
  const double p1 = par[0], p2 = par[1], psi = par[2];
  const auto root = dale_p11(p1, p2, psi);
  const double p11 = root.p11;
  const double h = std::max(root.disc_root, 1e-300);

  // Implicit differentiation of the defining quadratic: at the selected root
  // the derivative of the quadratic in p11 equals -disc_root, so all three
  // partials stay finite through psi = 1.
  const double dp11_dp1 = (psi * p2 - (psi - 1.0) * p11) / h;
  const double dp11_dp2 = (psi * p1 - (psi - 1.0) * p11) / h;
  const double dp11_dpsi = (p1 - p11) * (p2 - p11) / h;

  double cell, d1, d2, s;
  if (y1 == 1 && y2 == 1) {
    cell = p11;
    d1 = dp11_dp1;
    d2 = dp11_dp2;
    s = 1.0;
  } else if (y1 == 1 && y2 == 0) {
    cell = p1 - p11;
    d1 = 1.0 - dp11_dp1;
    d2 = -dp11_dp2;
    s = -1.0;
  } else if (y1 == 0 && y2 == 1) {
    cell = p2 - p11;
    d1 = -dp11_dp1;
    d2 = 1.0 - dp11_dp2;
    s = -1.0;
  } else if (y1 == 0 && y2 == 0) {
    cell = 1.0 - p1 - p2 + p11;
    d1 = dp11_dp1 - 1.0;
    d2 = dp11_dp2 - 1.0;
    s = 1.0;
  } else {
    throw std::domain_error("binary responses must be 0 or 1");
  }
  cell = std::max(cell, kCellFloor);

  Eigen::Vector3d g;
  g[0] = d1 / cell * p1 * (1.0 - p1);
  g[1] = d2 / cell * p2 * (1.0 - p2);
  g[2] = s * dp11_dpsi / cell * psi;
  return g;
}

double poisson_logpmf(long y1, long y2, const BivariatePoissonParams& params) {
  validate_poisson_params(params);
  if (y1 < 0 || y2 < 0) throw std::domain_error("counts must be non-negative");
  const double l1 = params.lambda1, l2 = params.lambda2, l3 = params.lambda3;
  const double log_r = l3 == 0.0 ? -std::numeric_limits<double>::infinity()
                                 : std::log(l3) - std::log(l1) - std::log(l2);
  const PoissonSeries series = poisson_series(y1, y2, log_r, false);
  // Grouped so that lambda3 = 0 reduces to the exact sum of the two marginal
  // log-pmfs.
  const double m1 = -l1 + static_cast<double>(y1) * std::log(l1) - log_factorial(y1);
  const double m2 = -l2 + static_cast<double>(y2) * std::log(l2) - log_factorial(y2);
  return m1 + m2 + (-l3 + series.log_sum);
}

Eigen::Vector3d poisson_grad(long y1, long y2, const Eigen::Vector3d& eta) {
  if (y1 < 0 || y2 < 0) throw std::domain_error("counts must be non-negative");
  const FamilySpec spec = FamilySpec::make(FamilyId::poisson2);
  const Eigen::VectorXd par = inverse_link(spec, eta);
  const double l1 = par[0], l2 = par[1], l3 = par[2];
  const double log_r = l3 == 0.0 ? -std::numeric_limits<double>::infinity()
                                 : std::log(l3) - std::log(l1) - std::log(l2);
  const PoissonSeries series = poisson_series(y1, y2, log_r, true);
  const double w = series.mean_k;
  Eigen::Vector3d g;
  g[0] = static_cast<double>(y1) - l1 - w;
  g[1] = static_cast<double>(y2) - l2 - w;
  g[2] = w - l3;
  return g;
}

double gaussian_logpdf(double y1, double y2, const BivariateGaussianParams& params) {
  validate_gaussian_params(params);
  const double z1 = (y1 - params.mu1) / params.sigma1;
  const double z2 = (y2 - params.mu2) / params.sigma2;
  const double rho = params.rho;
  const double c = 1.0 / ((1.0 - rho) * (1.0 + rho));
  // Marginal pieces plus a coupling term that is exactly zero at rho = 0.
  const double m1 = -0.5 * kLog2Pi - std::log(params.sigma1) - 0.5 * z1 * z1;
  const double m2 = -0.5 * kLog2Pi - std::log(params.sigma2) - 0.5 * z2 * z2;
  const double coupling =
      -0.5 * std::log1p(-rho * rho) - 0.5 * rho * rho * c * (z1 * z1 + z2 * z2) +
      c * rho * z1 * z2;
  return m1 + m2 + coupling;
}

Eigen::Matrix<double, 5, 1> gaussian_grad(double y1, double y2,
                                          const Eigen::Matrix<double, 5, 1>& eta) {
  const FamilySpec spec = FamilySpec::make(FamilyId::gaussian2);
  const Eigen::VectorXd par = inverse_link(spec, eta);
  const double mu1 = par[0], mu2 = par[1], s1 = par[2], s2 = par[3], rho = par[4];
  const double z1 = (y1 - mu1) / s1;
  const double z2 = (y2 - mu2) / s2;
  const double om = (1.0 - rho) * (1.0 + rho);
  const double c = 1.0 / om;

  Eigen::Matrix<double, 5, 1> g;
  g[0] = c * (z1 - rho * z2) / s1;
  g[1] = c * (z2 - rho * z1) / s2;
  g[2] = -1.0 + c * z1 * (z1 - rho * z2);
  g[3] = -1.0 + c * z2 * (z2 - rho * z1);
  // d rho / d eta = (1 - rho^2)^{3/2}
  g[4] = rho * std::sqrt(om) + ((1.0 + rho * rho) * z1 * z2 - rho * (z1 * z1 + z2 * z2)) /
                                   std::sqrt(om);
  return g;
}

double log_density(const FamilySpec& family, double y1, double y2,
                   const Eigen::VectorXd& params) {
  switch (family.id) {
    case FamilyId::bernoulli2:
      return bernoulli_logpmf(checked_binary(y1, "y1"), checked_binary(y2, "y2"),
                              binary_params(params));
    case FamilyId::poisson2:
      return poisson_logpmf(checked_count(y1, "y1"), checked_count(y2, "y2"),
                            poisson_params(params));
    case FamilyId::gaussian2:
      return gaussian_logpdf(y1, y2, gaussian_params(params));
  }
  throw std::invalid_argument("unknown family id");
}

Eigen::VectorXd predictor_gradient(const FamilySpec& family, double y1, double y2,
                                   const Eigen::VectorXd& eta) {
  switch (family.id) {
    case FamilyId::bernoulli2:
      return bernoulli_grad(checked_binary(y1, "y1"), checked_binary(y2, "y2"),
                            Eigen::Vector3d(eta));
    case FamilyId::poisson2:
      return poisson_grad(checked_count(y1, "y1"), checked_count(y2, "y2"),
                          Eigen::Vector3d(eta));
    case FamilyId::gaussian2:
      return gaussian_grad(y1, y2, Eigen::Matrix<double, 5, 1>(eta));
  }
  throw std::invalid_argument("unknown family id");
}

double negloglik(const FamilySpec& family, const Eigen::MatrixXd& responses,
                 const Eigen::MatrixXd& eta, long* clamp_warnings) {
  if (responses.rows() != eta.rows()) {
    throw std::invalid_argument("response and predictor row counts differ");
  }
  if (responses.cols() != 2 || eta.cols() != family.param_count) {
    throw std::invalid_argument("response/predictor matrices have wrong shape");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < responses.rows(); ++i) {
    try {
      const Eigen::VectorXd params = inverse_link(family, eta.row(i).transpose());
      if (family.id == FamilyId::bernoulli2) {
        bool clamped = false;
        total -= bernoulli_logpmf(checked_binary(responses(i, 0), "y1"),
                                  checked_binary(responses(i, 1), "y2"),
                                  binary_params(params), &clamped);
        if (clamped && clamp_warnings) ++*clamp_warnings;
      } else {
        total -= log_density(family, responses(i, 0), responses(i, 1), params);
      }
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "row " << i << ": " << e.what();
      throw std::runtime_error(msg.str());
    }
  }
  return total;
}

double negloglik_params(const FamilySpec& family, const Eigen::MatrixXd& responses,
                        const Eigen::MatrixXd& params) {
  if (responses.rows() != params.rows()) {
    throw std::invalid_argument("response and parameter row counts differ");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < responses.rows(); ++i) {
    try {
      total -= log_density(family, responses(i, 0), responses(i, 1),
                           params.row(i).transpose());
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "row " << i << ": " << e.what();
      throw std::runtime_error(msg.str());
    }
  }
  return total;
}

void validate_responses(const FamilySpec& family, const Eigen::MatrixXd& responses) {
  if (responses.cols() != 2) throw std::invalid_argument("expected two response columns");
  for (Eigen::Index i = 0; i < responses.rows(); ++i) {
    for (int j = 0; j < 2; ++j) {
      const double y = responses(i, j);
      std::ostringstream msg;
      switch (family.id) {
        case FamilyId::bernoulli2:
          if (y != 0.0 && y != 1.0) {
            msg << "row " << i << ": response " << (j + 1) << " must be 0 or 1, got " << y;
            throw std::invalid_argument(msg.str());
          }
          break;
        case FamilyId::poisson2:
          if (!(y >= 0.0) || std::nearbyint(y) != y) {
            msg << "row " << i << ": response " << (j + 1)
                << " must be a non-negative integer, got " << y;
            throw std::invalid_argument(msg.str());
          }
          break;
        case FamilyId::gaussian2:
          if (!std::isfinite(y)) {
            msg << "row " << i << ": response " << (j + 1) << " must be finite";
            throw std::invalid_argument(msg.str());
          }
          break;
      }
    }
  }
}

}  // namespace bivboost::families
