#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace bivboost::bl {

enum class Kind { linear, pspline, mrf };

std::string kind_name(Kind kind);
Kind kind_from_name(const std::string& name);

struct PsplineConfig {
  int n_knots = 20;
  int degree = 3;
  int diff_order = 2;
  double df = 4.0;
};

struct MrfConfig {
  double df = 6.0;
};

// One candidate effect: a linear term, a penalized spline or a Markov random
// field on a region column.
struct BaseLearnerSpec {
  Kind kind = Kind::linear;
  std::string covariate;
  PsplineConfig pspline;
  MrfConfig mrf;
};

// Neighborhood graph for MRF learners. Edges index into `regions`.
struct Adjacency {
  std::vector<std::string> regions;
  std::vector<std::pair<int, int>> edges;

  int index_of(const std::string& label) const;
  int n_components() const;
};

struct FitResult {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd fitted;
  double rss = 0.0;
};

// Uniform B-spline basis over a frozen range. Outside [lo, hi] rows are
// extended linearly from the boundary value and slope.
struct BsplineBasis {
  double lo = 0.0;
  double hi = 1.0;
  int n_knots = 20;
  int degree = 3;

  static BsplineBasis over_range(double lo, double hi, int n_knots, int degree);

  int n_basis() const { return n_knots + degree - 1; }
  double spacing() const { return (hi - lo) / (n_knots - 1); }
  double knot(int i) const { return lo + (i - degree) * spacing(); }

  // Fills out[0..n_basis()) with basis values at x; flags extrapolation.
  void row(double x, double* out, bool* extrapolated = nullptr) const;
  Eigen::MatrixXd design(const Eigen::VectorXd& x, long* n_extrapolated = nullptr) const;

 private:
  void row_in_range(double x, double* values, double* derivs) const;
};

// Design matrix of the default P-spline construction over the observed range
// of x. Throws on constant x (degenerate range).
Eigen::MatrixXd build_bspline_basis(const Eigen::VectorXd& x, const PsplineConfig& config,
                                    BsplineBasis* basis_out = nullptr);

// K = D'D with D the given-order difference operator; null space is spanned
// by polynomials of degree < order.
Eigen::MatrixXd difference_penalty(int order, int q);

// Graph Laplacian (degree minus adjacency, duplicate edges collapsed).
Eigen::MatrixXd graph_laplacian(const Adjacency& adj);

// Effective degrees of freedom tr[Z (Z'Z + lambda K)^{-1} Z'] computed from
// the generalized spectrum, and its inverse by bisection on log(lambda).
double df_from_spectrum(const Eigen::VectorXd& gamma, double lambda);
double calibrate_lambda_spectrum(const Eigen::VectorXd& gamma, double target_df);

// Generalized spectrum of (penalty, Z'Z) by whitening; throws if Z'Z is
// numerically singular.
Eigen::VectorXd penalized_spectrum(const Eigen::MatrixXd& xtx, const Eigen::MatrixXd& penalty);

// Spectrum for an indicator design with per-region counts. Regions without
// observations are folded away through the Schur complement of the Laplacian,
// which leaves the hat trace unchanged.
Eigen::VectorXd mrf_spectrum(const Eigen::VectorXd& counts, const Eigen::MatrixXd& laplacian);

// Smoothing parameter matching the target df. Falls back to direct hat-trace
// bisection when the cross-product matrix is singular.
double calibrate_lambda(const Eigen::MatrixXd& design, const Eigen::MatrixXd& penalty,
                        double target_df);

// Direct hat-trace evaluation, used as the slow reference path.
double hat_trace(const Eigen::MatrixXd& design, const Eigen::MatrixXd& penalty, double lambda);

// Prepared penalized least-squares problem with a cached factorization of
// (Z'Z + lambda K). Numerically singular systems get a small ridge and are
// flagged.
struct PenaltySetup {
  Eigen::MatrixXd design;
  Eigen::MatrixXd penalty;
  double lambda = 0.0;
  double df = 0.0;
  bool ridge_fallback = false;
  std::vector<std::string> warnings;
  Eigen::LDLT<Eigen::MatrixXd> solver;

  static PenaltySetup make(Eigen::MatrixXd design, Eigen::MatrixXd penalty, double lambda,
                           double df = 0.0);
};

// Penalized least-squares fit of the working response u.
FitResult fit(const PenaltySetup& setup, const Eigen::VectorXd& u);

// Indicator-design MRF setup: validates labels, calibrates lambda against the
// Laplacian penalty, warns on disconnected graphs.
PenaltySetup mrf_setup(const std::vector<std::string>& row_regions, const Adjacency& adj,
                       double target_df);

}  // namespace bivboost::bl
