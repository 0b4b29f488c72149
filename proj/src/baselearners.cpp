#include "bivboost/baselearners.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bivboost::bl {

namespace {

constexpr double kLogLambdaLo = -20.0;
constexpr double kLogLambdaHi = 20.0;
constexpr double kDfTolerance = 1e-6;
constexpr int kMaxBisectionIters = 200;

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::string kind_name(Kind kind) {
  switch (kind) {
    case Kind::linear:
      return "linear";
    case Kind::pspline:
      return "pspline";
    case Kind::mrf:
      return "mrf";
  }
  return "?";
}

Kind kind_from_name(const std::string& name) {
  if (name == "linear") return Kind::linear;
  if (name == "pspline") return Kind::pspline;
  if (name == "mrf") return Kind::mrf;
  throw std::invalid_argument("unknown base-learner kind '" + name + "'");
}

int Adjacency::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i] == label) return static_cast<int>(i);
  }
  return -1;
}

int Adjacency::n_components() const {
  UnionFind uf(static_cast<int>(regions.size()));
  for (const auto& [a, b] : edges) uf.unite(a, b);
  std::set<int> roots;
  for (int i = 0; i < static_cast<int>(regions.size()); ++i) roots.insert(uf.find(i));
  return static_cast<int>(roots.size());
}

BsplineBasis BsplineBasis::over_range(double lo, double hi, int n_knots, int degree) {
  if (!(hi > lo)) throw std::invalid_argument("degenerate covariate range for spline basis");
  if (n_knots < 2) throw std::invalid_argument("spline basis needs at least 2 knots");
  if (degree < 1) throw std::invalid_argument("spline degree must be >= 1");
  BsplineBasis b;
  b.lo = lo;
  b.hi = hi;
  b.n_knots = n_knots;
  b.degree = degree;
  return b;
}

// Cox-de Boor triangle for the degree-p values and the degree-(p-1) values
// one level down, which give the derivative via the standard difference
// relation.
void BsplineBasis::row_in_range(double x, double* values, double* derivs) const {
  const int p = degree;
  const int q = n_basis();
  const double h = spacing();
  int seg = static_cast<int>((x - lo) / h);
  seg = std::clamp(seg, 0, n_knots - 2);
  const int span = p + seg;  // knot(span) <= x < knot(span + 1)

  std::fill(values, values + q, 0.0);
  if (derivs) std::fill(derivs, derivs + q, 0.0);

  double n[8];  // degree <= 7 is plenty
  double left[8], right[8];
  n[0] = 1.0;
  double lower[8];  // degree-(p-1) values, captured one level early
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knot(span + 1 - j);
    right[j] = knot(span + j) - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
    if (j == p - 1 && derivs) std::copy(n, n + p, lower);
  }

  for (int r = 0; r <= p; ++r) values[span - p + r] = n[r];
  if (derivs) {
    // B'_{j,p} = p [ B_{j,p-1}/(t_{j+p}-t_j) - B_{j+1,p-1}/(t_{j+p+1}-t_{j+1}) ];
    // uniform knots make both denominators p*h.
    if (p == 1) {
      lower[0] = 1.0;  // degree-0 basis on the span
      derivs[span - 1] += -1.0 / h;
      derivs[span] += 1.0 / h;
    } else {
      for (int r = 0; r < p; ++r) {
        const int j = span - (p - 1) + r;  // degree-(p-1) basis index
        const double v = lower[r] / h;
        derivs[j - 1] += -v;
        derivs[j] += v;
      }
    }
  }
}

void BsplineBasis::row(double x, double* out, bool* extrapolated) const {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite covariate value");
  const int q = n_basis();
  if (x >= lo && x <= hi) {
    if (extrapolated) *extrapolated = false;
    row_in_range(x, out, nullptr);
    return;
  }
  if (extrapolated) *extrapolated = true;
  const double b = x < lo ? lo : hi;
  std::vector<double> deriv(static_cast<std::size_t>(q));
  row_in_range(b, out, deriv.data());
  for (int j = 0; j < q; ++j) out[j] += (x - b) * deriv[j];
}

Eigen::MatrixXd BsplineBasis::design(const Eigen::VectorXd& x, long* n_extrapolated) const {
  Eigen::MatrixXd z(x.size(), n_basis());
  std::vector<double> buf(static_cast<std::size_t>(n_basis()));
  long count = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    bool extra = false;
    row(x[i], buf.data(), &extra);
    if (extra) ++count;
    for (int j = 0; j < n_basis(); ++j) z(i, j) = buf[static_cast<std::size_t>(j)];
  }
  if (n_extrapolated) *n_extrapolated = count;
  return z;
}

Eigen::MatrixXd build_bspline_basis(const Eigen::VectorXd& x, const PsplineConfig& config,
                                    BsplineBasis* basis_out) {
  if (x.size() == 0) throw std::invalid_argument("empty covariate vector");
  if (config.n_knots < config.diff_order + 1) {
    throw std::invalid_argument("n_knots must be at least diff_order + 1");
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw std::invalid_argument("non-finite covariate value");
  }
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  const auto basis = BsplineBasis::over_range(lo, hi, config.n_knots, config.degree);
  if (basis_out) *basis_out = basis;
  return basis.design(x);
}

Eigen::MatrixXd difference_penalty(int order, int q) {
  if (order < 1) throw std::invalid_argument("difference order must be >= 1");
  if (q <= order) throw std::invalid_argument("q must exceed the difference order");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(q - order, q);
  // signed binomial stencil, e.g. order 2 -> [1, -2, 1]
  std::vector<double> stencil(static_cast<std::size_t>(order) + 1);
  stencil[0] = 1.0;
  for (int j = 1; j <= order; ++j) {
    stencil[static_cast<std::size_t>(j)] =
        -stencil[static_cast<std::size_t>(j - 1)] * (order - j + 1) / j;
  }
  for (int i = 0; i < q - order; ++i) {
    for (int j = 0; j <= order; ++j) d(i, i + j) = stencil[static_cast<std::size_t>(order - j)];
  }
  return d.transpose() * d;
}

Eigen::MatrixXd graph_laplacian(const Adjacency& adj) {
  const int s = static_cast<int>(adj.regions.size());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(s, s);
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : adj.edges) {
    if (a == b) continue;
    if (a < 0 || b < 0 || a >= s || b >= s) throw std::invalid_argument("edge index out of range");
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) continue;
    lap(a, a) += 1.0;
    lap(b, b) += 1.0;
    lap(a, b) -= 1.0;
    lap(b, a) -= 1.0;
  }
  return lap;
}

double df_from_spectrum(const Eigen::VectorXd& gamma, double lambda) {
  double df = 0.0;
  for (Eigen::Index i = 0; i < gamma.size(); ++i) df += 1.0 / (1.0 + lambda * gamma[i]);
  return df;
}

double calibrate_lambda_spectrum(const Eigen::VectorXd& gamma, double target_df) {
  double lo = kLogLambdaLo, hi = kLogLambdaHi;
  const double df_max = df_from_spectrum(gamma, std::exp(lo));
  const double df_min = df_from_spectrum(gamma, std::exp(hi));
  if (target_df > df_max + kDfTolerance || target_df < df_min - kDfTolerance) {
    std::ostringstream msg;
    msg << "target df " << target_df << " is not attainable; reachable range is ["
        << df_min << ", " << df_max << "]";
    throw std::invalid_argument(msg.str());
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < kMaxBisectionIters; ++it) {
    mid = 0.5 * (lo + hi);
    const double df = df_from_spectrum(gamma, std::exp(mid));
    if (std::abs(df - target_df) <= kDfTolerance) return std::exp(mid);
    if (df > target_df) {
      lo = mid;  // need more smoothing
    } else {
      hi = mid;
    }
  }
  return std::exp(mid);
}

Eigen::VectorXd penalized_spectrum(const Eigen::MatrixXd& xtx, const Eigen::MatrixXd& penalty) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xtx);
  const Eigen::VectorXd d = es.eigenvalues();
  const double dmax = d.maxCoeff();
  if (!(dmax > 0.0) || d.minCoeff() <= 1e-10 * dmax) {
    throw std::runtime_error("cross-product matrix is numerically singular");
  }
  const Eigen::MatrixXd white =
      es.eigenvectors() * d.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  Eigen::MatrixXd m = white * penalty * white;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esm(0.5 * (m + m.transpose()));
  return esm.eigenvalues().cwiseMax(0.0);
}

Eigen::VectorXd mrf_spectrum(const Eigen::VectorXd& counts, const Eigen::MatrixXd& laplacian) {
  const Eigen::Index s = counts.size();
  std::vector<Eigen::Index> observed, unobserved;
  for (Eigen::Index i = 0; i < s; ++i) {
    (counts[i] > 0.0 ? observed : unobserved).push_back(i);
  }
  if (observed.empty()) throw std::invalid_argument("no observed regions");

  Eigen::MatrixXd folded;
  const auto no = static_cast<Eigen::Index>(observed.size());
  if (unobserved.empty()) {
    folded = laplacian;
  } else {
    const auto nu = static_cast<Eigen::Index>(unobserved.size());
    Eigen::MatrixXd k_oo(no, no), k_ou(no, nu), k_uu(nu, nu);
    for (Eigen::Index i = 0; i < no; ++i) {
      for (Eigen::Index j = 0; j < no; ++j) k_oo(i, j) = laplacian(observed[i], observed[j]);
      for (Eigen::Index j = 0; j < nu; ++j) k_ou(i, j) = laplacian(observed[i], unobserved[j]);
    }
    for (Eigen::Index i = 0; i < nu; ++i) {
      for (Eigen::Index j = 0; j < nu; ++j) k_uu(i, j) = laplacian(unobserved[i], unobserved[j]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(k_uu);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-12) {
      throw std::invalid_argument("a graph component has no observed regions");
    }
    folded = k_oo - k_ou * ldlt.solve(k_ou.transpose());
  }

  Eigen::VectorXd scale(no);
  for (Eigen::Index i = 0; i < no; ++i) scale[i] = 1.0 / std::sqrt(counts[observed[i]]);
  Eigen::MatrixXd m = scale.asDiagonal() * folded * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esm(0.5 * (m + m.transpose()));
  return esm.eigenvalues().cwiseMax(0.0);
}

double hat_trace(const Eigen::MatrixXd& design, const Eigen::MatrixXd& penalty, double lambda) {
  const Eigen::MatrixXd xtx = design.transpose() * design;
  const Eigen::MatrixXd a = xtx + lambda * penalty;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  return ldlt.solve(xtx).trace();
}

double calibrate_lambda(const Eigen::MatrixXd& design, const Eigen::MatrixXd& penalty,
                        double target_df) {
  const Eigen::MatrixXd xtx = design.transpose() * design;
  try {
    return calibrate_lambda_spectrum(penalized_spectrum(xtx, penalty), target_df);
  } catch (const std::runtime_error&) {
    // singular cross-product: bisect on the direct hat trace
  }
  double lo = kLogLambdaLo, hi = kLogLambdaHi;
  const double df_max = hat_trace(design, penalty, std::exp(lo));
  const double df_min = hat_trace(design, penalty, std::exp(hi));
  if (target_df > df_max + kDfTolerance || target_df < df_min - kDfTolerance) {
    std::ostringstream msg;
    msg << "target df " << target_df << " is not attainable; reachable range is ["
        << df_min << ", " << df_max << "]";
    throw std::invalid_argument(msg.str());
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < kMaxBisectionIters; ++it) {
    mid = 0.5 * (lo + hi);
    const double df = hat_trace(design, penalty, std::exp(mid));
    if (std::abs(df - target_df) <= kDfTolerance) break;
    if (df > target_df) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(mid);
}

PenaltySetup PenaltySetup::make(Eigen::MatrixXd design, Eigen::MatrixXd penalty, double lambda,
                                double df) {
  PenaltySetup s;
  s.design = std::move(design);
  s.penalty = std::move(penalty);
  s.lambda = lambda;
  s.df = df;
  const Eigen::Index q = s.design.cols();
  Eigen::MatrixXd a = s.design.transpose() * s.design;
  if (lambda != 0.0) a += lambda * s.penalty;
  s.solver.compute(a);
  const double dmax = s.solver.vectorD().cwiseAbs().maxCoeff();
  if (s.solver.info() != Eigen::Success || !(dmax > 0.0) ||
      s.solver.vectorD().minCoeff() <= 1e-12 * dmax) {
    const double ridge = 1e-8 * a.trace() / static_cast<double>(q);
    a += ridge * Eigen::MatrixXd::Identity(q, q);
    s.solver.compute(a);
    s.ridge_fallback = true;
    s.warnings.push_back("singular normal equations; ridge fallback applied");
  }
  return s;
}

FitResult fit(const PenaltySetup& setup, const Eigen::VectorXd& u) {
  if (u.size() != setup.design.rows()) {
    throw std::invalid_argument("working response length does not match the design");
  }
  FitResult r;
  r.coefficients = setup.solver.solve(setup.design.transpose() * u);
  r.fitted = setup.design * r.coefficients;
  r.rss = (u - r.fitted).squaredNorm();
  return r;
}

PenaltySetup mrf_setup(const std::vector<std::string>& row_regions, const Adjacency& adj,
                       double target_df) {
  const int s = static_cast<int>(adj.regions.size());
  std::map<std::string, int> index;
  for (int i = 0; i < s; ++i) index[adj.regions[i]] = i;

  const auto n = static_cast<Eigen::Index>(row_regions.size());
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n, s);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(s);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto it = index.find(row_regions[static_cast<std::size_t>(i)]);
    if (it == index.end()) {
      throw std::invalid_argument("region label '" + row_regions[static_cast<std::size_t>(i)] +
                                  "' is not in the adjacency graph");
    }
    design(i, it->second) = 1.0;
    counts[it->second] += 1.0;
  }

  const Eigen::MatrixXd lap = graph_laplacian(adj);
  const double lambda = calibrate_lambda_spectrum(mrf_spectrum(counts, lap), target_df);
  PenaltySetup setup = PenaltySetup::make(std::move(design), lap, lambda, target_df);
  if (adj.n_components() > 1) {
    std::ostringstream msg;
    msg << "adjacency graph has " << adj.n_components()
        << " components; df floor rises to the component count";
    setup.warnings.push_back(msg.str());
  }
  return setup;
}

}  // namespace bivboost::bl
