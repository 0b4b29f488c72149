#include "bivboost/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bivboost/common.hpp"

namespace bivboost::engine {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using families::FamilySpec;

double pooled_nll(const FamilySpec& family, const Eigen::MatrixXd& y,
                  const Eigen::VectorXd& eta) {
  try {
    const Eigen::VectorXd params = families::inverse_link(family, eta);
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      total -= families::log_density(family, y(i, 0), y(i, 1), params);
    }
    return total;
  } catch (const std::domain_error&) {
    return kInf;
  }
}

Eigen::VectorXd pooled_score(const FamilySpec& family, const Eigen::MatrixXd& y,
                             const Eigen::VectorXd& eta) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(eta.size());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    total += families::predictor_gradient(family, y(i, 0), y(i, 1), eta);
  }
  return total;
}

Eigen::VectorXd moment_start(const FamilySpec& family, const Eigen::MatrixXd& y) {
  const auto n = static_cast<double>(y.rows());
  const double m1 = y.col(0).mean();
  const double m2 = y.col(1).mean();
  Eigen::VectorXd params(family.param_count);
  switch (family.id) {
    case families::FamilyId::bernoulli2: {
      // Haldane-smoothed cells keep the empirical odds ratio finite.
      double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        if (y(i, 0) == 1 && y(i, 1) == 1) ++n11;
        else if (y(i, 0) == 1) ++n10;
        else if (y(i, 1) == 1) ++n01;
        else ++n00;
      }
      const double p1 = std::clamp(m1, 1.0 / (n + 2.0), 1.0 - 1.0 / (n + 2.0));
      const double p2 = std::clamp(m2, 1.0 / (n + 2.0), 1.0 - 1.0 / (n + 2.0));
      const double psi = ((n00 + 0.5) * (n11 + 0.5)) / ((n01 + 0.5) * (n10 + 0.5));
      params << p1, p2, psi;
      break;
    }
    case families::FamilyId::poisson2: {
      double cov = 0.0;
      for (Eigen::Index i = 0; i < y.rows(); ++i) cov += (y(i, 0) - m1) * (y(i, 1) - m2);
      cov /= n;
      const double floor = 1e-4;
      const double l3 = std::clamp(cov, floor, std::max(0.95 * std::min(m1, m2), floor));
      params << std::max(m1 - l3, floor), std::max(m2 - l3, floor), l3;
      break;
    }
    case families::FamilyId::gaussian2: {
      double v1 = 0, v2 = 0, cv = 0;
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const double d1 = y(i, 0) - m1;
        const double d2 = y(i, 1) - m2;
        v1 += d1 * d1;
        v2 += d2 * d2;
        cv += d1 * d2;
      }
      const double s1 = std::max(std::sqrt(v1 / n), 1e-8);
      const double s2 = std::max(std::sqrt(v2 / n), 1e-8);
      const double rho = std::clamp(cv / n / (s1 * s2), -0.99, 0.99);
      params << m1, m2, s1, s2, rho;
      break;
    }
  }
  return families::forward_link(family, params);
}

}  // namespace

std::string offsets_mode_name(OffsetsMode mode) {
  return mode == OffsetsMode::mle ? "mle" : "zero";
}

OffsetsMode offsets_mode_from_name(const std::string& name) {
  if (name == "mle") return OffsetsMode::mle;
  if (name == "zero") return OffsetsMode::zero;
  throw std::invalid_argument("unknown offsets mode '" + name + "'");
}

std::string stabilization_name(Stabilization s) {
  switch (s) {
    case Stabilization::none:
      return "none";
    case Stabilization::mad:
      return "mad";
    case Stabilization::l2:
      return "l2";
  }
  return "?";
}

Stabilization stabilization_from_name(const std::string& name) {
  if (name == "none") return Stabilization::none;
  if (name == "mad") return Stabilization::mad;
  if (name == "l2") return Stabilization::l2;
  throw std::invalid_argument("unknown stabilization '" + name + "'");
}

void ModelSpec::validate() const {
  const int k = family.param_count;
  if (response_columns.size() != 2) throw std::invalid_argument("need two response columns");
  if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("step length must be in (0, 1]");
  if (m_max < 0) throw std::invalid_argument("m_max must be non-negative");
  if (!learners.empty() && static_cast<int>(learners.size()) != k) {
    throw std::invalid_argument("learner lists must cover every distribution parameter");
  }
  if (!offset_overrides.empty() && static_cast<int>(offset_overrides.size()) != k) {
    throw std::invalid_argument("offset overrides must cover every distribution parameter");
  }
  for (int p = 0; p < k && !offset_overrides.empty() && !learners.empty(); ++p) {
    if (offset_overrides[static_cast<std::size_t>(p)].has_value() &&
        !learners[static_cast<std::size_t>(p)].empty()) {
      throw std::invalid_argument("a parameter with a fixed offset cannot have learners");
    }
  }
}

Eigen::VectorXd init_offsets(const FamilySpec& family, const Eigen::MatrixXd& responses,
                             OffsetsMode mode,
                             const std::vector<std::optional<double>>& overrides,
                             bool* fallback) {
  if (responses.rows() < 2) throw std::invalid_argument("need at least two observations");
  families::validate_responses(family, responses);
  const int k = family.param_count;
  if (fallback) *fallback = false;

  std::vector<bool> frozen(static_cast<std::size_t>(k), false);
  Eigen::VectorXd frozen_values = Eigen::VectorXd::Zero(k);
  for (int p = 0; p < k && p < static_cast<int>(overrides.size()); ++p) {
    if (overrides[static_cast<std::size_t>(p)].has_value()) {
      frozen[static_cast<std::size_t>(p)] = true;
      frozen_values[p] = *overrides[static_cast<std::size_t>(p)];
    }
  }

  auto with_overrides = [&](Eigen::VectorXd eta) {
    for (int p = 0; p < k; ++p) {
      if (frozen[static_cast<std::size_t>(p)]) eta[p] = frozen_values[p];
    }
    return eta;
  };

  if (mode == OffsetsMode::zero) return with_overrides(Eigen::VectorXd::Zero(k));

  Eigen::VectorXd eta = with_overrides(moment_start(family, responses));
  const double start_nll = pooled_nll(family, responses, eta);
  // rounding slack for risk comparisons at this data scale
  const auto slack = [](double nll) {
    return 32.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(nll));
  };
  auto masked_score = [&](const Eigen::VectorXd& at) {
    Eigen::VectorXd score = pooled_score(family, responses, at);
    for (int p = 0; p < k; ++p) {
      if (frozen[static_cast<std::size_t>(p)]) score[p] = 0.0;
    }
    return score;
  };

  bool converged = false;
  if (start_nll < kInf) {
    double prev_nll = kInf;
    for (int sweep = 0; sweep < 500; ++sweep) {
      const Eigen::VectorXd score = masked_score(eta);
      if (score.norm() < 1e-8) {
        converged = true;
        break;
      }
      const double nll_now = pooled_nll(family, responses, eta);
      if (prev_nll - nll_now <= slack(nll_now) && sweep > 0) {
        // No representable risk improvement is left. Accept the stall as
        // converged when the remaining score is at the rounding floor of the
        // pooled sums, measured against the per-row gradient mass.
        double gradient_mass = 1.0;
        for (Eigen::Index i = 0; i < responses.rows(); ++i) {
          gradient_mass += families::predictor_gradient(family, responses(i, 0),
                                                        responses(i, 1), eta)
                               .cwiseAbs()
                               .sum();
        }
        converged = score.norm() <= 1e-6 * gradient_mass;
        break;
      }
      prev_nll = nll_now;
      for (int p = 0; p < k; ++p) {
        if (frozen[static_cast<std::size_t>(p)]) continue;
        const double delta = 1e-4 * std::max(1.0, std::abs(eta[p]));
        Eigen::VectorXd hi = eta, lo = eta;
        hi[p] += delta;
        lo[p] -= delta;
        const double s_hi = pooled_score(family, responses, hi)[p];
        const double s_lo = pooled_score(family, responses, lo)[p];
        const double curvature = -(s_hi - s_lo) / (2.0 * delta);  // d2 nll / d eta2
        const double g = pooled_score(family, responses, eta)[p];
        double step = curvature > 1e-10 ? g / curvature
                                        : std::copysign(std::min(1.0, std::abs(g)), g);
        step = std::clamp(step, -5.0, 5.0);
        const double nll0 = pooled_nll(family, responses, eta);
        for (int halving = 0; halving < 40; ++halving) {
          Eigen::VectorXd cand = eta;
          cand[p] += step;
          if (pooled_nll(family, responses, cand) <= nll0 + slack(nll0)) {
            eta = cand;
            break;
          }
          step /= 2.0;
        }
      }
    }
  }
  if (!converged || !(pooled_nll(family, responses, eta) <= start_nll + slack(start_nll))) {
    if (fallback) *fallback = true;
    return with_overrides(Eigen::VectorXd::Zero(k));
  }
  return eta;
}

// ---------------------------------------------------------------------------
// prepared learners

namespace {

// One prepared candidate effect. Cores are shared between parameters that
// request the same learner, so designs and factorizations are built once.
struct LearnerCore {
  bl::BaseLearnerSpec spec;
  long n_train = 0;

  // linear / pspline: dense prepared problem
  bl::PenaltySetup setup;
  double x_center = 0.0;
  double x_min = 0.0;
  double x_max = 0.0;
  bl::BsplineBasis basis;
  Eigen::VectorXd xc_val;       // linear validation covariate, centered
  Eigen::MatrixXd design_val;   // pspline validation design

  // mrf
  std::vector<int> idx_train, idx_val;
  std::vector<std::string> regions;
  Eigen::VectorXd counts;
  Eigen::LDLT<Eigen::MatrixXd> mrf_solver;

  double lambda = 0.0;
  double df = 0.0;
  bool ridge_fallback = false;

  int q() const {
    switch (spec.kind) {
      case bl::Kind::linear:
        return 2;
      case bl::Kind::pspline:
        return basis.n_basis();
      case bl::Kind::mrf:
        return static_cast<int>(regions.size());
    }
    return 0;
  }

  void fit(const Eigen::VectorXd& u, Eigen::VectorXd& coef, Eigen::VectorXd& fitted,
           double& rss) const {
    if (spec.kind == bl::Kind::mrf) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(counts.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) rhs[idx_train[static_cast<std::size_t>(i)]] += u[i];
      coef = mrf_solver.solve(rhs);
      fitted.resize(u.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) fitted[i] = coef[idx_train[static_cast<std::size_t>(i)]];
      rss = (u - fitted).squaredNorm();
      return;
    }
    const bl::FitResult r = bl::fit(setup, u);
    coef = r.coefficients;
    fitted = r.fitted;
    rss = r.rss;
  }

  Eigen::VectorXd val_effect(const Eigen::VectorXd& coef) const {
    switch (spec.kind) {
      case bl::Kind::linear:
        return (coef[1] * xc_val.array() + coef[0]).matrix();
      case bl::Kind::pspline:
        return design_val * coef;
      case bl::Kind::mrf: {
        Eigen::VectorXd out(static_cast<Eigen::Index>(idx_val.size()));
        for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = coef[idx_val[static_cast<std::size_t>(i)]];
        return out;
      }
    }
    return {};
  }
};

std::string core_key(const bl::BaseLearnerSpec& s) {
  std::ostringstream key;
  key << kind_name(s.kind) << '|' << s.covariate;
  if (s.kind == bl::Kind::pspline) {
    key << '|' << s.pspline.n_knots << '|' << s.pspline.degree << '|' << s.pspline.diff_order
        << '|' << s.pspline.df;
  } else if (s.kind == bl::Kind::mrf) {
    key << '|' << s.mrf.df;
  }
  return key.str();
}

std::vector<int> region_indices(const std::vector<std::string>& labels,
                                const std::vector<std::string>& regions) {
  std::map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(regions.size()); ++i) index[regions[static_cast<std::size_t>(i)]] = i;
  std::vector<int> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = index.find(labels[i]);
    if (it == index.end()) {
      throw std::invalid_argument("region label '" + labels[i] +
                                  "' is not in the adjacency graph");
    }
    idx[i] = it->second;
  }
  return idx;
}

std::shared_ptr<LearnerCore> prepare_core(const bl::BaseLearnerSpec& spec,
                                          const DataTable& train, const DataTable* validation,
                                          const bl::Adjacency* adjacency) {
  auto core = std::make_shared<LearnerCore>();
  core->spec = spec;
  core->n_train = train.n_rows();
  switch (spec.kind) {
    case bl::Kind::linear: {
      const Eigen::VectorXd& x = train.numeric(spec.covariate);
      core->x_center = x.mean();
      core->x_min = x.minCoeff();
      core->x_max = x.maxCoeff();
      Eigen::MatrixXd design(x.size(), 2);
      design.col(0).setOnes();
      design.col(1) = x.array() - core->x_center;
      core->setup = bl::PenaltySetup::make(std::move(design), Eigen::MatrixXd::Zero(2, 2), 0.0, 2.0);
      core->df = 2.0;
      if (validation) core->xc_val = validation->numeric(spec.covariate).array() - core->x_center;
      break;
    }
    case bl::Kind::pspline: {
      const Eigen::VectorXd& x = train.numeric(spec.covariate);
      Eigen::MatrixXd design = bl::build_bspline_basis(x, spec.pspline, &core->basis);
      Eigen::MatrixXd penalty =
          bl::difference_penalty(spec.pspline.diff_order, static_cast<int>(design.cols()));
      core->lambda = bl::calibrate_lambda(design, penalty, spec.pspline.df);
      core->df = spec.pspline.df;
      core->setup =
          bl::PenaltySetup::make(std::move(design), std::move(penalty), core->lambda, core->df);
      if (validation) core->design_val = core->basis.design(validation->numeric(spec.covariate));
      break;
    }
    case bl::Kind::mrf: {
      if (!adjacency) {
        throw std::invalid_argument("mrf learner on '" + spec.covariate +
                                    "' requires an adjacency graph");
      }
      core->regions = adjacency->regions;
      core->idx_train = region_indices(train.labels(spec.covariate), core->regions);
      const auto s = static_cast<Eigen::Index>(core->regions.size());
      core->counts = Eigen::VectorXd::Zero(s);
      for (const int r : core->idx_train) core->counts[r] += 1.0;
      const Eigen::MatrixXd lap = bl::graph_laplacian(*adjacency);
      core->lambda = bl::calibrate_lambda_spectrum(bl::mrf_spectrum(core->counts, lap),
                                                   spec.mrf.df);
      core->df = spec.mrf.df;
      Eigen::MatrixXd a = core->lambda * lap;
      a.diagonal() += core->counts;
      core->mrf_solver.compute(a);
      const double dmax = core->mrf_solver.vectorD().cwiseAbs().maxCoeff();
      if (core->mrf_solver.info() != Eigen::Success ||
          core->mrf_solver.vectorD().minCoeff() <= 1e-12 * dmax) {
        a.diagonal().array() += 1e-8 * a.trace() / static_cast<double>(s);
        core->mrf_solver.compute(a);
        core->ridge_fallback = true;
      }
      if (validation) core->idx_val = region_indices(validation->labels(spec.covariate), core->regions);
      break;
    }
  }
  core->ridge_fallback = core->ridge_fallback || core->setup.ridge_fallback;
  return core;
}

}  // namespace

// ---------------------------------------------------------------------------
// Booster

struct Booster::Impl {
  ModelSpec spec;
  FamilySpec family;
  int n_params = 0;

  Eigen::MatrixXd y_train, y_val;
  bool has_val = false;

  Eigen::VectorXd offsets;
  bool offsets_fallback = false;

  Eigen::MatrixXd eta, eta_val;

  std::vector<std::vector<std::shared_ptr<LearnerCore>>> cores;  // per param
  struct Increment {
    int param;
    int learner;
    Eigen::VectorXd coef;  // nu-scaled
  };
  std::vector<Increment> increments;
  std::vector<HistoryEntry> history;
  std::vector<IterationDiagnostics> diagnostics;
  std::vector<double> trace_train, trace_val;
  double risk_current = kInf;
  int iter = 0;
  bool stopped = false;

  // per-iteration scratch, one slot per (param, learner)
  struct FitScratch {
    Eigen::VectorXd coef, fitted;
    double rss = kInf;
  };
  std::vector<std::vector<FitScratch>> scratch;
  Eigen::MatrixXd grad;

  double data_risk(const Eigen::MatrixXd& y, const Eigen::MatrixXd& e) const {
    try {
      return families::negloglik(family, y, e);
    } catch (const std::runtime_error&) {
      return kInf;
    }
  }

  double shifted_risk(int k, const Eigen::VectorXd& shift) const {
    try {
      double total = 0.0;
      Eigen::VectorXd row(n_params);
      for (Eigen::Index i = 0; i < y_train.rows(); ++i) {
        row = eta.row(i).transpose();
        row[k] += shift[i];
        total -= families::log_density(family, y_train(i, 0), y_train(i, 1),
                                       families::inverse_link(family, row));
      }
      return std::isfinite(total) ? total : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  }

  void compute_gradients() {
    const Eigen::Index n = y_train.rows();
    parallel_for(n, spec.threads, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        grad.row(i) = families::predictor_gradient(family, y_train(i, 0), y_train(i, 1),
                                                   eta.row(i).transpose())
                          .transpose();
      }
    });
    if (spec.stabilization == Stabilization::none) return;
    std::vector<double> buffer;
    for (int k = 0; k < n_params; ++k) {
      if (cores[static_cast<std::size_t>(k)].empty()) continue;
      double div = 0.0;
      if (spec.stabilization == Stabilization::l2) {
        div = std::sqrt(grad.col(k).squaredNorm() / static_cast<double>(n));
      } else {
        buffer.assign(grad.col(k).data(), grad.col(k).data() + n);
        auto median_of = [](std::vector<double>& v) {
          const auto mid = v.size() / 2;
          std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
          double m = v[mid];
          if (v.size() % 2 == 0) {
            const double lower =
                *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
            m = 0.5 * (m + lower);
          }
          return m;
        };
        const double center = median_of(buffer);
        for (double& v : buffer) v = std::abs(v - center);
        div = median_of(buffer);
      }
      grad.col(k) /= std::max(div, 1e-4);
    }
  }
};

Booster::Booster(ModelSpec spec, const DataTable& train, const DataTable* validation,
                 const bl::Adjacency* adjacency)
    : impl_(std::make_unique<Impl>()) {
  spec.validate();
  auto& im = *impl_;
  im.spec = std::move(spec);
  im.family = im.spec.family;
  im.n_params = im.family.param_count;
  if (im.spec.learners.empty()) {
    im.spec.learners.assign(static_cast<std::size_t>(im.n_params), {});
  }
  if (im.spec.offset_overrides.empty()) {
    im.spec.offset_overrides.assign(static_cast<std::size_t>(im.n_params), std::nullopt);
  }

  im.y_train = train.responses(im.spec.response_columns[0], im.spec.response_columns[1]);
  families::validate_responses(im.family, im.y_train);
  if (validation) {
    im.has_val = true;
    im.y_val = validation->responses(im.spec.response_columns[0], im.spec.response_columns[1]);
    families::validate_responses(im.family, im.y_val);
  }

  // shared cores across parameters
  std::map<std::string, std::shared_ptr<LearnerCore>> pool;
  im.cores.resize(static_cast<std::size_t>(im.n_params));
  im.scratch.resize(static_cast<std::size_t>(im.n_params));
  for (int k = 0; k < im.n_params; ++k) {
    for (const auto& ls : im.spec.learners[static_cast<std::size_t>(k)]) {
      const std::string key = core_key(ls);
      auto it = pool.find(key);
      if (it == pool.end()) {
        it = pool.emplace(key, prepare_core(ls, train, validation, adjacency)).first;
      }
      im.cores[static_cast<std::size_t>(k)].push_back(it->second);
      im.scratch[static_cast<std::size_t>(k)].emplace_back();
    }
  }

  im.offsets = init_offsets(im.family, im.y_train, im.spec.offsets_mode,
                            im.spec.offset_overrides, &im.offsets_fallback);
  im.eta = im.offsets.transpose().replicate(im.y_train.rows(), 1);
  if (im.has_val) im.eta_val = im.offsets.transpose().replicate(im.y_val.rows(), 1);
  im.grad.resize(im.y_train.rows(), im.n_params);

  im.risk_current = im.data_risk(im.y_train, im.eta);
  im.trace_train.push_back(im.risk_current);
  if (im.has_val) im.trace_val.push_back(im.data_risk(im.y_val, im.eta_val));
}

Booster::~Booster() = default;

bool Booster::step() {
  auto& im = *impl_;
  if (im.stopped || im.iter >= im.spec.m_max) return false;

  bool any = false;
  for (const auto& list : im.cores) any = any || !list.empty();
  if (!any) {
    im.stopped = true;
    return false;
  }

  im.compute_gradients();

  // fit every candidate to its parameter's gradient column
  std::vector<std::pair<int, int>> jobs;
  for (int k = 0; k < im.n_params; ++k) {
    for (int j = 0; j < static_cast<int>(im.cores[static_cast<std::size_t>(k)].size()); ++j) {
      jobs.emplace_back(k, j);
    }
  }
  parallel_for(static_cast<std::int64_t>(jobs.size()), im.spec.threads,
               [&](std::int64_t lo, std::int64_t hi) {
                 for (std::int64_t idx = lo; idx < hi; ++idx) {
                   const auto [k, j] = jobs[static_cast<std::size_t>(idx)];
                   auto& slot = im.scratch[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
                   im.cores[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]->fit(
                       im.grad.col(k), slot.coef, slot.fitted, slot.rss);
                 }
               });

  // within-parameter winners by rss, then the cross-parameter winner by risk
  Eigen::VectorXd candidate_risk =
      Eigen::VectorXd::Constant(im.n_params, std::numeric_limits<double>::quiet_NaN());
  std::vector<int> winner(static_cast<std::size_t>(im.n_params), -1);
  for (int k = 0; k < im.n_params; ++k) {
    const auto& slots = im.scratch[static_cast<std::size_t>(k)];
    int best = -1;
    for (int j = 0; j < static_cast<int>(slots.size()); ++j) {
      if (best < 0 || slots[static_cast<std::size_t>(j)].rss < slots[static_cast<std::size_t>(best)].rss) best = j;
    }
    winner[static_cast<std::size_t>(k)] = best;
    if (best >= 0) {
      candidate_risk[k] =
          im.shifted_risk(k, im.spec.nu * im.scratch[static_cast<std::size_t>(k)][static_cast<std::size_t>(best)].fitted);
    }
  }

  int chosen = -1;
  for (int k = 0; k < im.n_params; ++k) {
    if (winner[static_cast<std::size_t>(k)] < 0 || !std::isfinite(candidate_risk[k])) continue;
    if (chosen < 0 || candidate_risk[k] < candidate_risk[chosen]) chosen = k;
  }
  if (chosen < 0) {
    throw std::runtime_error("boosting aborted: every candidate update has non-finite risk at iteration " +
                             std::to_string(im.iter + 1));
  }
  if (im.spec.stop_on_no_improvement && candidate_risk[chosen] >= im.risk_current) {
    im.stopped = true;
    return false;
  }

  const int j = winner[static_cast<std::size_t>(chosen)];
  auto& slot = im.scratch[static_cast<std::size_t>(chosen)][static_cast<std::size_t>(j)];
  im.eta.col(chosen) += im.spec.nu * slot.fitted;
  if (im.has_val) {
    im.eta_val.col(chosen) +=
        im.spec.nu *
        im.cores[static_cast<std::size_t>(chosen)][static_cast<std::size_t>(j)]->val_effect(slot.coef);
  }
  im.increments.push_back({chosen, j, im.spec.nu * slot.coef});
  im.risk_current = candidate_risk[chosen];
  ++im.iter;
  im.history.push_back({im.iter, chosen, j, im.risk_current});
  im.trace_train.push_back(im.risk_current);
  if (im.has_val) im.trace_val.push_back(im.data_risk(im.y_val, im.eta_val));

  if (im.spec.record_diagnostics) {
    IterationDiagnostics d;
    d.candidate_risks = candidate_risk;
    d.learner_rss.resize(static_cast<std::size_t>(im.n_params));
    for (int k = 0; k < im.n_params; ++k) {
      const auto& slots = im.scratch[static_cast<std::size_t>(k)];
      Eigen::VectorXd rss(static_cast<Eigen::Index>(slots.size()));
      for (std::size_t s = 0; s < slots.size(); ++s) rss[static_cast<Eigen::Index>(s)] = slots[s].rss;
      d.learner_rss[static_cast<std::size_t>(k)] = std::move(rss);
    }
    im.diagnostics.push_back(std::move(d));
  }
  return true;
}

int Booster::iterations_run() const { return impl_->iter; }
double Booster::current_risk() const { return impl_->risk_current; }
const Eigen::MatrixXd& Booster::eta() const { return impl_->eta; }
const std::vector<double>& Booster::train_trace() const { return impl_->trace_train; }
const std::vector<double>& Booster::val_trace() const { return impl_->trace_val; }

FittedModel Booster::finish() const {
  const auto& im = *impl_;
  FittedModel out;
  out.family = im.family;
  out.response_columns = im.spec.response_columns;
  out.nu = im.spec.nu;
  out.m_max = im.spec.m_max;
  out.offsets_mode = im.spec.offsets_mode;
  out.offset_overrides = im.spec.offset_overrides;
  out.offsets = im.offsets;
  out.offsets_fallback = im.offsets_fallback;
  out.risk_train = im.trace_train;
  out.risk_val = im.trace_val;
  out.history = im.history;
  out.diagnostics = im.diagnostics;
  out.n_train = im.y_train.rows();
  out.seed = im.spec.seed;

  int m_star = im.iter;
  if (im.has_val) {
    m_star = 0;
    for (int t = 1; t <= im.iter; ++t) {
      if (im.trace_val[static_cast<std::size_t>(t)] < im.trace_val[static_cast<std::size_t>(m_star)]) m_star = t;
    }
  }
  out.m_star = m_star;

  out.learners.resize(static_cast<std::size_t>(im.n_params));
  for (int k = 0; k < im.n_params; ++k) {
    for (const auto& core : im.cores[static_cast<std::size_t>(k)]) {
      FittedLearner fl;
      fl.spec = core->spec;
      fl.coef = Eigen::VectorXd::Zero(core->q());
      fl.x_center = core->x_center;
      fl.x_min = core->x_min;
      fl.x_max = core->x_max;
      fl.basis = core->basis;
      fl.regions = core->regions;
      fl.lambda = core->lambda;
      fl.df = core->df;
      fl.ridge_fallback = core->ridge_fallback;
      out.learners[static_cast<std::size_t>(k)].push_back(std::move(fl));
    }
  }
  for (int t = 0; t < m_star; ++t) {
    const auto& inc = im.increments[static_cast<std::size_t>(t)];
    auto& fl = out.learners[static_cast<std::size_t>(inc.param)][static_cast<std::size_t>(inc.learner)];
    fl.coef += inc.coef;
    ++fl.selected_count;
  }
  return out;
}

FittedModel fit(const ModelSpec& spec, const DataTable& train, const DataTable* validation,
                const bl::Adjacency* adjacency) {
  Booster booster(spec, train, validation, adjacency);
  while (booster.step()) {
  }
  return booster.finish();
}

Prediction predict(const FittedModel& model, const DataTable& data) {
  const int k = model.family.param_count;
  const long n = data.n_rows();
  Prediction out;
  out.eta = model.offsets.transpose().replicate(n, 1);

  for (int p = 0; p < k; ++p) {
    for (const auto& fl : model.learners[static_cast<std::size_t>(p)]) {
      if (fl.selected_count == 0) continue;
      switch (fl.spec.kind) {
        case bl::Kind::linear: {
          const Eigen::VectorXd& x = data.numeric(fl.spec.covariate);
          out.eta.col(p) +=
              (fl.coef[0] + fl.coef[1] * (x.array() - fl.x_center)).matrix();
          break;
        }
        case bl::Kind::pspline: {
          const Eigen::VectorXd& x = data.numeric(fl.spec.covariate);
          std::vector<double> row(static_cast<std::size_t>(fl.basis.n_basis()));
          for (long i = 0; i < n; ++i) {
            bool extra = false;
            fl.basis.row(x[i], row.data(), &extra);
            if (extra) ++out.extrapolation_warnings;
            double value = 0.0;
            for (int j = 0; j < fl.basis.n_basis(); ++j) value += row[static_cast<std::size_t>(j)] * fl.coef[j];
            out.eta(i, p) += value;
          }
          break;
        }
        case bl::Kind::mrf: {
          const auto idx = region_indices(data.labels(fl.spec.covariate), fl.regions);
          for (long i = 0; i < n; ++i) out.eta(i, p) += fl.coef[idx[static_cast<std::size_t>(i)]];
          break;
        }
      }
    }
  }

  out.params.resize(n, k);
  for (long i = 0; i < n; ++i) {
    out.params.row(i) =
        families::inverse_link(model.family, out.eta.row(i).transpose()).transpose();
  }
  return out;
}

CoefficientReport coefficients(const FittedModel& model) {
  CoefficientReport report;
  report.intercepts = model.offsets;
  report.effects.resize(model.learners.size());
  for (std::size_t p = 0; p < model.learners.size(); ++p) {
    for (const auto& fl : model.learners[p]) {
      if (fl.selected_count == 0) continue;
      EffectSummary e;
      e.kind = fl.spec.kind;
      switch (fl.spec.kind) {
        case bl::Kind::linear:
          e.slope = fl.coef[1];
          e.x_center = fl.x_center;
          report.intercepts[static_cast<Eigen::Index>(p)] += fl.coef[0];
          break;
        case bl::Kind::pspline:
          e.coef = fl.coef;
          e.basis = fl.basis;
          break;
        case bl::Kind::mrf:
          e.coef = fl.coef;
          e.regions = fl.regions;
          break;
      }
      report.effects[p][fl.spec.covariate] = std::move(e);
    }
  }
  return report;
}

std::map<std::pair<int, int>, long> selection_frequencies(
    const std::vector<HistoryEntry>& history) {
  std::map<std::pair<int, int>, long> counts;
  for (const auto& h : history) ++counts[{h.parameter, h.learner}];
  return counts;
}

}  // namespace bivboost::engine
