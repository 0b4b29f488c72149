// Acceptance suite: runs every shipping criterion end to end and prints one
// PASS/FAIL line per criterion. Exit code is nonzero when any criterion fails.
//
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bivboost/common.hpp"
#include "bivboost/engine.hpp"
#include "bivboost/families.hpp"
#include "bivboost/scoring.hpp"
#include "bivboost/serialize.hpp"
#include "bivboost/simulate.hpp"

using namespace bivboost;
using families::FamilyId;
using families::FamilySpec;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// criterion 1: analytic gradients against central finite differences

Eigen::VectorXd fd_gradient(const FamilySpec& family, double y1, double y2,
                            const Eigen::VectorXd& eta) {
  Eigen::VectorXd g(eta.size());
  for (Eigen::Index k = 0; k < eta.size(); ++k) {
    const double step = 1e-5 * std::max(1.0, std::abs(eta[k]));
    Eigen::VectorXd hi = eta, lo = eta;
    hi[k] += step;
    lo[k] -= step;
    g[k] = (families::log_density(family, y1, y2, families::inverse_link(family, hi)) -
            families::log_density(family, y1, y2, families::inverse_link(family, lo))) /
           (2.0 * step);
  }
  return g;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto id : {FamilyId::bernoulli2, FamilyId::poisson2, FamilyId::gaussian2}) {
    const auto family = FamilySpec::make(id);
    Rng rng(2024 + static_cast<int>(id));
    for (int rep = 0; rep < 1000; ++rep) {
      Eigen::VectorXd eta(family.param_count);
      for (int k = 0; k < family.param_count; ++k) eta[k] = 1.5 * rng.normal();
      if (id == FamilyId::gaussian2) eta[4] = std::clamp(eta[4], -2.5, 2.5);
      const Eigen::VectorXd params = families::inverse_link(family, eta);
      const auto [y1, y2] = scoring::sample_one(family, params, rng);
      const Eigen::VectorXd analytic = families::predictor_gradient(family, y1, y2, eta);
      const Eigen::VectorXd fd = fd_gradient(family, y1, y2, eta);
      for (int k = 0; k < family.param_count; ++k) {
        const double denom = std::max({1.0, std::abs(analytic[k]), std::abs(fd[k])});
        worst = std::max(worst, std::abs(analytic[k] - fd[k]) / denom);
      }
    }
  }
  const double elapsed = seconds_since(t0);
  Outcome out;
  out.pass = worst < 1e-6 && elapsed < 10.0;
  std::ostringstream detail;
  detail << "max relative error " << worst << " over 3x1000 draws in " << elapsed << " s";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// criterion 2: likelihood correctness

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  std::ostringstream detail;

  // Bernoulli cell mass over 1000 random parameter draws
  Rng rng(55);
  double worst_mass_err = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const families::BivariateBinaryParams par{0.02 + 0.96 * rng.uniform(),
                                              0.02 + 0.96 * rng.uniform(),
                                              std::exp(4.0 * (rng.uniform() - 0.5))};
    double mass = 0.0;
    for (int y1 : {0, 1})
      for (int y2 : {0, 1}) mass += std::exp(families::bernoulli_logpmf(y1, y2, par));
    worst_mass_err = std::max(worst_mass_err, std::abs(mass - 1.0));
  }
  const bool bern_ok = worst_mass_err < 1e-12;
  detail << "bernoulli cell-mass err " << worst_mass_err;

  // Poisson truncated mass on [0,60]^2 for lambda in (0,5]^3
  double worst_deficit = 0.0;
  for (int rep = 0; rep < 120; ++rep) {
    const families::BivariatePoissonParams par{
        0.02 + 4.98 * rng.uniform(), 0.02 + 4.98 * rng.uniform(), 5.0 * rng.uniform()};
    double mass = 0.0;
    for (long y1 = 0; y1 <= 60; ++y1)
      for (long y2 = 0; y2 <= 60; ++y2) mass += std::exp(families::poisson_logpmf(y1, y2, par));
    worst_deficit = std::max(worst_deficit, 1.0 - mass);
  }
  const bool pois_ok = worst_deficit <= 1e-8;
  detail << ", poisson mass deficit " << worst_deficit;

  // Gaussian rho = 0 factorization, exact
  double worst_factor = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const families::BivariateGaussianParams par{rng.normal(), rng.normal(),
                                                std::exp(0.7 * rng.normal()),
                                                std::exp(0.7 * rng.normal()), 0.0};
    const double y1 = par.mu1 + par.sigma1 * rng.normal();
    const double y2 = par.mu2 + par.sigma2 * rng.normal();
    auto uni = [](double y, double mu, double s) {
      const double z = (y - mu) / s;
      return -0.5 * 1.8378770664093454836 - std::log(s) - 0.5 * z * z;
    };
    worst_factor =
        std::max(worst_factor, std::abs(families::gaussian_logpdf(y1, y2, par) -
                                        (uni(y1, par.mu1, par.sigma1) + uni(y2, par.mu2, par.sigma2))));
  }
  const bool gauss_ok = worst_factor == 0.0;
  detail << ", gaussian factorization gap " << worst_factor;

  const double elapsed = seconds_since(t0);
  detail << ", " << elapsed << " s";
  out.pass = bern_ok && pois_ok && gauss_ok && elapsed < 30.0;
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// shared scenario harness

struct ScenarioRun {
  engine::FittedModel biv, uni;
  simulate::SimulatedDataset data;
  double nll_biv = 0.0, nll_uni = 0.0;
};

ScenarioRun run_scenario(simulate::ScenarioId id, int p, std::uint64_t seed, int m_max,
                         bool diagnostics) {
  ScenarioRun run;
  simulate::ScenarioSpec sspec;
  sspec.id = id;
  sspec.p = p;
  sspec.seed = seed;
  run.data = simulate::make_scenario(sspec);

  engine::ModelSpec mspec;
  mspec.family = run.data.family;
  mspec.response_columns = {"y1", "y2"};
  mspec.learners = simulate::scenario_learners(id, run.data.p);
  mspec.m_max = m_max;
  mspec.nu = 0.1;
  mspec.threads = 2;
  mspec.stabilization = engine::Stabilization::l2;
  mspec.offsets_mode = run.data.family.id == FamilyId::poisson2 ? engine::OffsetsMode::zero
                                                                : engine::OffsetsMode::mle;
  mspec.record_diagnostics = diagnostics;
  mspec.seed = seed;

  const bl::Adjacency* adj = run.data.truth.has_spatial ? &run.data.map.adjacency : nullptr;
  run.biv = engine::fit(mspec, run.data.train, &run.data.val, adj);

  engine::ModelSpec uspec = mspec;
  uspec.record_diagnostics = false;
  uspec.offset_overrides = simulate::independence_overrides(run.data.family);
  const int assoc = run.data.family.id == FamilyId::gaussian2 ? 4 : 2;
  uspec.learners[static_cast<std::size_t>(assoc)].clear();
  run.uni = engine::fit(uspec, run.data.train, &run.data.val, adj);

  const Eigen::MatrixXd ytest = run.data.test.responses("y1", "y2");
  run.nll_biv = scoring::nll_score(run.data.family,
                                   engine::predict(run.biv, run.data.test).params, ytest);
  run.nll_uni = scoring::nll_score(run.data.family,
                                   engine::predict(run.uni, run.data.test).params, ytest);
  return run;
}

struct SelectionTally {
  double informative_rate(int param) const {
    return inf_total[param] > 0 ? inf_sel[param] / inf_total[param] : 0.0;
  }
  double noise_rate(int param) const {
    return non_total[param] > 0 ? non_sel[param] / non_total[param] : 0.0;
  }
  void add(const simulate::SimulatedDataset& data, const engine::FittedModel& model, int p) {
    const auto report = engine::coefficients(model);
    for (std::size_t k = 0; k < model.learners.size(); ++k) {
      std::set<std::string> informative(data.truth.informative[k].begin(),
                                        data.truth.informative[k].end());
      std::set<std::string> selected;
      for (const auto& [cov, eff] : report.effects[k]) selected.insert(cov);
      for (const auto& cov : informative) {
        inf_total[k] += 1.0;
        if (selected.count(cov)) inf_sel[k] += 1.0;
      }
      for (int j = 0; j < p; ++j) {
        const std::string cov = "x" + std::to_string(j + 1);
        if (informative.count(cov)) continue;
        non_total[k] += 1.0;
        if (selected.count(cov)) non_sel[k] += 1.0;
      }
    }
  }
  double inf_sel[5] = {0}, inf_total[5] = {0}, non_sel[5] = {0}, non_total[5] = {0};
};

// criterion 3 + 4 + 8 share the same 20 replicates
struct PoissonResults {
  bool ran = false;
  std::map<std::string, double> slope_sum_l1, slope_sum_l2;
  SelectionTally tally;
  std::vector<std::pair<double, double>> nll;  // (biv, uni)
  bool invariants_ok = true;
  long invariant_checks = 0;
  double elapsed = 0.0;
};

PoissonResults& poisson_results() {
  static PoissonResults results;
  if (results.ran) return results;
  const auto t0 = std::chrono::steady_clock::now();
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const auto run = run_scenario(simulate::ScenarioId::pois_linear, 10, 1 + r, 5000, true);
    const auto report = engine::coefficients(run.biv);
    for (const auto& [cov, truth] : run.data.truth.linear_slopes[0]) {
      (void)truth;
      const auto it = report.effects[0].find(cov);
      results.slope_sum_l1[cov] += it == report.effects[0].end() ? 0.0 : it->second.slope;
    }
    for (const auto& [cov, truth] : run.data.truth.linear_slopes[1]) {
      (void)truth;
      const auto it = report.effects[1].find(cov);
      results.slope_sum_l2[cov] += it == report.effects[1].end() ? 0.0 : it->second.slope;
    }
    results.tally.add(run.data, run.biv, run.data.p);
    results.nll.emplace_back(run.nll_biv, run.nll_uni);

    // criterion 8: selection optimality from the logged diagnostics
    for (std::size_t t = 0; t < run.biv.history.size(); ++t) {
      const auto& h = run.biv.history[t];
      const auto& d = run.biv.diagnostics[t];
      for (int k = 0; k < 3; ++k) {
        if (std::isfinite(d.candidate_risks[k])) {
          ++results.invariant_checks;
          if (h.risk > d.candidate_risks[k]) results.invariants_ok = false;
        }
      }
      const auto& rss = d.learner_rss[static_cast<std::size_t>(h.parameter)];
      for (Eigen::Index j = 0; j < rss.size(); ++j) {
        ++results.invariant_checks;
        if (rss[h.learner] > rss[j]) results.invariants_ok = false;
      }
    }
  }
  for (auto& [cov, sum] : results.slope_sum_l1) sum /= reps;
  for (auto& [cov, sum] : results.slope_sum_l2) sum /= reps;
  results.elapsed = seconds_since(t0);
  results.ran = true;
  return results;
}

Outcome criterion3() {
  const auto& res = poisson_results();
  Outcome out;
  std::ostringstream detail;

  const std::map<std::string, double> truth_l1 = {{"x1", -1.0}, {"x2", 0.5}, {"x3", 1.5}};
  const std::map<std::string, double> truth_l2 = {
      {"x1", 2.0}, {"x3", -1.0}, {"x4", 1.5}, {"x5", 1.0}};
  double worst = 0.0;
  for (const auto& [cov, truth] : truth_l1) {
    worst = std::max(worst, std::abs(res.slope_sum_l1.at(cov) - truth));
  }
  for (const auto& [cov, truth] : truth_l2) {
    worst = std::max(worst, std::abs(res.slope_sum_l2.at(cov) - truth));
  }
  const double sel1 = res.tally.informative_rate(0);
  const double sel2 = res.tally.informative_rate(1);
  const double sel3 = res.tally.informative_rate(2);
  out.pass = worst <= 0.15 && sel1 >= 0.90 && sel2 >= 0.90 && sel3 >= 0.85;
  detail << "max |mean slope - truth| " << worst << " (<=0.15), informative selection "
         << 100 * sel1 << "% / " << 100 * sel2 << "% / " << 100 * sel3
         << "% (>=90/90/85), 20 replicates in " << res.elapsed << " s";
  out.detail = detail.str();
  return out;
}

Outcome criterion4() {
  const auto& res = poisson_results();
  Outcome out;
  int wins = 0;
  double mean_biv = 0.0;
  for (const auto& [biv, uni] : res.nll) {
    if (biv < uni) ++wins;
    mean_biv += biv;
  }
  mean_biv /= static_cast<double>(res.nll.size());
  const double target = 3413.68;
  const double lo = target * 0.93, hi = target * 1.07;
  const bool band_ok = mean_biv >= lo && mean_biv <= hi;
  out.pass = wins >= 18 && band_ok;
  std::ostringstream detail;
  detail << "bivariate < univariate in " << wins << "/20 (>=18), mean bivariate test NLL "
         << mean_biv << " vs band [" << lo << ", " << hi << "]";
  out.detail = detail.str();
  return out;
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const int reps = 20;
  SelectionTally tally;
  double auc1 = 0.0, auc2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto run = run_scenario(simulate::ScenarioId::bern_linear_high, 200, 1 + r, 2500, false);
    tally.add(run.data, run.biv, run.data.p);
    const auto pred = engine::predict(run.biv, run.data.test);
    const Eigen::MatrixXd ytest = run.data.test.responses("y1", "y2");
    auc1 += scoring::auc(pred.params.col(0), ytest.col(0));
    auc2 += scoring::auc(pred.params.col(1), ytest.col(1));
  }
  auc1 /= reps;
  auc2 /= reps;
  const double inf1 = tally.informative_rate(0);
  const double inf2 = tally.informative_rate(1);
  const double infpsi = tally.informative_rate(2);
  const double noise1 = tally.noise_rate(0);
  const double noise2 = tally.noise_rate(1);

  Outcome out;
  out.pass = inf1 >= 0.90 && inf2 >= 0.90 && infpsi >= 0.40 && noise1 < 0.05 && noise2 < 0.05 &&
             std::abs(auc1 - 0.88) <= 0.03 && std::abs(auc2 - 0.84) <= 0.03;
  std::ostringstream detail;
  detail << "informative " << 100 * inf1 << "% / " << 100 * inf2 << "% / " << 100 * infpsi
         << "% (>=90/90/40), mu noise " << 100 * noise1 << "% / " << 100 * noise2
         << "% (<5), AUC " << auc1 << " / " << auc2 << " (0.88 / 0.84 +-0.03), "
         << seconds_since(t0) << " s";
  out.detail = detail.str();
  return out;
}

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const int reps = 20;
  double msep1 = 0.0, msep2 = 0.0, rho_rate = 0.0;
  int wins = 0;
  for (int r = 0; r < reps; ++r) {
    const auto run = run_scenario(simulate::ScenarioId::gauss_spatial, 10, 1 + r, 2000, false);
    const auto pred = engine::predict(run.biv, run.data.test);
    const Eigen::MatrixXd ytest = run.data.test.responses("y1", "y2");
    const auto means = scoring::marginal_means(run.data.family, pred.params);
    const auto [m1, m2] = scoring::msep(means, ytest);
    msep1 += m1;
    msep2 += m2;
    if (run.nll_biv < run.nll_uni) ++wins;

    const auto report = engine::coefficients(run.biv);
    int sel = 0;
    for (const auto& cov : run.data.truth.informative[4]) {
      if (report.effects[4].count(cov)) ++sel;
    }
    rho_rate += sel / 3.0;
  }
  msep1 /= reps;
  msep2 /= reps;
  rho_rate /= reps;

  const bool msep_ok = std::abs(msep1 - 1.59) <= 0.15 && std::abs(msep2 - 1.38) <= 0.15;
  Outcome out;
  out.pass = msep_ok && wins >= 18 && rho_rate >= 0.90;
  std::ostringstream detail;
  detail << "MSEP " << msep1 << " / " << msep2 << " (1.59 / 1.38 +-0.15), bivariate < univariate "
         << wins << "/20 (>=18), rho informative " << 100 * rho_rate << "% (>=90), "
         << seconds_since(t0) << " s";
  out.detail = detail.str();
  return out;
}

Outcome criterion7() {
  Outcome out;
  // point mass at the observation scores exactly zero
  Eigen::MatrixXd point(8, 2);
  for (int i = 0; i < 8; ++i) {
    point(i, 0) = 2.5;
    point(i, 1) = -1.0;
  }
  const double zero = scoring::energy_score_from_samples(point, 2.5, -1.0);

  // two-point enumeration example
  Eigen::MatrixXd two(2, 2);
  two << 0.0, 0.0, 1.0, 0.0;
  const double es2 = scoring::energy_score_from_samples(two, 0.0, 0.0);

  // seeded Monte Carlo runs are bit-reproducible across thread counts
  const auto family = FamilySpec::make(FamilyId::gaussian2);
  Rng rng(3);
  Eigen::MatrixXd params(50, 5), y(50, 2);
  for (int i = 0; i < 50; ++i) {
    params.row(i) << rng.normal(), rng.normal(), std::exp(0.3 * rng.normal()),
        std::exp(0.3 * rng.normal()), 0.3;
    y(i, 0) = rng.normal();
    y(i, 1) = rng.normal();
  }
  const double a = scoring::energy_score(family, params, y, 500, 77, 1);
  const double b = scoring::energy_score(family, params, y, 500, 77, 2);

  out.pass = zero == 0.0 && std::abs(es2 - 0.25) <= 1e-12 && a == b;
  std::ostringstream detail;
  detail << "point-mass score " << zero << ", two-point example " << es2
         << " (0.25 exact), seeded runs " << (a == b ? "bit-identical" : "DIFFER");
  out.detail = detail.str();
  return out;
}

Outcome criterion8() {
  const auto& res = poisson_results();
  Outcome out;
  out.pass = res.invariants_ok && res.invariant_checks > 0;
  std::ostringstream detail;
  detail << (res.invariants_ok ? "all " : "violations among ") << res.invariant_checks
         << " logged risk/rss optimality checks across 20 replicate fits";
  out.detail = detail.str();
  return out;
}

Outcome criterion9() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "bivboost_acceptance_persist";
  fs::create_directories(dir);
  Outcome out;
  std::ostringstream detail;
  double worst = 0.0;
  for (const auto id : {simulate::ScenarioId::bern_linear_low, simulate::ScenarioId::pois_linear,
                        simulate::ScenarioId::gauss_spatial}) {
    simulate::ScenarioSpec sspec;
    sspec.id = id;
    sspec.n_train = 300;
    sspec.n_val = 120;
    sspec.n_test = 120;
    sspec.seed = 9;
    const auto data = simulate::make_scenario(sspec);
    engine::ModelSpec mspec;
    mspec.family = data.family;
    mspec.response_columns = {"y1", "y2"};
    mspec.learners = simulate::scenario_learners(id, data.p);
    mspec.m_max = 120;
    mspec.threads = 2;
    mspec.stabilization = engine::Stabilization::l2;
    mspec.offsets_mode = data.family.id == FamilyId::poisson2 ? engine::OffsetsMode::zero
                                                              : engine::OffsetsMode::mle;
    const bl::Adjacency* adj = data.truth.has_spatial ? &data.map.adjacency : nullptr;
    const auto model = engine::fit(mspec, data.train, &data.val, adj);

    const std::string path = (dir / (data.family.name() + ".json")).string();
    serialize::save_model(model, path);
    const auto loaded = serialize::load_model(path);
    const auto direct = engine::predict(model, data.test);
    const auto reloaded = engine::predict(loaded, data.test);
    worst = std::max(worst, (direct.params - reloaded.params).cwiseAbs().maxCoeff());
    worst = std::max(worst, (direct.eta - reloaded.eta).cwiseAbs().maxCoeff());
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  out.pass = worst == 0.0;
  detail << "max |in-memory - reloaded| prediction difference " << worst
         << " across the three families (must be 0)";
  out.detail = detail.str();
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  const std::vector<std::pair<int, Outcome (*)()>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3},
      {4, criterion4}, {5, criterion5}, {6, criterion6},
      {7, criterion7}, {8, criterion8}, {9, criterion9},
  };

  int failures = 0;
  for (const auto& [number, fn] : criteria) {
    if (!wanted.empty() && !wanted.count(number)) continue;
    Outcome outcome;
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %d: %s\n", outcome.pass ? "PASS" : "FAIL", number,
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures > 0) std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
