#include "bivboost/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bivboost::scoring {

namespace {

double sd_of(const std::vector<double>& values) {
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("score/label length mismatch");
  const auto n = scores.size();
  long n_pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw std::invalid_argument("labels must be 0 or 1");
    }
    if (labels[i] == 1.0) ++n_pos;
  }
  const long n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("AUC is undefined with a single class");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });

  // average ranks over tie groups
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1.0) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double brier(const Eigen::VectorXd& probabilities, const Eigen::VectorXd& labels) {
  if (probabilities.size() != labels.size()) {
    throw std::invalid_argument("probability/label length mismatch");
  }
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    if (!(probabilities[i] >= 0.0 && probabilities[i] <= 1.0)) {
      throw std::invalid_argument("probabilities must lie in [0, 1]");
    }
  }
  return (probabilities - labels).squaredNorm() / static_cast<double>(labels.size());
}

std::pair<double, double> msep(const Eigen::MatrixXd& predicted_means,
                               const Eigen::MatrixXd& responses) {
  if (predicted_means.rows() != responses.rows() || predicted_means.cols() != 2 ||
      responses.cols() != 2) {
    throw std::invalid_argument("msep expects matching n x 2 matrices");
  }
  const double n = static_cast<double>(responses.rows());
  return {(predicted_means.col(0) - responses.col(0)).squaredNorm() / n,
          (predicted_means.col(1) - responses.col(1)).squaredNorm() / n};
}

Eigen::MatrixXd marginal_means(const families::FamilySpec& family,
                               const Eigen::MatrixXd& params) {
  Eigen::MatrixXd means(params.rows(), 2);
  switch (family.id) {
    case families::FamilyId::bernoulli2:
      means.col(0) = params.col(0);
      means.col(1) = params.col(1);
      break;
    case families::FamilyId::poisson2:
      means.col(0) = params.col(0) + params.col(2);
      means.col(1) = params.col(1) + params.col(2);
      break;
    case families::FamilyId::gaussian2:
      means.col(0) = params.col(0);
      means.col(1) = params.col(1);
      break;
  }
  return means;
}

std::pair<double, double> sample_one(const families::FamilySpec& family,
                                     const Eigen::VectorXd& params, Rng& rng) {
  switch (family.id) {
    case families::FamilyId::bernoulli2: {
      const auto c = families::cell_probs(families::binary_params(params));
      const double u = rng.uniform();
      if (u < c.p00) return {0.0, 0.0};
      if (u < c.p00 + c.p01) return {0.0, 1.0};
      if (u < c.p00 + c.p01 + c.p10) return {1.0, 0.0};
      return {1.0, 1.0};
    }
    case families::FamilyId::poisson2: {
      const long z1 = rng.poisson(params[0]);
      const long z2 = rng.poisson(params[1]);
      const long z3 = rng.poisson(params[2]);
      return {static_cast<double>(z1 + z3), static_cast<double>(z2 + z3)};
    }
    case families::FamilyId::gaussian2: {
      const double n1 = rng.normal();
      const double n2 = rng.normal();
      const double rho = params[4];
      return {params[0] + params[2] * n1,
              params[1] + params[3] * (rho * n1 + std::sqrt((1.0 - rho) * (1.0 + rho)) * n2)};
    }
  }
  throw std::invalid_argument("unknown family id");
}

Eigen::MatrixXd sample(const families::FamilySpec& family, const Eigen::VectorXd& params,
                       long count, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd draws(count, 2);
  for (long i = 0; i < count; ++i) {
    const auto [y1, y2] = sample_one(family, params, rng);
    draws(i, 0) = y1;
    draws(i, 1) = y2;
  }
  return draws;
}

double energy_score_from_samples(const Eigen::MatrixXd& samples, double y1, double y2) {
  const auto s = samples.rows();
  if (s == 0) throw std::invalid_argument("empty predictive sample");
  double to_obs = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) {
    const double d1 = samples(i, 0) - y1;
    const double d2 = samples(i, 1) - y2;
    to_obs += std::sqrt(d1 * d1 + d2 * d2);
  }
  double between = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = i + 1; j < s; ++j) {
      const double d1 = samples(i, 0) - samples(j, 0);
      const double d2 = samples(i, 1) - samples(j, 1);
      between += std::sqrt(d1 * d1 + d2 * d2);
    }
  }
  const double ss = static_cast<double>(s);
  return to_obs / ss - between / (ss * ss);
}

double energy_score(const families::FamilySpec& family, const Eigen::MatrixXd& params,
                    const Eigen::MatrixXd& responses, int mc_samples, std::uint64_t seed,
                    int threads, std::vector<double>* per_row) {
  if (params.rows() != responses.rows()) {
    throw std::invalid_argument("parameter/response row counts differ");
  }
  if (mc_samples < 1) throw std::invalid_argument("mc_samples must be positive");
  const auto n = params.rows();
  std::vector<double> rows(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](std::int64_t lo, std::int64_t hi) {
    Eigen::MatrixXd draws(mc_samples, 2);
    for (std::int64_t i = lo; i < hi; ++i) {
      Rng rng(hash_seed(seed, static_cast<std::uint64_t>(i)));
      const Eigen::VectorXd par = params.row(i).transpose();
      for (int s = 0; s < mc_samples; ++s) {
        const auto [d1, d2] = sample_one(family, par, rng);
        draws(s, 0) = d1;
        draws(s, 1) = d2;
      }
      rows[static_cast<std::size_t>(i)] =
          energy_score_from_samples(draws, responses(i, 0), responses(i, 1));
    }
  });
  if (per_row) *per_row = rows;
  return std::accumulate(rows.begin(), rows.end(), 0.0) / static_cast<double>(n);
}

double nll_score(const families::FamilySpec& family, const Eigen::MatrixXd& params,
                 const Eigen::MatrixXd& responses, std::vector<double>* per_row) {
  if (params.rows() != responses.rows()) {
    throw std::invalid_argument("parameter/response row counts differ");
  }
  double total = 0.0;
  if (per_row) per_row->resize(static_cast<std::size_t>(params.rows()));
  for (Eigen::Index i = 0; i < params.rows(); ++i) {
    const double contribution =
        -families::log_density(family, responses(i, 0), responses(i, 1), params.row(i).transpose());
    if (per_row) (*per_row)[static_cast<std::size_t>(i)] = contribution;
    total += contribution;
  }
  return total;
}

std::string ScoreReport::to_csv() const {
  std::ostringstream out;
  out << "metric,margin,value,sd\n";
  for (const auto& row : rows) {
    out << row.metric << ',' << row.margin << ',' << format_double(row.value) << ','
        << format_double(row.sd) << '\n';
  }
  return out.str();
}

ScoreReport score_report(const families::FamilySpec& family, const Eigen::MatrixXd& params,
                         const Eigen::MatrixXd& responses,
                         const std::vector<std::string>& metrics, int mc_samples,
                         std::uint64_t seed, int threads) {
  ScoreReport report;
  report.n = responses.rows();
  report.family = family.name();
  report.mc_samples = mc_samples;
  report.seed = seed;

  auto wants = [&](const std::string& name) {
    return std::find(metrics.begin(), metrics.end(), name) != metrics.end();
  };

  if (wants("auc")) {
    if (family.id != families::FamilyId::bernoulli2) {
      throw std::invalid_argument("AUC requires binary responses");
    }
    report.rows.push_back({"auc", "y1", auc(params.col(0), responses.col(0)),
                           std::numeric_limits<double>::quiet_NaN()});
    report.rows.push_back({"auc", "y2", auc(params.col(1), responses.col(1)),
                           std::numeric_limits<double>::quiet_NaN()});
  }
  if (wants("brier")) {
    if (family.id != families::FamilyId::bernoulli2) {
      throw std::invalid_argument("Brier score requires binary responses");
    }
    for (int m = 0; m < 2; ++m) {
      std::vector<double> contrib(static_cast<std::size_t>(responses.rows()));
      for (Eigen::Index i = 0; i < responses.rows(); ++i) {
        contrib[static_cast<std::size_t>(i)] = std::pow(params(i, m) - responses(i, m), 2);
      }
      report.rows.push_back({"brier", m == 0 ? "y1" : "y2",
                             brier(params.col(m), responses.col(m)), sd_of(contrib)});
    }
  }
  if (wants("msep")) {
    const Eigen::MatrixXd means = marginal_means(family, params);
    const auto [m1, m2] = msep(means, responses);
    for (int m = 0; m < 2; ++m) {
      std::vector<double> contrib(static_cast<std::size_t>(responses.rows()));
      for (Eigen::Index i = 0; i < responses.rows(); ++i) {
        contrib[static_cast<std::size_t>(i)] = std::pow(means(i, m) - responses(i, m), 2);
      }
      report.rows.push_back({"msep", m == 0 ? "y1" : "y2", m == 0 ? m1 : m2, sd_of(contrib)});
    }
  }
  if (wants("nll")) {
    std::vector<double> contrib;
    const double value = nll_score(family, params, responses, &contrib);
    report.rows.push_back({"nll", "joint", value, sd_of(contrib)});
  }
  if (wants("energy")) {
    std::vector<double> contrib;
    const double value =
        energy_score(family, params, responses, mc_samples, seed, threads, &contrib);
    report.rows.push_back({"energy", "joint", value, sd_of(contrib)});
  }
  return report;
}

}  // namespace bivboost::scoring
