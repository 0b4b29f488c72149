#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bivboost/baselearners.hpp"
#include "bivboost/data.hpp"
#include "bivboost/families.hpp"

namespace bivboost::engine {

enum class OffsetsMode { mle, zero };

std::string offsets_mode_name(OffsetsMode mode);
OffsetsMode offsets_mode_from_name(const std::string& name);

// Per-iteration rescaling of each parameter's negative gradient before the
// base-learner fits. Gradient scales differ wildly between distribution
// parameters (raw count residuals versus bounded association scores), and
// without rescaling a parameter whose gradient lives on the response scale
// can never win a risk comparison. "mad" divides by the median absolute
// deviation from the median, "l2" by the root mean square; both are floored
// at 1e-4.
enum class Stabilization { none, mad, l2 };

std::string stabilization_name(Stabilization s);
Stabilization stabilization_from_name(const std::string& name);

struct ModelSpec {
  families::FamilySpec family;
  std::vector<std::string> response_columns;                // two names
  std::vector<std::vector<bl::BaseLearnerSpec>> learners;   // per parameter
  double nu = 0.1;
  int m_max = 5000;
  OffsetsMode offsets_mode = OffsetsMode::mle;
  // Fixed predictor offsets, e.g. eta_rho = 0 for an independence fit. A
  // parameter with an override keeps no learners and never moves.
  std::vector<std::optional<double>> offset_overrides;
  Stabilization stabilization = Stabilization::none;
  bool stop_on_no_improvement = false;
  bool record_diagnostics = false;
  int threads = 1;
  std::uint64_t seed = 0;  // carried into metadata; the loop itself is deterministic

  void validate() const;
};

struct HistoryEntry {
  int iteration;   // 1-based
  int parameter;   // updated predictor
  int learner;     // winning learner within that parameter
  double risk;     // in-sample risk after the update
};

struct IterationDiagnostics {
  Eigen::VectorXd candidate_risks;           // per parameter, NaN when frozen
  std::vector<Eigen::VectorXd> learner_rss;  // per parameter: rss of every learner
};

struct FittedLearner {
  bl::BaseLearnerSpec spec;
  int selected_count = 0;
  Eigen::VectorXd coef;  // accumulated nu-scaled coefficients at m_star
  // frozen training metadata
  double x_center = 0.0;
  double x_min = 0.0;
  double x_max = 0.0;
  bl::BsplineBasis basis;
  std::vector<std::string> regions;
  double lambda = 0.0;
  double df = 0.0;
  bool ridge_fallback = false;
};

struct FittedModel {
  families::FamilySpec family;
  std::vector<std::string> response_columns;
  double nu = 0.1;
  int m_max = 0;
  OffsetsMode offsets_mode = OffsetsMode::mle;
  std::vector<std::optional<double>> offset_overrides;
  Eigen::VectorXd offsets;
  bool offsets_fallback = false;
  int m_star = 0;
  std::vector<std::vector<FittedLearner>> learners;
  std::vector<double> risk_train;  // index 0 is the offset model
  std::vector<double> risk_val;    // empty when no validation set was given
  std::vector<HistoryEntry> history;
  std::vector<IterationDiagnostics> diagnostics;
  long n_train = 0;
  std::uint64_t seed = 0;
};

struct Prediction {
  Eigen::MatrixXd eta;     // n x K predictors
  Eigen::MatrixXd params;  // n x K fitted parameters
  long extrapolation_warnings = 0;
};

// Intercept-only predictor offsets. mle mode runs a coordinate-wise Newton on
// the pooled risk from moment-based starting values; divergence falls back to
// zero offsets and sets *fallback.
Eigen::VectorXd init_offsets(const families::FamilySpec& family,
                             const Eigen::MatrixXd& responses, OffsetsMode mode,
                             const std::vector<std::optional<double>>& overrides = {},
                             bool* fallback = nullptr);

// Runs the component-wise boosting loop: per iteration, every base-learner is
// fit to its parameter's negative gradient, the best learner per parameter is
// chosen by rss, and the single parameter whose damped update gives the lowest
// risk is committed.
class Booster {
 public:
  Booster(ModelSpec spec, const DataTable& train, const DataTable* validation = nullptr,
          const bl::Adjacency* adjacency = nullptr);
  ~Booster();

  Booster(const Booster&) = delete;
  Booster& operator=(const Booster&) = delete;

  // One iteration; returns false when nothing can (or should) move.
  bool step();

  // Freezes the model at the risk-optimal iteration (earliest validation
  // minimum, or all iterations without validation).
  FittedModel finish() const;

  int iterations_run() const;
  double current_risk() const;
  const Eigen::MatrixXd& eta() const;
  const std::vector<double>& train_trace() const;
  const std::vector<double>& val_trace() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

FittedModel fit(const ModelSpec& spec, const DataTable& train,
                const DataTable* validation = nullptr,
                const bl::Adjacency* adjacency = nullptr);

Prediction predict(const FittedModel& model, const DataTable& data);

// Aggregated effects at m_star. Linear effects collapse to a total slope with
// their intercept mass folded into the parameter intercept; spline and MRF
// effects keep their coefficient vectors. Never-selected learners are absent.
struct EffectSummary {
  bl::Kind kind = bl::Kind::linear;
  double slope = 0.0;
  Eigen::VectorXd coef;
  bl::BsplineBasis basis;
  std::vector<std::string> regions;
  double x_center = 0.0;
};

struct CoefficientReport {
  Eigen::VectorXd intercepts;  // offset plus folded linear intercept mass
  std::vector<std::map<std::string, EffectSummary>> effects;
};

CoefficientReport coefficients(const FittedModel& model);

// (parameter, learner) -> number of times selected.
std::map<std::pair<int, int>, long> selection_frequencies(
    const std::vector<HistoryEntry>& history);

}  // namespace bivboost::engine
