#include "bivboost/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

#include "bivboost/common.hpp"
#include "bivboost/config.hpp"
#include "bivboost/engine.hpp"
#include "bivboost/io.hpp"
#include "bivboost/scoring.hpp"
#include "bivboost/serialize.hpp"
#include "bivboost/simulate.hpp"

namespace bivboost::cli {

namespace {

namespace fs = std::filesystem;

int resolve_threads(int requested) {
  if (const char* env = std::getenv("BIVBOOST_THREADS")) requested = std::atoi(env);
  if (requested <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
  return requested;
}

std::uint64_t resolve_seed(std::uint64_t seed, bool seed_given) {
  if (const char* env = std::getenv("BIVBOOST_SEED")) {
    if (!seed_given) return std::strtoull(env, nullptr, 10);
  }
  return seed;
}

// region columns referenced by mrf learners must load as labels even when
// their values look numeric
std::map<std::string, io::ColumnType> hints_for(const config::ModelConfig& cfg) {
  std::map<std::string, io::ColumnType> hints;
  for (const auto& per_param : cfg.learners) {
    for (const auto& learner : per_param) {
      if (learner.kind == bl::Kind::mrf) hints[learner.covariate] = io::ColumnType::categorical;
    }
  }
  return hints;
}

std::map<std::string, io::ColumnType> hints_for(const engine::FittedModel& model) {
  std::map<std::string, io::ColumnType> hints;
  for (const auto& per_param : model.learners) {
    for (const auto& learner : per_param) {
      if (learner.spec.kind == bl::Kind::mrf) {
        hints[learner.spec.covariate] = io::ColumnType::categorical;
      }
    }
  }
  return hints;
}

void write_risk_trace(const std::string& path, const engine::FittedModel& model) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  const bool has_val = !model.risk_val.empty();
  out << "iteration,parameter,learner,train_risk" << (has_val ? ",val_risk" : "") << '\n';
  for (std::size_t t = 0; t < model.risk_train.size(); ++t) {
    if (t == 0) {
      out << "0,,," << io::format_double(model.risk_train[0]);
    } else {
      const auto& h = model.history[t - 1];
      out << t << ',' << model.family.parameter_names[static_cast<std::size_t>(h.parameter)]
          << ',' << h.learner << ',' << io::format_double(model.risk_train[t]);
    }
    if (has_val) out << ',' << io::format_double(model.risk_val[t]);
    out << '\n';
  }
}

int cmd_fit(const std::string& config_path, const std::string& train_path,
            const std::string& validation_path, const std::string& model_path,
            const std::string& trace_path, int threads_flag, std::uint64_t seed,
            bool seed_given) {
  auto cfg = config::parse_config(config_path);
  if (seed_given) cfg.seed = seed;
  cfg.seed = resolve_seed(cfg.seed, seed_given);
  cfg.threads = resolve_threads(threads_flag > 0 ? threads_flag : cfg.threads);

  const auto hints = hints_for(cfg);
  DataTable train = io::load_csv(train_path, hints);

  std::optional<DataTable> validation;
  std::string val_path = !validation_path.empty() ? validation_path : cfg.validation_file;
  if (!val_path.empty()) {
    validation = io::load_csv(val_path, hints);
  } else if (cfg.validation_split > 0.0) {
    // seeded shuffle, tail share becomes the validation set
    std::vector<long> order(static_cast<std::size_t>(train.n_rows()));
    std::iota(order.begin(), order.end(), 0L);
    Rng rng(hash_seed(cfg.seed, 0x76616c));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(
                                  static_cast<std::int64_t>(i)))]);
    }
    const auto n_val = static_cast<std::size_t>(cfg.validation_split *
                                                static_cast<double>(order.size()));
    if (n_val == 0 || n_val >= order.size()) {
      throw std::invalid_argument("validation split leaves an empty partition");
    }
    std::vector<long> val_rows(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    order.resize(order.size() - n_val);
    validation = train.subset(val_rows);
    train = train.subset(order);
  }

  std::optional<bl::Adjacency> adjacency;
  if (!cfg.adjacency_file.empty()) adjacency = io::load_adjacency(cfg.adjacency_file);

  const engine::ModelSpec spec = config::build_model_spec(cfg, train);
  const engine::FittedModel model =
      engine::fit(spec, train, validation ? &*validation : nullptr,
                  adjacency ? &*adjacency : nullptr);
  serialize::save_model(model, model_path);
  if (!trace_path.empty()) write_risk_trace(trace_path, model);
  std::cout << "fitted " << model.family.name() << " model: m_star=" << model.m_star << " of "
            << model.history.size() << " iterations, train risk "
            << model.risk_train[static_cast<std::size_t>(model.m_star)] << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
  const auto model = serialize::load_model(model_path);
  const DataTable data = io::load_csv(data_path, hints_for(model));
  const auto pred = engine::predict(model, data);

  DataTable out;
  const auto& names = model.family.parameter_names;
  for (int k = 0; k < model.family.param_count; ++k) {
    out.add_numeric("eta_" + names[static_cast<std::size_t>(k)], pred.eta.col(k));
  }
  for (int k = 0; k < model.family.param_count; ++k) {
    out.add_numeric(names[static_cast<std::size_t>(k)], pred.params.col(k));
  }
  io::write_csv(out_path, out);
  if (pred.extrapolation_warnings > 0) {
    std::cerr << "WARNING: " << pred.extrapolation_warnings
              << " smooth-covariate values outside the training range were extrapolated\n";
  }
  return 0;
}

int cmd_score(const std::string& model_path, const std::string& data_path,
              const std::string& out_path, const std::string& json_path,
              std::vector<std::string> metrics, int mc_samples, std::uint64_t seed,
              bool seed_given, int threads_flag) {
  const auto model = serialize::load_model(model_path);
  const DataTable data = io::load_csv(data_path, hints_for(model));
  const auto pred = engine::predict(model, data);
  const Eigen::MatrixXd responses =
      data.responses(model.response_columns[0], model.response_columns[1]);
  families::validate_responses(model.family, responses);

  if (metrics.empty()) {
    metrics = model.family.id == families::FamilyId::bernoulli2
                  ? std::vector<std::string>{"auc", "brier", "nll", "energy"}
                  : std::vector<std::string>{"msep", "nll", "energy"};
  }
  const auto report = scoring::score_report(model.family, pred.params, responses, metrics,
                                            mc_samples, resolve_seed(seed, seed_given),
                                            resolve_threads(threads_flag));
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot write '" + out_path + "'");
  out << report.to_csv();
  std::cout << report.to_csv();
  if (!json_path.empty()) {
    nlohmann::json doc;
    doc["family"] = report.family;
    doc["n"] = report.n;
    doc["mc_samples"] = report.mc_samples;
    doc["seed"] = report.seed;
    doc["metrics"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
      nlohmann::json node = {{"metric", row.metric}, {"margin", row.margin},
                             {"value", row.value}};
      if (!std::isnan(row.sd)) node["sd"] = row.sd;
      doc["metrics"].push_back(std::move(node));
    }
    std::ofstream json_out(json_path);
    if (!json_out) throw std::invalid_argument("cannot write '" + json_path + "'");
    json_out << doc.dump(2) << '\n';
  }
  return 0;
}

int cmd_simulate(const std::string& scenario, std::uint64_t seed, bool seed_given,
                 const std::string& out_dir, int n_train, int n_val, int n_test, int p,
                 int grid_rows, int grid_cols) {
  simulate::ScenarioSpec spec;
  spec.id = simulate::scenario_from_name(scenario);
  spec.seed = resolve_seed(seed, seed_given);
  if (n_train > 0) spec.n_train = n_train;
  if (n_val >= 0) spec.n_val = n_val;
  if (n_test >= 0) spec.n_test = n_test;
  if (p > 0) spec.p = p;
  if (grid_rows > 0) spec.grid_rows = grid_rows;
  if (grid_cols > 0) spec.grid_cols = grid_cols;

  const auto data = simulate::make_scenario(spec);
  fs::create_directories(out_dir);
  io::write_csv((fs::path(out_dir) / "train.csv").string(), data.train);
  io::write_csv((fs::path(out_dir) / "val.csv").string(), data.val);
  io::write_csv((fs::path(out_dir) / "test.csv").string(), data.test);
  if (data.truth.has_spatial) {
    io::write_adjacency((fs::path(out_dir) / "adjacency.txt").string(), data.map.adjacency);
  }

  // truth record as structured text
  std::ofstream truth((fs::path(out_dir) / "truth.json").string());
  truth << "{\n  \"scenario\": \"" << scenario << "\",\n  \"family\": \""
        << data.family.name() << "\",\n  \"seed\": " << spec.seed << ",\n  \"p\": " << data.p
        << ",\n  \"parameters\": [\n";
  for (int k = 0; k < data.family.param_count; ++k) {
    truth << "    {\"name\": \"" << data.family.parameter_names[static_cast<std::size_t>(k)]
          << "\", \"intercept\": " << io::format_double(data.truth.intercepts[k])
          << ", \"informative\": [";
    const auto& inf = data.truth.informative[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < inf.size(); ++i) {
      truth << (i ? ", " : "") << '"' << inf[i] << '"';
    }
    truth << "], \"linear_slopes\": {";
    const auto& slopes = data.truth.linear_slopes[static_cast<std::size_t>(k)];
    std::size_t i = 0;
    for (const auto& [cov, slope] : slopes) {
      truth << (i++ ? ", " : "") << '"' << cov << "\": " << io::format_double(slope);
    }
    truth << "}}" << (k + 1 < data.family.param_count ? "," : "") << "\n";
  }
  truth << "  ]\n}\n";

  std::cout << "wrote " << scenario << " (seed " << spec.seed << ", p=" << data.p << ") to "
            << out_dir << "\n";
  return 0;
}

int cmd_effects(const std::string& model_path, const std::string& out_dir, int grid_size) {
  const auto model = serialize::load_model(model_path);
  fs::create_directories(out_dir);
  for (std::size_t k = 0; k < model.learners.size(); ++k) {
    const auto& pname = model.family.parameter_names[k];
    for (const auto& learner : model.learners[k]) {
      const fs::path file =
          fs::path(out_dir) / ("effect_" + pname + "_" + learner.spec.covariate + ".csv");
      std::ofstream out(file);
      if (!out) throw std::invalid_argument("cannot write '" + file.string() + "'");
      switch (learner.spec.kind) {
        case bl::Kind::mrf: {
          out << "region,effect\n";
          for (std::size_t r = 0; r < learner.regions.size(); ++r) {
            const double value =
                learner.selected_count ? learner.coef[static_cast<Eigen::Index>(r)] : 0.0;
            out << learner.regions[r] << ',' << io::format_double(value) << '\n';
          }
          break;
        }
        case bl::Kind::linear:
        case bl::Kind::pspline: {
          out << learner.spec.covariate << ",effect\n";
          const bool spline = learner.spec.kind == bl::Kind::pspline;
          const double lo = spline ? learner.basis.lo : learner.x_min;
          const double hi = spline ? learner.basis.hi : learner.x_max;
          std::vector<double> row(spline ? static_cast<std::size_t>(learner.basis.n_basis())
                                         : 0);
          for (int g = 0; g < grid_size; ++g) {
            const double x = lo + (hi - lo) * g / (grid_size - 1);
            double value = 0.0;
            if (learner.selected_count) {
              if (spline) {
                learner.basis.row(x, row.data());
                for (int j = 0; j < learner.basis.n_basis(); ++j) {
                  value += row[static_cast<std::size_t>(j)] * learner.coef[j];
                }
              } else {
                value = learner.coef[0] + learner.coef[1] * (x - learner.x_center);
              }
            }
            out << io::format_double(x) << ',' << io::format_double(value) << '\n';
          }
          break;
        }
      }
    }
  }
  return 0;
}

int cmd_freqs(const std::string& model_path, const std::string& out_path) {
  const auto model = serialize::load_model(model_path);
  const auto freqs = engine::selection_frequencies(model.history);
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot write '" + out_path + "'");
  out << "parameter,covariate,kind,count,share\n";
  const double total = static_cast<double>(model.history.size());
  for (const auto& [key, count] : freqs) {
    const auto& learner =
        model.learners[static_cast<std::size_t>(key.first)][static_cast<std::size_t>(key.second)];
    out << model.family.parameter_names[static_cast<std::size_t>(key.first)] << ','
        << learner.spec.covariate << ',' << bl::kind_name(learner.spec.kind) << ',' << count
        << ',' << io::format_double(total > 0 ? count / total : 0.0) << '\n';
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"bivariate distributional regression by component-wise gradient boosting"};
  app.require_subcommand(1);

  // fit
  std::string config_path, train_path, validation_path, model_path, trace_path;
  int threads = 0;
  std::uint64_t seed = 0;
  auto* fit = app.add_subcommand("fit", "fit a model from a config and a training CSV");
  fit->add_option("--config", config_path, "model configuration (JSON)")->required();
  fit->add_option("--train", train_path, "training data CSV")->required();
  fit->add_option("--validation", validation_path, "validation data CSV (tunes m_star)");
  fit->add_option("--model", model_path, "output model file")->required();
  fit->add_option("--risk-trace", trace_path, "output risk trace CSV");
  fit->add_option("--threads", threads, "worker threads (default: all cores)");
  auto* fit_seed = fit->add_option("--seed", seed, "seed recorded in model metadata");

  // predict
  std::string p_model, p_data, p_out;
  auto* predict = app.add_subcommand("predict", "predict parameters for a CSV");
  predict->add_option("--model", p_model)->required();
  predict->add_option("--data", p_data)->required();
  predict->add_option("--out", p_out)->required();

  // score
  std::string s_model, s_data, s_out, s_json;
  std::vector<std::string> s_metrics;
  int mc_samples = 1000;
  std::uint64_t s_seed = 0;
  int s_threads = 0;
  auto* score = app.add_subcommand("score", "evaluate predictive metrics on a CSV");
  score->add_option("--model", s_model)->required();
  score->add_option("--data", s_data)->required();
  score->add_option("--out", s_out)->required();
  score->add_option("--json", s_json, "also write the report as JSON");
  score->add_option("--metrics", s_metrics,
                    "subset of auc, brier, msep, nll, energy (default: family set)");
  score->add_option("--mc-samples", mc_samples, "energy-score sample count");
  auto* score_seed = score->add_option("--seed", s_seed, "energy-score seed");
  score->add_option("--threads", s_threads);

  // simulate
  std::string scenario, out_dir;
  std::uint64_t sim_seed = 1;
  int n_train = 0, n_val = -1, n_test = -1, p = 0, grid_rows = 0, grid_cols = 0;
  auto* sim = app.add_subcommand("simulate", "generate a benchmark scenario");
  sim->add_option("--scenario", scenario, "one of: " + [] {
        std::string names;
        for (const auto& n : simulate::scenario_names()) names += n + " ";
        return names;
      }())
      ->required();
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed);
  sim->add_option("--out-dir", out_dir)->required();
  sim->add_option("--n-train", n_train);
  sim->add_option("--n-val", n_val);
  sim->add_option("--n-test", n_test);
  sim->add_option("--p", p, "covariate count (scenario default when omitted)");
  sim->add_option("--grid-rows", grid_rows);
  sim->add_option("--grid-cols", grid_cols);

  // effects
  std::string e_model, e_dir;
  int grid_size = 100;
  auto* effects = app.add_subcommand("effects", "export partial-effect grids as CSV");
  effects->add_option("--model", e_model)->required();
  effects->add_option("--out-dir", e_dir)->required();
  effects->add_option("--grid", grid_size, "grid points per covariate");

  // freqs
  std::string f_model, f_out;
  auto* freqs = app.add_subcommand("freqs", "selection-frequency table");
  freqs->add_option("--model", f_model)->required();
  freqs->add_option("--out", f_out)->required();

  std::vector<const char*> argv;
  argv.push_back("bivboost");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "ERROR: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*fit) {
      return cmd_fit(config_path, train_path, validation_path, model_path, trace_path, threads,
                     seed, fit_seed->count() > 0);
    }
    if (*predict) return cmd_predict(p_model, p_data, p_out);
    if (*score) {
      return cmd_score(s_model, s_data, s_out, s_json, s_metrics, mc_samples, s_seed,
                       score_seed->count() > 0, s_threads);
    }
    if (*sim) {
      return cmd_simulate(scenario, sim_seed, sim_seed_opt->count() > 0, out_dir, n_train, n_val,
                          n_test, p, grid_rows, grid_cols);
    }
    if (*effects) return cmd_effects(e_model, e_dir, grid_size);
    if (*freqs) return cmd_freqs(f_model, f_out);
  } catch (const std::exception& e) {
    std::cerr << "ERROR: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace bivboost::cli
