#include "bivboost/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bivboost::config {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    (void)value;
    if (!key.empty() && key[0] == '_') continue;  // underscore keys are comments
    if (!allowed.count(key)) {
      throw std::invalid_argument("unknown key '" + key + "' in " + where);
    }
  }
}

bl::BaseLearnerSpec parse_learner(const json& node, const std::string& where) {
  if (!node.is_object()) throw std::invalid_argument(where + ": learner must be an object");
  reject_unknown_keys(node, {"covariate", "kind", "df", "n_knots", "degree", "diff_order"},
                      where);
  bl::BaseLearnerSpec spec;
  if (!node.contains("covariate")) {
    throw std::invalid_argument(where + ": learner needs a covariate");
  }
  spec.covariate = node.at("covariate").get<std::string>();
  spec.kind = bl::kind_from_name(node.value("kind", std::string("linear")));
  switch (spec.kind) {
    case bl::Kind::pspline:
      spec.pspline.df = node.value("df", spec.pspline.df);
      spec.pspline.n_knots = node.value("n_knots", spec.pspline.n_knots);
      spec.pspline.degree = node.value("degree", spec.pspline.degree);
      spec.pspline.diff_order = node.value("diff_order", spec.pspline.diff_order);
      break;
    case bl::Kind::mrf:
      spec.mrf.df = node.value("df", spec.mrf.df);
      break;
    case bl::Kind::linear:
      for (const char* key : {"df", "n_knots", "degree", "diff_order"}) {
        if (node.contains(key)) {
          throw std::invalid_argument(where + ": linear learners take no '" + key + "' option");
        }
      }
      break;
  }
  return spec;
}

}  // namespace

ModelConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path);
}

ModelConfig parse_config_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument(origin + ": config must be a JSON object");
  reject_unknown_keys(doc,
                      {"family", "responses", "nu", "m_max", "offsets", "stabilization",
                       "seed", "threads", "stop_on_no_improvement", "record_diagnostics",
                       "validation_file", "validation_split", "adjacency_file", "parameters",
                       "offset_overrides"},
                      origin);

  ModelConfig cfg;
  if (!doc.contains("family")) throw std::invalid_argument(origin + ": missing 'family'");
  cfg.family = doc.at("family").get<std::string>();
  const auto family = families::FamilySpec::from_name(cfg.family);

  if (!doc.contains("responses")) throw std::invalid_argument(origin + ": missing 'responses'");
  cfg.responses = doc.at("responses").get<std::vector<std::string>>();
  if (cfg.responses.size() != 2) {
    throw std::invalid_argument(origin + ": 'responses' must name exactly two columns");
  }

  cfg.nu = doc.value("nu", cfg.nu);
  cfg.m_max = doc.value("m_max", cfg.m_max);
  cfg.offsets = doc.value("offsets", cfg.offsets);
  cfg.stabilization = doc.value("stabilization", cfg.stabilization);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.threads = doc.value("threads", cfg.threads);
  cfg.stop_on_no_improvement = doc.value("stop_on_no_improvement", cfg.stop_on_no_improvement);
  cfg.record_diagnostics = doc.value("record_diagnostics", cfg.record_diagnostics);
  cfg.validation_file = doc.value("validation_file", cfg.validation_file);
  cfg.validation_split = doc.value("validation_split", cfg.validation_split);
  if (cfg.validation_split != 0.0 &&
      !(cfg.validation_split > 0.0 && cfg.validation_split < 1.0)) {
    throw std::invalid_argument(origin + ": 'validation_split' must lie in (0, 1)");
  }
  if (cfg.validation_split > 0.0 && !cfg.validation_file.empty()) {
    throw std::invalid_argument(origin +
                                ": give either 'validation_file' or 'validation_split'");
  }
  cfg.adjacency_file = doc.value("adjacency_file", cfg.adjacency_file);
  engine::offsets_mode_from_name(cfg.offsets);
  engine::stabilization_from_name(cfg.stabilization);

  auto param_index = [&](const std::string& name) {
    for (int k = 0; k < family.param_count; ++k) {
      if (family.parameter_names[static_cast<std::size_t>(k)] == name) return k;
    }
    throw std::invalid_argument(origin + ": '" + name + "' is not a parameter of " +
                                cfg.family);
  };

  cfg.offset_overrides.assign(static_cast<std::size_t>(family.param_count), std::nullopt);
  if (doc.contains("offset_overrides")) {
    const json& overrides = doc.at("offset_overrides");
    if (!overrides.is_object()) {
      throw std::invalid_argument(origin + ": 'offset_overrides' must map parameters to values");
    }
    for (const auto& [name, value] : overrides.items()) {
      cfg.offset_overrides[static_cast<std::size_t>(param_index(name))] = value.get<double>();
    }
  }

  if (doc.contains("parameters")) {
    cfg.learners_given = true;
    cfg.learners.assign(static_cast<std::size_t>(family.param_count), {});
    const json& params = doc.at("parameters");
    if (!params.is_object()) {
      throw std::invalid_argument(origin + ": 'parameters' must be an object");
    }
    for (const auto& [name, node] : params.items()) {
      const int k = param_index(name);
      const std::string where = origin + ": parameters." + name;
      reject_unknown_keys(node, {"learners"}, where);
      if (!node.contains("learners")) continue;
      for (const auto& learner : node.at("learners")) {
        cfg.learners[static_cast<std::size_t>(k)].push_back(parse_learner(learner, where));
      }
    }
  }
  return cfg;
}

engine::ModelSpec build_model_spec(const ModelConfig& config, const DataTable& table) {
  engine::ModelSpec spec;
  spec.family = families::FamilySpec::from_name(config.family);
  spec.response_columns = config.responses;
  spec.nu = config.nu;
  spec.m_max = config.m_max;
  spec.offsets_mode = engine::offsets_mode_from_name(config.offsets);
  spec.stabilization = engine::stabilization_from_name(config.stabilization);
  spec.offset_overrides = config.offset_overrides;
  spec.stop_on_no_improvement = config.stop_on_no_improvement;
  spec.record_diagnostics = config.record_diagnostics;
  spec.seed = config.seed;
  spec.threads = config.threads;

  for (const auto& response : config.responses) {
    if (!table.has_column(response)) {
      throw std::invalid_argument("response column '" + response + "' not in the dataset");
    }
  }

  if (config.learners_given) {
    spec.learners = config.learners;
  } else {
    // documented default: every numeric covariate as a linear learner for
    // every distribution parameter
    std::vector<bl::BaseLearnerSpec> per_param;
    for (const auto& column : table.columns()) {
      if (!column.is_numeric) continue;
      if (column.name == config.responses[0] || column.name == config.responses[1]) continue;
      bl::BaseLearnerSpec learner;
      learner.kind = bl::Kind::linear;
      learner.covariate = column.name;
      per_param.push_back(learner);
    }
    spec.learners.assign(static_cast<std::size_t>(spec.family.param_count), per_param);
    for (int k = 0; k < spec.family.param_count; ++k) {
      if (spec.offset_overrides[static_cast<std::size_t>(k)].has_value()) {
        spec.learners[static_cast<std::size_t>(k)].clear();
      }
    }
  }

  for (const auto& per_param : spec.learners) {
    for (const auto& learner : per_param) {
      if (!table.has_column(learner.covariate)) {
        throw std::invalid_argument("covariate '" + learner.covariate +
                                    "' not in the dataset");
      }
      if (learner.kind == bl::Kind::mrf && config.adjacency_file.empty()) {
        throw std::invalid_argument("mrf learner on '" + learner.covariate +
                                    "' needs an 'adjacency_file'");
      }
    }
  }
  spec.validate();
  return spec;
}

}  // namespace bivboost::config
