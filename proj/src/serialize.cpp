#include "bivboost/serialize.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace bivboost::serialize {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& x : arr) v[i++] = x.get<double>();
  return v;
}

json learner_to_json(const engine::FittedLearner& learner) {
  json node;
  node["kind"] = bl::kind_name(learner.spec.kind);
  node["covariate"] = learner.spec.covariate;
  node["selected"] = learner.selected_count;
  node["coef"] = vector_to_json(learner.coef);
  switch (learner.spec.kind) {
    case bl::Kind::linear:
      node["x_center"] = learner.x_center;
      node["range"] = {learner.x_min, learner.x_max};
      break;
    case bl::Kind::pspline:
      node["range"] = {learner.basis.lo, learner.basis.hi};
      node["n_knots"] = learner.basis.n_knots;
      node["degree"] = learner.basis.degree;
      node["diff_order"] = learner.spec.pspline.diff_order;
      node["df"] = learner.df;
      node["lambda"] = learner.lambda;
      break;
    case bl::Kind::mrf:
      node["regions"] = learner.regions;
      node["df"] = learner.df;
      node["lambda"] = learner.lambda;
      break;
  }
  if (learner.ridge_fallback) node["ridge_fallback"] = true;
  return node;
}

engine::FittedLearner learner_from_json(const json& node) {
  engine::FittedLearner learner;
  learner.spec.kind = bl::kind_from_name(node.at("kind").get<std::string>());
  learner.spec.covariate = node.at("covariate").get<std::string>();
  learner.selected_count = node.at("selected").get<int>();
  learner.coef = vector_from_json(node.at("coef"));
  switch (learner.spec.kind) {
    case bl::Kind::linear: {
      learner.x_center = node.at("x_center").get<double>();
      const auto range = node.at("range");
      learner.x_min = range.at(0).get<double>();
      learner.x_max = range.at(1).get<double>();
      break;
    }
    case bl::Kind::pspline: {
      const auto range = node.at("range");
      learner.basis = bl::BsplineBasis::over_range(range.at(0).get<double>(),
                                                   range.at(1).get<double>(),
                                                   node.at("n_knots").get<int>(),
                                                   node.at("degree").get<int>());
      learner.spec.pspline.n_knots = learner.basis.n_knots;
      learner.spec.pspline.degree = learner.basis.degree;
      learner.spec.pspline.diff_order = node.at("diff_order").get<int>();
      learner.spec.pspline.df = node.at("df").get<double>();
      learner.df = node.at("df").get<double>();
      learner.lambda = node.at("lambda").get<double>();
      break;
    }
    case bl::Kind::mrf:
      learner.regions = node.at("regions").get<std::vector<std::string>>();
      learner.spec.mrf.df = node.at("df").get<double>();
      learner.df = node.at("df").get<double>();
      learner.lambda = node.at("lambda").get<double>();
      break;
  }
  learner.ridge_fallback = node.value("ridge_fallback", false);
  return learner;
}

}  // namespace

std::string to_json(const engine::FittedModel& model) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["family"] = model.family.name();
  doc["responses"] = model.response_columns;
  doc["nu"] = model.nu;
  doc["m_max"] = model.m_max;
  doc["m_star"] = model.m_star;
  doc["offsets_mode"] = engine::offsets_mode_name(model.offsets_mode);
  doc["offsets"] = vector_to_json(model.offsets);
  doc["offsets_fallback"] = model.offsets_fallback;
  doc["n_train"] = model.n_train;
  doc["seed"] = model.seed;

  json overrides = json::array();
  for (const auto& value : model.offset_overrides) {
    overrides.push_back(value.has_value() ? json(*value) : json(nullptr));
  }
  doc["offset_overrides"] = overrides;

  json params = json::array();
  for (const auto& per_param : model.learners) {
    json learners = json::array();
    for (const auto& learner : per_param) learners.push_back(learner_to_json(learner));
    params.push_back(std::move(learners));
  }
  doc["learners"] = std::move(params);

  doc["risk_train"] = model.risk_train;
  doc["risk_val"] = model.risk_val;

  json history = json::array();
  for (const auto& h : model.history) {
    history.push_back({{"iteration", h.iteration},
                       {"parameter", h.parameter},
                       {"learner", h.learner},
                       {"risk", h.risk}});
  }
  doc["history"] = std::move(history);
  return doc.dump(2);
}

engine::FittedModel from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("model file is not valid JSON: ") + e.what());
  }
  const int version = doc.value("format_version", -1);
  if (version != kFormatVersion) {
    std::ostringstream msg;
    msg << "unsupported model format version " << version << " (expected " << kFormatVersion
        << ")";
    throw std::invalid_argument(msg.str());
  }

  engine::FittedModel model;
  model.family = families::FamilySpec::from_name(doc.at("family").get<std::string>());
  model.response_columns = doc.at("responses").get<std::vector<std::string>>();
  model.nu = doc.at("nu").get<double>();
  model.m_max = doc.at("m_max").get<int>();
  model.m_star = doc.at("m_star").get<int>();
  model.offsets_mode = engine::offsets_mode_from_name(doc.at("offsets_mode").get<std::string>());
  model.offsets = vector_from_json(doc.at("offsets"));
  model.offsets_fallback = doc.value("offsets_fallback", false);
  model.n_train = doc.value("n_train", 0L);
  model.seed = doc.value("seed", std::uint64_t{0});

  for (const auto& value : doc.at("offset_overrides")) {
    model.offset_overrides.push_back(
        value.is_null() ? std::optional<double>{} : std::optional<double>{value.get<double>()});
  }

  for (const auto& per_param : doc.at("learners")) {
    std::vector<engine::FittedLearner> learners;
    for (const auto& node : per_param) learners.push_back(learner_from_json(node));
    model.learners.push_back(std::move(learners));
  }

  model.risk_train = doc.at("risk_train").get<std::vector<double>>();
  model.risk_val = doc.at("risk_val").get<std::vector<double>>();
  for (const auto& node : doc.at("history")) {
    model.history.push_back({node.at("iteration").get<int>(), node.at("parameter").get<int>(),
                             node.at("learner").get<int>(), node.at("risk").get<double>()});
  }
  return model;
}

void save_model(const engine::FittedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  out << to_json(model) << '\n';
}

engine::FittedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return from_json(text.str());
}

}  // namespace bivboost::serialize
