#pragma once

#include <string>

#include "bivboost/engine.hpp"

namespace bivboost::serialize {

inline constexpr int kFormatVersion = 1;

// Versioned, self-describing model document (JSON). Doubles are written in
// shortest round-trip form, so save -> load -> predict is bit-exact.
std::string to_json(const engine::FittedModel& model);
engine::FittedModel from_json(const std::string& text);

void save_model(const engine::FittedModel& model, const std::string& path);
engine::FittedModel load_model(const std::string& path);

}  // namespace bivboost::serialize
