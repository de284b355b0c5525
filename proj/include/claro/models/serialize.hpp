#pragma once

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "claro/models/predictor.hpp"

namespace claro::models {

/// Reconstructs a fitted model from its JSON form, dispatching on "type".
/// Round trips are bit-exact for every float64 the model holds.
std::unique_ptr<Predictor> model_from_json(const nlohmann::json& j);

void save_model(const Predictor& model, const std::filesystem::path& path);
std::unique_ptr<Predictor> load_model(const std::filesystem::path& path);

}  // namespace claro::models
