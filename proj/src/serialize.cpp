#include "claro/models/serialize.hpp"

#include <fstream>

#include "claro/error.hpp"
#include "claro/models/glm.hpp"
#include "claro/models/nn.hpp"
#include "claro/models/tree.hpp"

namespace claro::models {

std::unique_ptr<Predictor> model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "claro-model")
        throw ValidationError("not a claro model file");
    const int version = j.value("version", 0);
    if (version != 1)
        throw ValidationError("unsupported model file version " + std::to_string(version));
    const std::string type = j.value("type", "");
    if (type == "glm") return std::make_unique<GlmModel>(GlmModel::from_json(j));
    if (type == "tree") return std::make_unique<TreeModel>(TreeModel::from_json(j));
    if (type == "nn") return std::make_unique<NnModel>(NnModel::from_json(j));
    throw ValidationError("unknown model type '" + type + "'");
}

void save_model(const Predictor& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
    out << model.to_json().dump(2) << '\n';
    if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

std::unique_ptr<Predictor> load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("invalid json in '" + path.string() + "': " + e.what());
    }
    return model_from_json(j);
}

}  // namespace claro::models
