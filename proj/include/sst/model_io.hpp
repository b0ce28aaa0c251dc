#pragma once
#include <string>

#include "sst/dataset.hpp"
#include "sst/leaf_model.hpp"
#include "sst/tree.hpp"

namespace sst {

// Everything needed to apply a trained tree to raw feature rows.
struct Model {
    TreeParams params;
    LeafModelSpec spec;
    std::vector<std::string> feature_names;
    Scaler scaler;
};

// "sst-v1" JSON round trip; numeric values survive bit-exactly.
std::string model_to_json(const Model& m);
Model model_from_json(const std::string& text);

void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

// Hex SHA-256 of a file's bytes, for run manifests.
std::string sha256_file(const std::string& path);
std::string sha256_bytes(const std::string& bytes);

} // namespace sst
