#pragma once

#include <string>

#include "dfscope/cnn.hpp"

namespace dfscope {

// Built-in benchmark architectures: "lenet", "alexnet", "vgg16".
// Throws UnknownModel for anything else. Every returned model passes
// CnnModel::validate().
CnnModel zoo_model(const std::string& name);

// Model file schema (JSON):
//   {"name": "...", "input": [X, Y, C],
//    "layers": [{"type": "conv", "R":, "C":, "K":, "st":, "pd":,
//                "pool": {"R":, "st":} | null},
//               {"type": "fc", "in":, "out":}, ...]}
CnnModel load_model_json(const std::string& path);
void save_model_json(const CnnModel& model, const std::string& path);

}  // namespace dfscope
