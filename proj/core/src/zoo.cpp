#include "dfscope/zoo.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace dfscope {

namespace {

using nlohmann::ordered_json;

ConvLayerSpec conv(int64_t r, int64_t c, int64_t k, int64_t st, int64_t pd,
                   std::optional<PoolSpec> pool = std::nullopt) {
  return ConvLayerSpec{r, c, k, st, pd, pool};
}

PoolSpec max_pool(int64_t window, int64_t stride) {
  return PoolSpec{window, stride, PoolKind::kMax};
}

// 5-weight-layer Lenet: three Conv (5x5, 5x5, 2x2), two 2x2 pools, two FC.
// The final Conv keeps a spatial 4x4 ofmap; a 1x1 ofmap would make the
// stride unobservable from the memory side channel.
CnnModel make_lenet() {
  CnnModel model;
  model.name = "lenet";
  model.input = {32, 32, 1};
  model.layers = {
      conv(5, 1, 6, 1, 0, max_pool(2, 2)),    // 28x28x6 -> 14x14x6
      conv(5, 6, 16, 1, 0, max_pool(2, 2)),   // 10x10x16 -> 5x5x16
      conv(2, 16, 120, 1, 0),                 // 4x4x120
      FcLayerSpec{1920, 84},
      FcLayerSpec{84, 10},
  };
  return model;
}

CnnModel make_alexnet() {
  CnnModel model;
  model.name = "alexnet";
  model.input = {227, 227, 3};
  model.layers = {
      conv(11, 3, 96, 4, 0, max_pool(3, 2)),   // 55x55x96 -> 27x27x96
      conv(5, 96, 256, 1, 2, max_pool(3, 2)),  // 27x27x256 -> 13x13x256
      conv(3, 256, 384, 1, 1),                 // 13x13x384
      conv(3, 384, 384, 1, 1),                 // 13x13x384
      conv(3, 384, 256, 1, 1, max_pool(3, 2)), // 13x13x256 -> 6x6x256
      FcLayerSpec{9216, 4096},
      FcLayerSpec{4096, 4096},
      FcLayerSpec{4096, 1000},
  };
  return model;
}

// 16-weight-layer VGGnet: the 13-Conv variant whose deeper blocks end in a
// 1x1 Conv (filter sizes 1x1 and 3x3), five 2x2 pools, three FC.
CnnModel make_vgg16() {
  CnnModel model;
  model.name = "vgg16";
  model.input = {224, 224, 3};
  model.layers = {
      conv(3, 3, 64, 1, 1),
      conv(3, 64, 64, 1, 1, max_pool(2, 2)),     // 224 -> 112
      conv(3, 64, 128, 1, 1),
      conv(3, 128, 128, 1, 1, max_pool(2, 2)),   // 112 -> 56
      conv(3, 128, 256, 1, 1),
      conv(3, 256, 256, 1, 1),
      conv(1, 256, 256, 1, 0, max_pool(2, 2)),   // 56 -> 28
      conv(3, 256, 512, 1, 1),
      conv(3, 512, 512, 1, 1),
      conv(1, 512, 512, 1, 0, max_pool(2, 2)),   // 28 -> 14
      conv(3, 512, 512, 1, 1),
      conv(3, 512, 512, 1, 1),
      conv(1, 512, 512, 1, 0, max_pool(2, 2)),   // 14 -> 7
      FcLayerSpec{25088, 4096},
      FcLayerSpec{4096, 4096},
      FcLayerSpec{4096, 1000},
  };
  return model;
}

int64_t require_int(const ordered_json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_number_integer()) {
    throw InvalidModel("model file: " + ctx + " needs integer field '" + key + "'");
  }
  return j[key].get<int64_t>();
}

}  // namespace

CnnModel zoo_model(const std::string& name) {
  CnnModel model;
  if (name == "lenet") {
    model = make_lenet();
  } else if (name == "alexnet") {
    model = make_alexnet();
  } else if (name == "vgg16") {
    model = make_vgg16();
  } else {
    throw UnknownModel("unknown model '" + name + "' (known: lenet, alexnet, vgg16)");
  }
  model.validate();
  return model;
}

CnnModel load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidModel("model file: cannot open " + path);
  }
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidModel("model file " + path + ": " + e.what());
  }

  CnnModel model;
  model.name = j.value("name", "unnamed");
  if (!j.contains("input") || !j["input"].is_array() || j["input"].size() != 3) {
    throw InvalidModel("model file: 'input' must be [X, Y, C]");
  }
  model.input = {j["input"][0].get<int64_t>(), j["input"][1].get<int64_t>(),
                 j["input"][2].get<int64_t>()};

  if (!j.contains("layers") || !j["layers"].is_array()) {
    throw InvalidModel("model file: 'layers' must be an array");
  }
  for (const auto& jl : j["layers"]) {
    const std::string type = jl.value("type", "");
    if (type == "conv") {
      ConvLayerSpec c;
      c.filter_size = require_int(jl, "R", "conv layer");
      c.in_channels = require_int(jl, "C", "conv layer");
      c.filter_count = require_int(jl, "K", "conv layer");
      c.stride = require_int(jl, "st", "conv layer");
      c.pad = require_int(jl, "pd", "conv layer");
      if (jl.contains("pool") && !jl["pool"].is_null()) {
        PoolSpec p;
        p.window = require_int(jl["pool"], "R", "pool");
        p.stride = require_int(jl["pool"], "st", "pool");
        p.kind = PoolKind::kMax;
        c.pooling = p;
      }
      model.layers.emplace_back(c);
    } else if (type == "fc") {
      FcLayerSpec f;
      f.in_neurons = require_int(jl, "in", "fc layer");
      f.out_neurons = require_int(jl, "out", "fc layer");
      model.layers.emplace_back(f);
    } else {
      throw InvalidModel("model file: layer type must be 'conv' or 'fc'");
    }
  }
  model.validate();
  return model;
}

void save_model_json(const CnnModel& model, const std::string& path) {
  ordered_json j;
  j["name"] = model.name;
  j["input"] = {model.input.x, model.input.y, model.input.c};
  j["layers"] = ordered_json::array();
  for (const auto& layer : model.layers) {
    ordered_json jl;
    if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) {
      jl["type"] = "conv";
      jl["R"] = c->filter_size;
      jl["C"] = c->in_channels;
      jl["K"] = c->filter_count;
      jl["st"] = c->stride;
      jl["pd"] = c->pad;
      if (c->pooling) {
        jl["pool"] = {{"R", c->pooling->window}, {"st", c->pooling->stride}};
      } else {
        jl["pool"] = nullptr;
      }
    } else {
      const auto& f = std::get<FcLayerSpec>(layer);
      jl["type"] = "fc";
      jl["in"] = f.in_neurons;
      jl["out"] = f.out_neurons;
    }
    j["layers"].push_back(jl);
  }
  std::ofstream out(path);
  if (!out) {
    throw InvalidModel("model file: cannot write " + path);
  }
  out << j.dump(2) << "\n";
}

}  // namespace dfscope
