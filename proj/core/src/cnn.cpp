#include "dfscope/cnn.hpp"

#include <sstream>

namespace dfscope {

namespace {

std::string shape_str(const FeatureMapShape& s) {
  std::ostringstream os;
  os << "{" << s.x << "," << s.y << "," << s.c << "}";
  return os.str();
}

}  // namespace

int64_t ofmap_dim(int64_t x, int64_t filter_size, int64_t pad, int64_t stride) {
  if (stride < 1 || filter_size < 1) {
    throw InvalidGeometry("ofmap_dim: stride and filter size must be >= 1");
  }
  const int64_t numerator = x - filter_size + 2 * pad;
  if (numerator < 0) {
    std::ostringstream os;
    os << "ofmap_dim: window " << filter_size << " with pad " << pad
       << " does not fit input extent " << x;
    throw InvalidGeometry(os.str());
  }
  if (numerator % stride != 0) {
    std::ostringstream os;
    os << "ofmap_dim: (" << x << " - " << filter_size << " + 2*" << pad
       << ") is not divisible by stride " << stride;
    throw InvalidGeometry(os.str());
  }
  return numerator / stride + 1;
}

FeatureMapShape ofmap_shape(const FeatureMapShape& ifmap, const ConvLayerSpec& conv) {
  if (ifmap.c != conv.in_channels) {
    std::ostringstream os;
    os << "ofmap_shape: layer expects " << conv.in_channels << " channels, ifmap has "
       << ifmap.c;
    throw InvalidGeometry(os.str());
  }
  return FeatureMapShape{
      ofmap_dim(ifmap.x, conv.filter_size, conv.pad, conv.stride),
      ofmap_dim(ifmap.y, conv.filter_size, conv.pad, conv.stride),
      conv.filter_count,
  };
}

std::optional<int64_t> pool_dim(int64_t ofmap_dim, int64_t window, int64_t stride) {
  if (ofmap_dim < window) {
    throw InvalidGeometry("pool_dim: window larger than the feature map");
  }
  const int64_t numerator = ofmap_dim - window;
  if (numerator % stride != 0) {
    return std::nullopt;
  }
  return numerator / stride + 1;
}

FeatureMapShape pooled_shape(const FeatureMapShape& ofmap, const PoolSpec& pool) {
  const auto px = pool_dim(ofmap.x, pool.window, pool.stride);
  const auto py = pool_dim(ofmap.y, pool.window, pool.stride);
  if (!px || !py) {
    throw InvalidGeometry("pooled_shape: pooling does not tile the ofmap exactly");
  }
  return FeatureMapShape{*px, *py, ofmap.c};
}

FeatureMapShape conv_output_shape(const FeatureMapShape& ifmap, const ConvLayerSpec& conv) {
  FeatureMapShape out = ofmap_shape(ifmap, conv);
  if (conv.pooling) {
    out = pooled_shape(out, *conv.pooling);
  }
  return out;
}

std::optional<int64_t> invert_padding(int64_t x, int64_t out_x, int64_t filter_size,
                                      int64_t stride) {
  const int64_t twice_pad = stride * (out_x - 1) - x + filter_size;
  if (twice_pad < 0 || twice_pad % 2 != 0) {
    return std::nullopt;
  }
  return twice_pad / 2;
}

void CnnModel::validate() const {
  if (input.x < 1 || input.y < 1 || input.c < 1) {
    throw InvalidModel("model '" + name + "': input shape must be positive");
  }
  if (layers.empty()) {
    throw InvalidModel("model '" + name + "': no layers");
  }

  FeatureMapShape shape = input;
  bool seen_fc = false;
  for (size_t idx = 0; idx < layers.size(); ++idx) {
    const auto where = [&](const std::string& what) {
      std::ostringstream os;
      os << "model '" << name << "' layer " << idx << ": " << what;
      return InvalidModel(os.str());
    };

    if (const auto* conv = std::get_if<ConvLayerSpec>(&layers[idx])) {
      if (seen_fc) {
        throw where("Conv layer after an FC layer");
      }
      if (conv->filter_size < 1 || conv->in_channels < 1 || conv->filter_count < 1) {
        throw where("filter dimensions must be >= 1");
      }
      if (conv->stride < 1 || conv->stride > conv->filter_size) {
        throw where("stride must satisfy 1 <= St <= R");
      }
      if (conv->pad < 0 || conv->pad >= conv->filter_size) {
        throw where("padding must satisfy 0 <= Pd < R");
      }
      if (conv->in_channels != shape.c) {
        throw where("channel count " + std::to_string(conv->in_channels) +
                    " does not match incoming shape " + shape_str(shape));
      }
      FeatureMapShape out;
      try {
        out = ofmap_shape(shape, *conv);
      } catch (const InvalidGeometry& e) {
        throw where(e.what());
      }
      if (conv->pooling) {
        const auto& pool = *conv->pooling;
        if (pool.window < 2 || pool.window > out.x || pool.window > out.y) {
          throw where("pooling window must satisfy 2 <= R_pool <= ofmap extent");
        }
        if (pool.stride < 1 || pool.stride > pool.window) {
          throw where("pooling stride must satisfy 1 <= st_pool <= R_pool");
        }
        try {
          out = pooled_shape(out, pool);
        } catch (const InvalidGeometry& e) {
          throw where(e.what());
        }
      }
      shape = out;
    } else {
      const auto& fc = std::get<FcLayerSpec>(layers[idx]);
      if (fc.in_neurons < 1 || fc.out_neurons < 1) {
        throw where("FC sizes must be >= 1");
      }
      if (fc.in_neurons != shape.elements()) {
        throw where("FC expects " + std::to_string(fc.in_neurons) +
                    " inputs but previous layer provides " +
                    std::to_string(shape.elements()));
      }
      shape = FeatureMapShape{1, 1, fc.out_neurons};
      seen_fc = true;
    }
  }
}

FeatureMapShape CnnModel::input_shape_of(size_t index) const {
  FeatureMapShape shape = input;
  for (size_t idx = 0; idx < index && idx < layers.size(); ++idx) {
    if (const auto* conv = std::get_if<ConvLayerSpec>(&layers[idx])) {
      shape = conv_output_shape(shape, *conv);
    } else {
      shape = FeatureMapShape{1, 1, std::get<FcLayerSpec>(layers[idx]).out_neurons};
    }
  }
  return shape;
}

int64_t CnnModel::conv_count() const {
  int64_t count = 0;
  for (const auto& layer : layers) {
    count += std::holds_alternative<ConvLayerSpec>(layer) ? 1 : 0;
  }
  return count;
}

int64_t CnnModel::pool_count() const {
  int64_t count = 0;
  for (const auto& layer : layers) {
    if (const auto* conv = std::get_if<ConvLayerSpec>(&layer)) {
      count += conv->pooling ? 1 : 0;
    }
  }
  return count;
}

int64_t CnnModel::fc_count() const {
  return static_cast<int64_t>(layers.size()) - conv_count();
}

}  // namespace dfscope
