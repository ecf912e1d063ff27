#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dfscope/errors.hpp"

namespace dfscope {

// Feature map dimensions. A convolution consumes {X, Y, C} and produces
// {X', Y', K}; both sides are represented by this type.
struct FeatureMapShape {
  int64_t x = 0;  // width in elements
  int64_t y = 0;  // height in elements
  int64_t c = 0;  // channel count

  int64_t elements() const { return x * y * c; }

  bool operator==(const FeatureMapShape&) const = default;
};

enum class PoolKind { kMax, kAverage };

// Pooling fused onto a Conv layer. No padding; window >= 2 so pooling
// always shrinks the map. The kind does not affect any modeled count.
struct PoolSpec {
  int64_t window = 0;  // R_pool, square
  int64_t stride = 0;  // st_pool
  PoolKind kind = PoolKind::kMax;

  bool operator==(const PoolSpec&) const = default;
};

struct ConvLayerSpec {
  int64_t filter_size = 0;   // R, filters are R x R
  int64_t in_channels = 0;   // C
  int64_t filter_count = 0;  // K
  int64_t stride = 1;        // St
  int64_t pad = 0;           // Pd
  std::optional<PoolSpec> pooling;

  bool operator==(const ConvLayerSpec&) const = default;
};

struct FcLayerSpec {
  int64_t in_neurons = 0;
  int64_t out_neurons = 0;

  bool operator==(const FcLayerSpec&) const = default;
};

using LayerSpec = std::variant<ConvLayerSpec, FcLayerSpec>;

// One ofmap axis: X' = ((X - R + 2Pd) / St) + 1.
// Throws InvalidGeometry when the numerator is negative or not divisible.
int64_t ofmap_dim(int64_t x, int64_t filter_size, int64_t pad, int64_t stride);

// Both axes at once; the channel count of the result is the filter count.
FeatureMapShape ofmap_shape(const FeatureMapShape& ifmap, const ConvLayerSpec& conv);

// Pooled axis: ((X' - R_pool) / st_pool) + 1, or nullopt when the division
// is not exact. Non-integral results are not an error here; the recovery
// search probes many (window, stride) pairs and skips the non-integral ones.
std::optional<int64_t> pool_dim(int64_t ofmap_dim, int64_t window, int64_t stride);

// Shape after the fused pooling stage. Requires integral pool dims.
FeatureMapShape pooled_shape(const FeatureMapShape& ofmap, const PoolSpec& pool);

// Shape leaving the layer: pooled_shape when pooling is present, ofmap otherwise.
FeatureMapShape conv_output_shape(const FeatureMapShape& ifmap, const ConvLayerSpec& conv);

// Padding implied by Eq.-1-style inversion: Pd = (St*(X'-1) - X + R) / 2.
// nullopt when negative or odd. Used by the recovery filters.
std::optional<int64_t> invert_padding(int64_t x, int64_t out_x, int64_t filter_size,
                                      int64_t stride);

// An ordered CNN architecture. Only structure is modeled: no weights, no
// activation values.
struct CnnModel {
  std::string name;
  FeatureMapShape input;
  std::vector<LayerSpec> layers;

  // Checks every invariant: positive dims, square filters with
  // 1 <= St <= R and 0 <= Pd < R, exact ofmap/pool divisibility, and that
  // each layer's required input matches the previous layer's output
  // (flattened element count for Conv -> FC). Throws InvalidModel.
  void validate() const;

  // Input shape seen by layer `index` (the model input for index 0).
  // For layers following an FC layer the shape is {1, 1, out_neurons}.
  FeatureMapShape input_shape_of(size_t index) const;

  int64_t conv_count() const;
  int64_t pool_count() const;
  int64_t fc_count() const;
};

}  // namespace dfscope
