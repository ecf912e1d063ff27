#pragma once

#include <cstdint>

#include "dfscope/cnn.hpp"

namespace dfscope {

// What the DRAM-side observer sees for one Conv layer: how many elements
// reached the GB as final outputs, and how many left for DRAM after the
// fused pooling module.
struct PoolingObservation {
  uint64_t gb_output_writes = 0;  // O_w of the host Conv layer
  uint64_t dram_writes = 0;       // N_pool with pooling, O_w without
  FeatureMapShape output_shape;   // what the next layer consumes
};

// Runs the pooling module over a Conv ofmap. Pool kind is irrelevant to the
// counts. Throws InvalidGeometry when the window exceeds the ofmap or the
// pool does not tile it exactly.
PoolingObservation apply_pooling(const FeatureMapShape& ofmap, const PoolSpec& pool);

}  // namespace dfscope
