#pragma once

#include <cstdint>
#include <vector>

#include "dfscope/cnn.hpp"
#include "dfscope/trace.hpp"

namespace dfscope {

struct AcceleratorConfig {
  Dataflow dataflow = Dataflow::kWeightStationary;
  int64_t pes_per_array = 0;  // m
  int64_t arrays = 0;         // n
};

// Runs a whole model layer by layer and emits the observable record stream:
// meta, then per layer a config-phase marker, the ifmap DRAM read, cycle
// records (per mode), the totals record and the ofmap DRAM write. Feature
// maps live in a bump-allocated DRAM space so consecutive layers exhibit
// the read-after-write boundary signal. Pooling runs fused with its Conv
// layer and only shrinks the DRAM write count.
std::vector<TraceRecord> simulate_model(const CnnModel& model,
                                        const AcceleratorConfig& accel, TraceMode mode,
                                        int64_t prefix_margin = 8);

// FC layers stream one input per cycle while every mapped weight is read
// once, so W_r = in * out, I_r = in, O_w = out (written in a final burst).
LayerTrace simulate_fc_layer(const FcLayerSpec& fc, TraceMode mode,
                             int64_t prefix_margin = 8);

}  // namespace dfscope
