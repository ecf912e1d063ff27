#include "dfscope/model_sim.hpp"

#include "dfscope/os_sim.hpp"
#include "dfscope/pooling.hpp"
#include "dfscope/ws_sim.hpp"

namespace dfscope {

LayerTrace simulate_fc_layer(const FcLayerSpec& fc, TraceMode mode,
                             int64_t prefix_margin) {
  (void)prefix_margin;  // FC layers have no targeted event
  LayerTrace trace;
  trace.input_reads = static_cast<uint64_t>(fc.in_neurons);
  trace.weight_reads = static_cast<uint64_t>(fc.in_neurons) * fc.out_neurons;
  trace.output_writes = static_cast<uint64_t>(fc.out_neurons);
  trace.dram_writes = trace.output_writes;
  trace.total_cycles = static_cast<uint64_t>(fc.in_neurons) + 1;

  if (mode == TraceMode::kFull) {
    trace.cycle_prefix.reserve(trace.total_cycles);
    for (int64_t t = 1; t <= fc.in_neurons; ++t) {
      CycleRecord rec;
      rec.t = t;
      rec.w = static_cast<uint64_t>(fc.out_neurons);
      rec.i = 1;
      trace.cycle_prefix.push_back(rec);
    }
    CycleRecord burst;
    burst.t = fc.in_neurons + 1;
    burst.o = static_cast<uint64_t>(fc.out_neurons);
    trace.cycle_prefix.push_back(burst);
  }
  return trace;
}

std::vector<TraceRecord> simulate_model(const CnnModel& model,
                                        const AcceleratorConfig& accel, TraceMode mode,
                                        int64_t prefix_margin) {
  model.validate();
  std::vector<TraceRecord> records;

  MetaRecord meta;
  meta.dataflow = accel.dataflow;
  meta.pes_per_array = accel.pes_per_array;
  meta.arrays = accel.arrays;
  meta.mode = mode;
  meta.prefix_margin = prefix_margin;
  records.emplace_back(meta);

  FeatureMapShape shape = model.input;
  int64_t global_cycle = 1;

  // Feature maps are bump-allocated in DRAM element space; the model input
  // occupies the first region.
  uint64_t next_free = static_cast<uint64_t>(model.input.elements());
  uint64_t prev_base = 0;
  uint64_t prev_count = next_free;

  for (size_t j = 0; j < model.layers.size(); ++j) {
    const int64_t layer_index = static_cast<int64_t>(j);

    ConfigPhaseRecord config;
    config.layer_index = layer_index;
    config.cycle = global_cycle;
    config.payload = accel.pes_per_array * accel.arrays;
    records.emplace_back(config);

    DramRecord ifmap_read;
    ifmap_read.layer_index = layer_index;
    ifmap_read.dir = DramDir::kRead;
    ifmap_read.base_addr = prev_base;
    ifmap_read.count = prev_count;
    ifmap_read.cycle = global_cycle;
    records.emplace_back(ifmap_read);

    LayerTrace trace;
    FeatureMapShape next_shape;
    if (const auto* conv = std::get_if<ConvLayerSpec>(&model.layers[j])) {
      if (accel.dataflow == Dataflow::kWeightStationary) {
        trace = simulate_ws_layer(*conv, shape,
                                  WsConfig{accel.pes_per_array, accel.arrays}, mode,
                                  prefix_margin);
      } else {
        trace = simulate_os_layer(*conv, shape,
                                  OsConfig{accel.pes_per_array, accel.arrays}, mode,
                                  prefix_margin);
      }
      const FeatureMapShape ofmap = ofmap_shape(shape, *conv);
      if (conv->pooling) {
        const PoolingObservation obs = apply_pooling(ofmap, *conv->pooling);
        trace.dram_writes = obs.dram_writes;
        next_shape = obs.output_shape;
      } else {
        next_shape = ofmap;
      }
    } else {
      const auto& fc = std::get<FcLayerSpec>(model.layers[j]);
      trace = simulate_fc_layer(fc, mode, prefix_margin);
      next_shape = FeatureMapShape{1, 1, fc.out_neurons};
    }
    trace.layer_index = layer_index;

    for (const auto& cycle : trace.cycle_prefix) {
      records.emplace_back(LayerCycleRecord{layer_index, cycle});
    }
    LayerTrace totals = trace;
    totals.cycle_prefix.clear();
    records.emplace_back(LayerTotalsRecord{totals});

    DramRecord ofmap_write;
    ofmap_write.layer_index = layer_index;
    ofmap_write.dir = DramDir::kWrite;
    ofmap_write.base_addr = next_free;
    ofmap_write.count = trace.dram_writes;
    ofmap_write.cycle = global_cycle + static_cast<int64_t>(trace.total_cycles) - 1;
    records.emplace_back(ofmap_write);

    prev_base = next_free;
    prev_count = trace.dram_writes;
    next_free += trace.dram_writes;
    global_cycle += static_cast<int64_t>(trace.total_cycles);
    shape = next_shape;
  }
  return records;
}

}  // namespace dfscope
