#include "dfscope/trace.hpp"

#include <algorithm>
#include <map>

namespace dfscope {

const char* dataflow_name(Dataflow df) {
  return df == Dataflow::kWeightStationary ? "ws" : "os";
}

Dataflow dataflow_from_name(const std::string& name) {
  if (name == "ws") return Dataflow::kWeightStationary;
  if (name == "os") return Dataflow::kOutputStationary;
  throw MalformedTrace("unknown dataflow '" + name + "' (expected ws or os)");
}

int64_t targeted_event_cycle(const LayerTrace& trace, Dataflow dataflow) {
  const auto& prefix = trace.cycle_prefix;
  if (prefix.empty()) {
    throw TruncatedTrace("targeted_event_cycle: layer has no cycle records");
  }
  if (dataflow == Dataflow::kWeightStationary) {
    const uint64_t first_reads = prefix.front().i;
    for (size_t idx = 1; idx < prefix.size(); ++idx) {
      if (prefix[idx].i == first_reads) {
        return prefix[idx].t;
      }
    }
    throw TruncatedTrace("targeted_event_cycle: no repeat of i[1] in the prefix");
  }
  for (const auto& rec : prefix) {
    if (rec.o > 0) {
      return rec.t;
    }
  }
  throw TruncatedTrace("targeted_event_cycle: no output write in the prefix");
}

GlobalTrace collect_global_trace(const std::vector<TraceRecord>& records) {
  GlobalTrace out;
  bool meta_seen = false;
  std::map<int64_t, LayerTrace> layers;  // keyed by layer index, kept ordered

  for (const auto& record : records) {
    if (const auto* meta = std::get_if<MetaRecord>(&record)) {
      if (meta_seen) {
        throw MalformedTrace("collect_global_trace: duplicate meta record");
      }
      out.meta = *meta;
      meta_seen = true;
    } else if (const auto* config = std::get_if<ConfigPhaseRecord>(&record)) {
      out.config_events.push_back(*config);
    } else if (const auto* dram = std::get_if<DramRecord>(&record)) {
      out.dram_records.push_back(*dram);
    } else if (const auto* cycle = std::get_if<LayerCycleRecord>(&record)) {
      auto& layer = layers[cycle->layer_index];
      layer.layer_index = cycle->layer_index;
      const int64_t expected_t =
          layer.cycle_prefix.empty() ? 1 : layer.cycle_prefix.back().t + 1;
      if (cycle->cycle.t != expected_t) {
        throw MalformedTrace("collect_global_trace: cycle records out of order in layer " +
                             std::to_string(cycle->layer_index));
      }
      layer.cycle_prefix.push_back(cycle->cycle);
    } else {
      const auto& totals = std::get<LayerTotalsRecord>(record).totals;
      auto& layer = layers[totals.layer_index];
      auto prefix = std::move(layer.cycle_prefix);
      layer = totals;
      layer.cycle_prefix = std::move(prefix);
    }
  }

  if (!meta_seen) {
    throw MalformedTrace("collect_global_trace: missing meta record");
  }
  for (auto& [index, layer] : layers) {
    out.layers.push_back(std::move(layer));
  }
  return out;
}

}  // namespace dfscope
