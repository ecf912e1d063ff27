#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dfscope/cnn.hpp"

namespace dfscope {

enum class Dataflow { kWeightStationary, kOutputStationary };

const char* dataflow_name(Dataflow df);          // "ws" / "os"
Dataflow dataflow_from_name(const std::string&); // throws MalformedTrace

enum class TraceMode { kFull, kPrefix };

// GB <-> PE traffic observed in one cycle. Cycle indices are 1-based and
// local to the layer, matching the recovery algorithms' i[1], w[1], i[2].
struct CycleRecord {
  int64_t t = 0;        // 1-based cycle within the layer
  uint64_t w = 0;       // weight reads from GB
  uint64_t i = 0;       // input reads from GB
  uint64_t o = 0;       // final output writes to GB
  uint64_t psr = 0;     // psum reads (weight-stationary only)
  uint64_t psw = 0;     // psum writes (weight-stationary only)
  std::vector<uint64_t> w_addrs;  // weight virtual addresses, when recorded

  bool same_counts(const CycleRecord& other) const {
    return w == other.w && i == other.i && o == other.o && psr == other.psr &&
           psw == other.psw;
  }
  bool operator==(const CycleRecord&) const = default;
};

// Per-layer side-channel record: the threat model's totals plus the cycle
// prefix collected up to the targeted event (or the whole layer in full mode).
struct LayerTrace {
  int64_t layer_index = 0;
  uint64_t weight_reads = 0;     // W_r
  uint64_t input_reads = 0;      // I_r
  uint64_t output_writes = 0;    // O_w (final values to GB)
  uint64_t psum_reads = 0;       // WS only, else 0
  uint64_t psum_writes = 0;      // WS only, else 0
  uint64_t dram_writes = 0;      // elements written GB -> DRAM (N_pool when pooled)
  uint64_t total_cycles = 0;
  std::vector<CycleRecord> cycle_prefix;
  std::optional<std::pair<uint64_t, uint64_t>> first_two_weight_addrs;  // OS

  bool operator==(const LayerTrace&) const = default;
};

// The cycle t_e terminating prefix collection.
//   WS: smallest t > 1 with i[t] == i[1]  (start of the next ofmap row)
//   OS: smallest t with o[t] > 0          (first finished ofmap value)
// Throws TruncatedTrace when the prefix does not contain the event.
int64_t targeted_event_cycle(const LayerTrace& trace, Dataflow dataflow);

struct MetaRecord {
  Dataflow dataflow = Dataflow::kWeightStationary;
  int64_t pes_per_array = 0;  // m
  int64_t arrays = 0;         // n
  TraceMode mode = TraceMode::kPrefix;
  int64_t prefix_margin = 0;

  bool operator==(const MetaRecord&) const = default;
};

// Marker for the per-layer reconfiguration burst on the control network.
struct ConfigPhaseRecord {
  int64_t layer_index = 0;
  int64_t cycle = 0;    // global cycle of the layer's first compute cycle
  int64_t payload = 0;  // control message size (opaque to the attack)

  bool operator==(const ConfigPhaseRecord&) const = default;
};

enum class DramDir { kRead, kWrite };

// One DRAM <-> GB transfer region. Feature maps live in a bump-allocated
// address space, so layer j+1's read region overlaps layer j's write region.
struct DramRecord {
  int64_t layer_index = 0;
  DramDir dir = DramDir::kRead;
  uint64_t base_addr = 0;  // element offset in DRAM space
  uint64_t count = 0;      // elements
  int64_t cycle = 0;       // global cycle of the transfer

  bool operator==(const DramRecord&) const = default;
};

struct LayerTotalsRecord {
  LayerTrace totals;  // cycle_prefix unused (always empty in this record)

  bool operator==(const LayerTotalsRecord&) const = default;
};

// A cycle record tagged with its layer, as it appears in the stream.
struct LayerCycleRecord {
  int64_t layer_index = 0;
  CycleRecord cycle;

  bool operator==(const LayerCycleRecord&) const = default;
};

using TraceRecord = std::variant<MetaRecord, ConfigPhaseRecord, LayerCycleRecord,
                                 LayerTotalsRecord, DramRecord>;

// Boundary signal extracted from the stream by the attack side.
struct BoundaryEvent {
  enum class Kind { kRawDependency, kConfigPhase };
  Kind kind = Kind::kConfigPhase;
  int64_t cycle = 0;
  uint64_t detail = 0;  // DRAM address or config payload size

  bool operator==(const BoundaryEvent&) const = default;
};

// Decoded stream grouped per layer, ready for the recovery pipeline.
struct GlobalTrace {
  MetaRecord meta;
  std::vector<ConfigPhaseRecord> config_events;
  std::vector<DramRecord> dram_records;
  std::vector<LayerTrace> layers;
};

// Groups a flat record stream into a GlobalTrace. Validates per-layer cycle
// ordering and that totals records are present; throws MalformedTrace.
GlobalTrace collect_global_trace(const std::vector<TraceRecord>& records);

}  // namespace dfscope
