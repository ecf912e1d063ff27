#include "dfscope/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

namespace dfscope {

namespace {

using nlohmann::ordered_json;

int64_t integer_sqrt(int64_t value) {
  if (value < 0) {
    return -1;
  }
  int64_t root = static_cast<int64_t>(std::max(0.0, std::sqrt(static_cast<double>(value))));
  while (root > 0 && root * root > value) {
    --root;
  }
  while ((root + 1) * (root + 1) <= value) {
    ++root;
  }
  return root;
}

// Integer solutions {R, K} of R^2 * C * K == W_r, R ascending.
std::vector<std::pair<int64_t, int64_t>> solve_weight_identity(uint64_t weight_reads,
                                                               int64_t channels) {
  std::vector<std::pair<int64_t, int64_t>> solutions;
  if (channels < 1 || weight_reads == 0 ||
      weight_reads % static_cast<uint64_t>(channels) != 0) {
    return solutions;
  }
  const int64_t q = static_cast<int64_t>(weight_reads / static_cast<uint64_t>(channels));
  for (int64_t r = 1; r * r <= q; ++r) {
    if (q % (r * r) == 0) {
      solutions.emplace_back(r, q / (r * r));
    }
  }
  return solutions;
}

bool intervals_overlap(uint64_t base_a, uint64_t count_a, uint64_t base_b,
                       uint64_t count_b) {
  return base_a < base_b + count_b && base_b < base_a + count_a;
}

std::string ws_audit_summary(const std::vector<WsCandidateAudit>& audit) {
  std::ostringstream os;
  for (const auto& entry : audit) {
    os << " (" << entry.filter_size << "," << entry.filter_count << ")->"
       << ws_reject_name(entry.reject);
  }
  return os.str();
}

}  // namespace

const char* ws_reject_name(WsReject reject) {
  switch (reject) {
    case WsReject::kSurvived: return "survived";
    case WsReject::kActivePeDivisibility: return "active_pe_divisibility";
    case WsReject::kStrideNonIntegral: return "stride_non_integral";
    case WsReject::kStrideBound: return "stride_bound";
    case WsReject::kPaddingInvalid: return "padding_invalid";
    case WsReject::kOutputTotalMismatch: return "output_total_mismatch";
    case WsReject::kPoolingUnrecoverable: return "pooling_unrecoverable";
    case WsReject::kFallbackExhausted: return "fallback_exhausted";
  }
  return "unknown";
}

const char* os_reject_name(OsReject reject) {
  switch (reject) {
    case OsReject::kAccepted: return "accepted";
    case OsReject::kOfmapNonIntegral: return "ofmap_non_integral";
    case OsReject::kFilterCountNonIntegral: return "filter_count_non_integral";
    case OsReject::kWeightTotalMismatch: return "weight_total_mismatch";
  }
  return "unknown";
}

FeatureMapShape CandidateStructure::next_input_shape() const {
  if (!pooling) {
    return FeatureMapShape{out_x, out_y, filter_count};
  }
  const auto px = pool_dim(out_x, pooling->window, pooling->stride);
  const auto py = pool_dim(out_y, pooling->window, pooling->stride);
  return FeatureMapShape{px.value(), py.value(), filter_count};
}

// ---------------------------------------------------------------------------
// Boundaries
// ---------------------------------------------------------------------------

std::vector<BoundaryEvent> config_boundary_events(const GlobalTrace& trace) {
  std::vector<BoundaryEvent> events;
  events.reserve(trace.config_events.size());
  for (const auto& config : trace.config_events) {
    events.push_back({BoundaryEvent::Kind::kConfigPhase, config.cycle,
                      static_cast<uint64_t>(config.payload)});
  }
  std::sort(events.begin(), events.end(),
            [](const auto& a, const auto& b) { return a.cycle < b.cycle; });
  return events;
}

std::vector<BoundaryEvent> raw_boundary_events(const GlobalTrace& trace) {
  std::vector<DramRecord> records = trace.dram_records;
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.cycle < b.cycle; });

  std::vector<BoundaryEvent> events;
  std::vector<std::pair<uint64_t, uint64_t>> written;
  for (const auto& record : records) {
    if (record.dir == DramDir::kWrite) {
      written.emplace_back(record.base_addr, record.count);
      continue;
    }
    for (const auto& [base, count] : written) {
      if (intervals_overlap(base, count, record.base_addr, record.count)) {
        events.push_back(
            {BoundaryEvent::Kind::kRawDependency, record.cycle, record.base_addr});
        break;
      }
    }
  }
  return events;
}

namespace {

int64_t trace_end_cycle(const GlobalTrace& trace) {
  int64_t last = 0;
  for (const auto& record : trace.dram_records) {
    last = std::max(last, record.cycle);
  }
  for (const auto& config : trace.config_events) {
    last = std::max(last, config.cycle);
  }
  return last + 1;
}

std::vector<LayerSpan> spans_from_begins(std::vector<int64_t> begins, int64_t end) {
  std::vector<LayerSpan> spans;
  for (size_t idx = 0; idx < begins.size(); ++idx) {
    spans.push_back({static_cast<int64_t>(idx), begins[idx],
                     idx + 1 < begins.size() ? begins[idx + 1] : end});
  }
  return spans;
}

}  // namespace

std::vector<LayerSpan> identify_layer_boundaries(const GlobalTrace& trace) {
  const auto config_events = config_boundary_events(trace);
  const int64_t end = trace_end_cycle(trace);

  std::vector<LayerSpan> config_spans;
  if (!config_events.empty()) {
    std::vector<int64_t> begins;
    for (const auto& event : config_events) {
      begins.push_back(event.cycle);
    }
    config_spans = spans_from_begins(std::move(begins), end);
  }

  std::vector<LayerSpan> raw_spans;
  if (!trace.dram_records.empty()) {
    std::vector<int64_t> begins;
    int64_t first_read = -1;
    for (const auto& record : trace.dram_records) {
      if (record.dir == DramDir::kRead) {
        first_read = first_read < 0 ? record.cycle : std::min(first_read, record.cycle);
      }
    }
    if (first_read >= 0) {
      begins.push_back(first_read);
      for (const auto& event : raw_boundary_events(trace)) {
        if (event.cycle != first_read) {
          begins.push_back(event.cycle);
        }
      }
      std::sort(begins.begin(), begins.end());
      raw_spans = spans_from_begins(std::move(begins), end);
    }
  }

  if (config_spans.empty() && raw_spans.empty()) {
    throw BoundaryUndetectable(
        "identify_layer_boundaries: no config-phase or DRAM signal in the trace");
  }
  if (!config_spans.empty() && !raw_spans.empty() && config_spans != raw_spans) {
    throw MalformedTrace(
        "identify_layer_boundaries: config-phase and RAW boundaries disagree");
  }
  return config_spans.empty() ? raw_spans : config_spans;
}

LayerKind identify_layer_type(uint64_t weight_reads, uint64_t input_reads,
                              uint64_t output_writes, uint64_t gb_writes,
                              uint64_t dram_writes) {
  if (weight_reads == 0 || input_reads == 0 || output_writes == 0) {
    throw MalformedTrace("identify_layer_type: zero totals");
  }
  if (weight_reads == input_reads * output_writes) {
    return LayerKind::kFullyConnected;
  }
  return dram_writes < gb_writes ? LayerKind::kConvPool : LayerKind::kConv;
}

// ---------------------------------------------------------------------------
// FC and pooling
// ---------------------------------------------------------------------------

FcLayerSpec recover_fc(uint64_t weight_reads, uint64_t input_reads,
                       uint64_t output_writes) {
  if (weight_reads != input_reads * output_writes) {
    throw NotAnFcLayer("recover_fc: W_r != I_r * O_w");
  }
  return FcLayerSpec{static_cast<int64_t>(input_reads),
                     static_cast<int64_t>(output_writes)};
}

PoolParams recover_pooling(uint64_t n_pool, int64_t out_x, int64_t out_y, int64_t k) {
  if (k < 1 || n_pool == 0 || n_pool % static_cast<uint64_t>(k) != 0) {
    throw NoPoolSolution("recover_pooling: N_pool is not a multiple of K");
  }
  const uint64_t pooled_positions = n_pool / static_cast<uint64_t>(k);
  // Small windows first; within a window, non-overlapping first.
  for (int64_t window = 2; window <= out_x; ++window) {
    if (window > out_y) {
      break;
    }
    for (int64_t stride = window; stride >= 1; --stride) {
      const auto px = pool_dim(out_x, window, stride);
      const auto py = pool_dim(out_y, window, stride);
      if (!px || !py) {
        continue;
      }
      if (static_cast<uint64_t>(*px) * static_cast<uint64_t>(*py) == pooled_positions) {
        return PoolParams{window, stride};
      }
    }
  }
  throw NoPoolSolution("recover_pooling: no window/stride pair matches N_pool");
}

// ---------------------------------------------------------------------------
// WS Conv recovery
// ---------------------------------------------------------------------------

WsRecovery recover_conv_ws_audited(const LayerTrace& trace, const FeatureMapShape& ifmap,
                                   const WsConfig& cfg) {
  WsRecovery result;
  const auto& prefix = trace.cycle_prefix;
  result.event_cycle = targeted_event_cycle(trace, Dataflow::kWeightStationary);
  if (prefix.size() < 2) {
    throw TruncatedTrace("recover_conv_ws: prefix shorter than two cycles");
  }
  const uint64_t w1 = prefix[0].w;
  const uint64_t i1 = prefix[0].i;
  const uint64_t i2 = prefix[1].i;
  if (i1 == 0 || w1 == 0 || w1 % i1 != 0) {
    throw MalformedTrace("recover_conv_ws: cycle-1 reads do not define n_a");
  }
  result.active_arrays = static_cast<int64_t>(w1 / i1);
  const int64_t active_len = static_cast<int64_t>(i1);  // w[1] / n_a
  if (trace.psum_reads > trace.psum_writes) {
    throw MalformedTrace("recover_conv_ws: psum reads exceed psum writes");
  }
  const uint64_t output_writes = trace.psum_writes - trace.psum_reads;

  const auto candidates = solve_weight_identity(trace.weight_reads, ifmap.c);
  result.used_fallback = result.event_cycle == 2;

  if (!result.used_fallback) {
    const int64_t out_x = result.event_cycle - 1;
    for (const auto& [r, k] : candidates) {
      WsCandidateAudit audit;
      audit.filter_size = r;
      audit.filter_count = k;

      if (r <= active_len && active_len % r != 0) {
        audit.reject = WsReject::kActivePeDivisibility;
        result.audit.push_back(audit);
        continue;
      }
      const int64_t channels_mapped = std::max<int64_t>(cfg.pes_per_array / r, 1);
      const Rational stride(static_cast<int64_t>(i2), channels_mapped);
      audit.stride = stride.to_string();
      if (!stride.is_integer() || stride.num < 1) {
        audit.reject = WsReject::kStrideNonIntegral;
        result.audit.push_back(audit);
        continue;
      }
      const int64_t st = stride.num;
      if (st > r) {
        audit.reject = WsReject::kStrideBound;
        result.audit.push_back(audit);
        continue;
      }
      const Rational padding(st * (out_x - 1) - ifmap.x + r, 2);
      audit.padding = padding.to_string();
      if (!padding.is_integer() || padding.num < 0 || padding.num >= r) {
        audit.reject = WsReject::kPaddingInvalid;
        result.audit.push_back(audit);
        continue;
      }
      const int64_t pd = padding.num;
      const int64_t y_numerator = ifmap.y - r + 2 * pd;
      if (y_numerator < 0 || y_numerator % st != 0) {
        audit.reject = WsReject::kOutputTotalMismatch;
        result.audit.push_back(audit);
        continue;
      }
      const int64_t out_y = y_numerator / st + 1;
      if (output_writes != static_cast<uint64_t>(out_x) * out_y * k) {
        audit.reject = WsReject::kOutputTotalMismatch;
        result.audit.push_back(audit);
        continue;
      }
      result.audit.push_back(audit);
      result.candidates.push_back({r, k, ifmap.c, st, pd, out_x, out_y, std::nullopt});
    }
    return result;
  }

  // Degenerate event: every cycle reads i[1] inputs (stride >= mapped slot
  // width, or a one-column ofmap), so t_e - 1 says nothing about X'. The
  // remaining observables still pin the layer: match O_w, the psum-write
  // total and the cycle count against every geometrically valid (st, pd).
  for (const auto& [r, k] : candidates) {
    WsCandidateAudit audit;
    audit.filter_size = r;
    audit.filter_count = k;
    bool any = false;
    for (int64_t st = 1; st <= r; ++st) {
      for (int64_t pd = 0; pd < r; ++pd) {
        const int64_t nx = ifmap.x - r + 2 * pd;
        const int64_t ny = ifmap.y - r + 2 * pd;
        if (nx < 0 || ny < 0 || nx % st != 0 || ny % st != 0) {
          continue;
        }
        const int64_t out_x = nx / st + 1;
        const int64_t out_y = ny / st + 1;
        if (output_writes != static_cast<uint64_t>(out_x) * out_y * k) {
          continue;
        }
        const ConvLayerSpec guess{r, ifmap.c, k, st, pd, std::nullopt};
        const WsClosedForms forms = ws_closed_forms(guess, ifmap, cfg);
        if (forms.psum_writes != trace.psum_writes ||
            forms.total_cycles != trace.total_cycles ||
            forms.weight_reads != trace.weight_reads) {
          continue;
        }
        if (!any) {
          audit.stride = std::to_string(st);
          audit.padding = std::to_string(pd);
          any = true;
        }
        result.candidates.push_back({r, k, ifmap.c, st, pd, out_x, out_y, std::nullopt});
      }
    }
    audit.reject = any ? WsReject::kSurvived : WsReject::kFallbackExhausted;
    result.audit.push_back(audit);
  }
  return result;
}

std::vector<CandidateStructure> recover_conv_ws(const LayerTrace& trace,
                                                const FeatureMapShape& ifmap,
                                                const WsConfig& cfg) {
  WsRecovery result = recover_conv_ws_audited(trace, ifmap, cfg);
  if (result.candidates.empty()) {
    throw NoCandidates("recover_conv_ws: every candidate was filtered out:" +
                       ws_audit_summary(result.audit));
  }
  return std::move(result.candidates);
}

// ---------------------------------------------------------------------------
// OS Conv recovery
// ---------------------------------------------------------------------------

OsRecovery recover_conv_os_audited(const LayerTrace& trace, const FeatureMapShape& ifmap,
                                   const OsConfig& cfg) {
  OsRecovery result;
  result.event_cycle = targeted_event_cycle(trace, Dataflow::kOutputStationary);
  if (!trace.first_two_weight_addrs) {
    throw MalformedTrace("recover_conv_os: missing first two weight addresses");
  }

  const int64_t weights_per_output = result.event_cycle - 1;  // R^2 * C
  if (ifmap.c < 1 || weights_per_output % ifmap.c != 0) {
    return result;  // no integer filter size
  }
  const int64_t r_squared = weights_per_output / ifmap.c;
  const int64_t r = integer_sqrt(r_squared);
  if (r < 1 || r * r != r_squared) {
    return result;
  }
  result.filter_size = r;

  const auto [addr1, addr2] = *trace.first_two_weight_addrs;
  const int64_t st = addr1 > addr2 ? static_cast<int64_t>(addr1 - addr2)
                                   : static_cast<int64_t>(addr2 - addr1);
  result.stride = st;
  if (st < 1) {
    return result;
  }

  for (int64_t pd = 0; pd < r; ++pd) {
    OsPdAudit audit;
    audit.pad = pd;
    const int64_t nx = ifmap.x - r + 2 * pd;
    const int64_t ny = ifmap.y - r + 2 * pd;
    const Rational out_x(nx + st, st);
    const Rational out_y(ny + st, st);
    audit.out_x = out_x.to_decimal_1dp();
    audit.out_y = out_y.to_decimal_1dp();

    if (nx < 0 || ny < 0 || !out_x.is_integer() || !out_y.is_integer() ||
        out_x.num < 1 || out_y.num < 1) {
      audit.reject = OsReject::kOfmapNonIntegral;
      result.audit.push_back(audit);
      continue;
    }
    const int64_t ox = out_x.num;
    const int64_t oy = out_y.num;
    const Rational filters(static_cast<int64_t>(trace.output_writes), ox * oy);
    audit.k = filters.to_decimal_1dp();
    if (!filters.is_integer() || filters.num < 1) {
      audit.reject = OsReject::kFilterCountNonIntegral;
      result.audit.push_back(audit);
      continue;
    }
    const int64_t k = filters.num;
    const uint64_t tiles_x = static_cast<uint64_t>((ox + cfg.pes_per_array - 1) /
                                                   cfg.pes_per_array);
    const uint64_t tiles_y = static_cast<uint64_t>((oy + cfg.arrays - 1) / cfg.arrays);
    const uint64_t expected_weight_reads =
        tiles_x * tiles_y * static_cast<uint64_t>(r) * r * ifmap.c * k;
    if (expected_weight_reads != trace.weight_reads) {
      audit.reject = OsReject::kWeightTotalMismatch;
      result.audit.push_back(audit);
      continue;
    }
    result.audit.push_back(audit);
    result.candidates.push_back({r, k, ifmap.c, st, pd, ox, oy, std::nullopt});
  }
  return result;
}

std::vector<CandidateStructure> recover_conv_os(const LayerTrace& trace,
                                                const FeatureMapShape& ifmap,
                                                const OsConfig& cfg) {
  OsRecovery result = recover_conv_os_audited(trace, ifmap, cfg);
  if (result.candidates.empty()) {
    std::ostringstream os;
    os << "recover_conv_os: no candidate survived (R=" << result.filter_size
       << ", st=" << result.stride << ")";
    throw NoCandidates(os.str());
  }
  return std::move(result.candidates);
}

// ---------------------------------------------------------------------------
// Whole-model recovery and flattening
// ---------------------------------------------------------------------------

namespace {

using IfmapKey = std::tuple<int64_t, int64_t, int64_t>;

IfmapKey key_of(const FeatureMapShape& shape) {
  return {shape.x, shape.y, shape.c};
}

constexpr size_t kMaxStructures = 100000;

struct LayerRecoveryState {
  LayerKind kind = LayerKind::kConv;
  FcLayerSpec fc;
  // Conv candidates per tried ifmap.
  std::map<IfmapKey, std::vector<CandidateStructure>> by_ifmap;
};

}  // namespace

RecoveryReport recover_model(const std::vector<LayerTrace>& layers,
                             const FeatureMapShape& first_ifmap, Dataflow dataflow,
                             int64_t pes_per_array, int64_t arrays) {
  RecoveryReport report;
  report.dataflow = dataflow;
  report.pes_per_array = pes_per_array;
  report.arrays = arrays;
  report.first_ifmap = first_ifmap;

  if (layers.empty()) {
    throw RecoveryFailed("recover_model: no layer traces");
  }

  std::vector<LayerRecoveryState> states(layers.size());

  // Spatial ifmap candidates flowing into the current layer; cleared once
  // an FC layer flattens the feature map.
  std::vector<FeatureMapShape> spatial_inputs = {first_ifmap};

  for (size_t j = 0; j < layers.size(); ++j) {
    const LayerTrace& trace = layers[j];
    auto& state = states[j];

    const LayerKind kind =
        identify_layer_type(trace.weight_reads, trace.input_reads, trace.output_writes,
                            trace.output_writes, trace.dram_writes);
    state.kind = kind;

    if (kind == LayerKind::kFullyConnected) {
      if (trace.psum_writes > 0) {
        // Degenerate Conv layers can satisfy the FC identity; flag rather
        // than guess.
        report.ambiguous_layers.push_back(static_cast<int64_t>(j));
      }
      state.fc = recover_fc(trace.weight_reads, trace.input_reads, trace.output_writes);

      spatial_inputs.clear();
      continue;
    }

    if (spatial_inputs.empty()) {
      throw RecoveryFailed("recover_model: Conv layer " + std::to_string(j) +
                           " follows an FC layer; no spatial ifmap to try");
    }

    size_t total_candidates = 0;
    for (const FeatureMapShape& ifmap : spatial_inputs) {
      RecoveryAuditEntry audit_entry;
      audit_entry.layer_index = static_cast<int64_t>(j);
      audit_entry.ifmap = ifmap;

      std::vector<CandidateStructure> candidates;
      if (dataflow == Dataflow::kWeightStationary) {
        WsRecovery rec = recover_conv_ws_audited(
            trace, ifmap, WsConfig{pes_per_array, arrays});
        candidates = std::move(rec.candidates);
        audit_entry.ws_audit = std::move(rec.audit);
        audit_entry.used_fallback = rec.used_fallback;
      } else {
        OsRecovery rec = recover_conv_os_audited(
            trace, ifmap, OsConfig{pes_per_array, arrays});
        candidates = std::move(rec.candidates);
        audit_entry.os_audit = std::move(rec.audit);
      }

      if (kind == LayerKind::kConvPool) {
        std::vector<CandidateStructure> pooled;
        for (auto& cand : candidates) {
          try {
            const PoolParams pool = recover_pooling(trace.dram_writes, cand.out_x,
                                                    cand.out_y, cand.filter_count);
            cand.pooling = pool;
            pooled.push_back(cand);
          } catch (const NoPoolSolution&) {
            WsCandidateAudit pool_audit;
            pool_audit.filter_size = cand.filter_size;
            pool_audit.filter_count = cand.filter_count;
            pool_audit.reject = WsReject::kPoolingUnrecoverable;
            audit_entry.ws_audit.push_back(pool_audit);
          }
        }
        candidates = std::move(pooled);
      }

      total_candidates += candidates.size();
      state.by_ifmap[key_of(ifmap)] = std::move(candidates);
      report.audit.push_back(std::move(audit_entry));
    }

    if (total_candidates == 0) {
      std::ostringstream os;
      os << "recover_model: layer " << j << " has no candidates";
      for (const auto& entry : report.audit) {
        if (entry.layer_index == static_cast<int64_t>(j) && !entry.ws_audit.empty()) {
          os << ";" << ws_audit_summary(entry.ws_audit);
        }
      }
      throw RecoveryFailed(os.str());
    }

    // Next layer sees the union of candidate output shapes.
    std::vector<FeatureMapShape> next_inputs;
    for (const auto& [key, cands] : state.by_ifmap) {
      for (const auto& cand : cands) {
        const FeatureMapShape shape = cand.next_input_shape();
        if (std::find(next_inputs.begin(), next_inputs.end(), shape) ==
            next_inputs.end()) {
          next_inputs.push_back(shape);
        }
      }
    }
    spatial_inputs = std::move(next_inputs);

  }

  // Union candidate lists per layer, for the report.
  for (size_t j = 0; j < layers.size(); ++j) {
    std::vector<RecoveredLayer> list;
    if (states[j].kind == LayerKind::kFullyConnected) {
      RecoveredLayer layer;
      layer.kind = LayerKind::kFullyConnected;
      layer.fc = states[j].fc;
      list.push_back(layer);
    } else {
      for (const auto& [key, cands] : states[j].by_ifmap) {
        for (const auto& cand : cands) {
          RecoveredLayer layer;
          layer.kind = cand.pooling ? LayerKind::kConvPool : LayerKind::kConv;
          layer.conv = cand;
          if (std::find(list.begin(), list.end(), layer) == list.end()) {
            list.push_back(layer);
          }
        }
      }
    }
    report.layer_candidates.push_back(std::move(list));
  }

  // Flatten: enumerate every path whose shapes chain layer to layer.
  std::vector<RecoveredLayer> path;
  const auto flatten = [&](auto&& self, size_t j, std::vector<FeatureMapShape> spatial,
                           std::optional<int64_t> flat) -> void {
    if (j == layers.size()) {
      report.structures.push_back(path);
      if (report.structures.size() > kMaxStructures) {
        throw RecoveryFailed("recover_model: structure explosion while flattening");
      }
      return;
    }
    const auto& state = states[j];
    if (state.kind == LayerKind::kFullyConnected) {
      const int64_t flattened =
          flat ? *flat : (spatial.empty() ? 0 : spatial.front().elements());
      if (flattened != state.fc.in_neurons) {
        return;  // ifmap_j == ofmap_{j-1} fails for this path
      }
      RecoveredLayer layer;
      layer.kind = LayerKind::kFullyConnected;
      layer.fc = state.fc;
      path.push_back(layer);
      self(self, j + 1, {}, state.fc.out_neurons);
      path.pop_back();
      return;
    }
    if (spatial.empty()) {
      return;
    }
    const auto it = state.by_ifmap.find(key_of(spatial.front()));
    if (it == state.by_ifmap.end()) {
      return;
    }
    for (const auto& cand : it->second) {
      RecoveredLayer layer;
      layer.kind = cand.pooling ? LayerKind::kConvPool : LayerKind::kConv;
      layer.conv = cand;
      path.push_back(layer);
      self(self, j + 1, {cand.next_input_shape()}, std::nullopt);
      path.pop_back();
    }
  };
  flatten(flatten, 0, {first_ifmap}, std::nullopt);

  return report;
}

// ---------------------------------------------------------------------------
// Report serialization and verification
// ---------------------------------------------------------------------------

namespace {

ordered_json recovered_layer_json(const RecoveredLayer& layer) {
  ordered_json j;
  if (layer.kind == LayerKind::kFullyConnected) {
    j["type"] = "fc";
    j["in"] = layer.fc.in_neurons;
    j["out"] = layer.fc.out_neurons;
    return j;
  }
  const auto& c = layer.conv;
  j["type"] = "conv";
  j["R"] = c.filter_size;
  j["K"] = c.filter_count;
  j["C"] = c.in_channels;
  j["st"] = c.stride;
  j["pd"] = c.pad;
  j["out"] = {c.out_x, c.out_y};
  if (c.pooling) {
    j["pool"] = {{"R", c.pooling->window}, {"st", c.pooling->stride}};
  } else {
    j["pool"] = nullptr;
  }
  return j;
}

RecoveredLayer recovered_layer_from_json(const ordered_json& j) {
  RecoveredLayer layer;
  if (j.at("type").get<std::string>() == "fc") {
    layer.kind = LayerKind::kFullyConnected;
    layer.fc = {j.at("in").get<int64_t>(), j.at("out").get<int64_t>()};
    return layer;
  }
  layer.conv.filter_size = j.at("R").get<int64_t>();
  layer.conv.filter_count = j.at("K").get<int64_t>();
  layer.conv.in_channels = j.at("C").get<int64_t>();
  layer.conv.stride = j.at("st").get<int64_t>();
  layer.conv.pad = j.at("pd").get<int64_t>();
  layer.conv.out_x = j.at("out")[0].get<int64_t>();
  layer.conv.out_y = j.at("out")[1].get<int64_t>();
  if (j.contains("pool") && !j["pool"].is_null()) {
    layer.conv.pooling = PoolParams{j["pool"].at("R").get<int64_t>(),
                                    j["pool"].at("st").get<int64_t>()};
    layer.kind = LayerKind::kConvPool;
  } else {
    layer.kind = LayerKind::kConv;
  }
  return layer;
}

}  // namespace

std::string report_to_json(const RecoveryReport& report) {
  ordered_json j;
  j["dataflow"] = dataflow_name(report.dataflow);
  j["m"] = report.pes_per_array;
  j["n"] = report.arrays;
  j["first_ifmap"] = {report.first_ifmap.x, report.first_ifmap.y, report.first_ifmap.c};

  j["layers"] = ordered_json::array();
  for (const auto& layer : report.layer_candidates) {
    ordered_json jl = ordered_json::array();
    for (const auto& cand : layer) {
      jl.push_back(recovered_layer_json(cand));
    }
    j["layers"].push_back(jl);
  }

  j["structures"] = ordered_json::array();
  for (const auto& structure : report.structures) {
    ordered_json js = ordered_json::array();
    for (const auto& layer : structure) {
      js.push_back(recovered_layer_json(layer));
    }
    j["structures"].push_back(js);
  }

  j["ambiguous_layers"] = report.ambiguous_layers;

  j["audit"] = ordered_json::array();
  for (const auto& entry : report.audit) {
    ordered_json ja;
    ja["layer"] = entry.layer_index;
    ja["ifmap"] = {entry.ifmap.x, entry.ifmap.y, entry.ifmap.c};
    ja["fallback"] = entry.used_fallback;
    if (!entry.ws_audit.empty()) {
      ja["ws"] = ordered_json::array();
      for (const auto& a : entry.ws_audit) {
        ordered_json row;
        row["R"] = a.filter_size;
        row["K"] = a.filter_count;
        row["st"] = a.stride;
        row["pd"] = a.padding;
        row["fate"] = ws_reject_name(a.reject);
        ja["ws"].push_back(row);
      }
    }
    if (!entry.os_audit.empty()) {
      ja["os"] = ordered_json::array();
      for (const auto& a : entry.os_audit) {
        ordered_json row;
        row["pd"] = a.pad;
        row["out_x"] = a.out_x;
        row["out_y"] = a.out_y;
        row["K"] = a.k;
        row["fate"] = os_reject_name(a.reject);
        ja["os"].push_back(row);
      }
    }
    j["audit"].push_back(ja);
  }
  return j.dump(2) + "\n";
}

RecoveryReport report_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace(std::string("report_from_json: ") + e.what());
  }
  RecoveryReport report;
  report.dataflow = dataflow_from_name(j.at("dataflow").get<std::string>());
  report.pes_per_array = j.at("m").get<int64_t>();
  report.arrays = j.at("n").get<int64_t>();
  report.first_ifmap = {j.at("first_ifmap")[0].get<int64_t>(),
                        j.at("first_ifmap")[1].get<int64_t>(),
                        j.at("first_ifmap")[2].get<int64_t>()};
  for (const auto& jl : j.at("layers")) {
    std::vector<RecoveredLayer> layer;
    for (const auto& jc : jl) {
      layer.push_back(recovered_layer_from_json(jc));
    }
    report.layer_candidates.push_back(std::move(layer));
  }
  for (const auto& js : j.at("structures")) {
    RecoveredStructure structure;
    for (const auto& jc : js) {
      structure.push_back(recovered_layer_from_json(jc));
    }
    report.structures.push_back(std::move(structure));
  }
  if (j.contains("ambiguous_layers")) {
    report.ambiguous_layers = j["ambiguous_layers"].get<std::vector<int64_t>>();
  }
  return report;
}

VerifyResult verify_report_against_model(const RecoveryReport& report,
                                         const CnnModel& model) {
  if (report.structures.empty()) {
    return {false, "no structures"};
  }
  if (report.structures.size() != 1) {
    return {false, "multiple structures (" + std::to_string(report.structures.size()) +
                       ")"};
  }
  const auto& structure = report.structures.front();
  if (structure.size() != model.layers.size()) {
    return {false, "layer_count"};
  }

  int64_t conv_no = 0;
  int64_t fc_no = 0;
  for (size_t j = 0; j < model.layers.size(); ++j) {
    const auto& recovered = structure[j];
    if (const auto* conv = std::get_if<ConvLayerSpec>(&model.layers[j])) {
      ++conv_no;
      const std::string prefix = "conv" + std::to_string(conv_no);
      if (recovered.kind == LayerKind::kFullyConnected) {
        return {false, prefix + ".type"};
      }
      const auto& cand = recovered.conv;
      if (cand.filter_size != conv->filter_size) return {false, prefix + ".R"};
      if (cand.filter_count != conv->filter_count) return {false, prefix + ".K"};
      if (cand.in_channels != conv->in_channels) return {false, prefix + ".C"};
      if (cand.stride != conv->stride) return {false, prefix + ".st"};
      if (cand.pad != conv->pad) return {false, prefix + ".pd"};
      if (conv->pooling.has_value() != cand.pooling.has_value()) {
        return {false, prefix + ".pool"};
      }
      if (conv->pooling) {
        // Pool kind is unobservable; window and stride must match.
        if (cand.pooling->window != conv->pooling->window) {
          return {false, prefix + ".pool.R"};
        }
        if (cand.pooling->stride != conv->pooling->stride) {
          return {false, prefix + ".pool.st"};
        }
      }
    } else {
      ++fc_no;
      const std::string prefix = "fc" + std::to_string(fc_no);
      const auto& fc = std::get<FcLayerSpec>(model.layers[j]);
      if (recovered.kind != LayerKind::kFullyConnected) {
        return {false, prefix + ".type"};
      }
      if (recovered.fc.in_neurons != fc.in_neurons) return {false, prefix + ".in"};
      if (recovered.fc.out_neurons != fc.out_neurons) return {false, prefix + ".out"};
    }
  }
  return {true, ""};
}

}  // namespace dfscope
