#include "dfscope/ws_sim.hpp"

#include <algorithm>

namespace dfscope {

namespace {

// Per-pass read counts. input_elems doubles as the per-array weight element
// count: every slot holds `width` weights and consumes `width` inputs at an
// ofmap-row start.
struct WsPass {
  int64_t input_elems = 0;    // full window slice, all slots
  int64_t mid_row_reads = 0;  // fresh inputs once forwarding kicks in
};

std::vector<WsPass> build_ws_passes(const ConvLayerSpec& conv, const WsConfig& cfg,
                                    const WsMapping& mapping) {
  std::vector<WsPass> passes;
  const int64_t r = conv.filter_size;
  const int64_t c = conv.in_channels;
  const int64_t st = conv.stride;

  if (r <= cfg.pes_per_array) {
    const int64_t g = mapping.channels_per_pass;
    const int64_t units = r * c;
    passes.reserve((units + g - 1) / g);
    for (int64_t start = 0; start < units; start += g) {
      const int64_t slots = std::min(g, units - start);
      passes.push_back({slots * r, slots * st});
    }
  } else {
    passes.reserve(r * mapping.row_folds * c);
    for (int64_t row = 0; row < r; ++row) {
      for (int64_t width : mapping.chunk_widths) {
        for (int64_t channel = 0; channel < c; ++channel) {
          (void)channel;
          passes.push_back({width, std::min(st, width)});
        }
      }
    }
  }
  return passes;
}

}  // namespace

WsMapping plan_ws_mapping(const ConvLayerSpec& conv, const WsConfig& cfg) {
  if (cfg.pes_per_array < 1 || cfg.arrays < 1) {
    throw InvalidGeometry("WS config: m and n must be >= 1");
  }
  WsMapping mapping;
  const int64_t m = cfg.pes_per_array;
  const int64_t r = conv.filter_size;

  mapping.active_arrays = std::min<int64_t>(cfg.arrays, conv.filter_count);
  mapping.filter_groups =
      (conv.filter_count + mapping.active_arrays - 1) / mapping.active_arrays;

  if (r <= m) {
    mapping.channels_per_pass = m / r;
    mapping.row_folds = 1;
    mapping.chunk_widths = {r};
    const int64_t units = r * conv.in_channels;
    const int64_t g = mapping.channels_per_pass;
    mapping.passes_per_group = (units + g - 1) / g;
    mapping.first_pass_elems = std::min(g, units) * r;
  } else {
    mapping.channels_per_pass = 1;
    mapping.row_folds = (r + m - 1) / m;
    int64_t remaining = r;
    while (remaining > 0) {
      const int64_t width = std::min(m, remaining);
      mapping.chunk_widths.push_back(width);
      remaining -= width;
    }
    mapping.passes_per_group = r * mapping.row_folds * conv.in_channels;
    mapping.first_pass_elems = mapping.chunk_widths.front();
  }
  return mapping;
}

WsClosedForms ws_closed_forms(const ConvLayerSpec& conv, const FeatureMapShape& ifmap,
                              const WsConfig& cfg) {
  const FeatureMapShape out = ofmap_shape(ifmap, conv);
  const WsMapping mapping = plan_ws_mapping(conv, cfg);
  const auto passes = build_ws_passes(conv, cfg, mapping);

  WsClosedForms forms;
  forms.out_x = out.x;
  forms.out_y = out.y;

  const uint64_t r = conv.filter_size;
  const uint64_t ofmap_positions = static_cast<uint64_t>(out.x) * out.y;

  forms.weight_reads = r * r * conv.in_channels * conv.filter_count;
  forms.output_writes = ofmap_positions * conv.filter_count;
  forms.psum_writes =
      static_cast<uint64_t>(conv.filter_count) * mapping.passes_per_group * ofmap_positions;
  forms.psum_reads = forms.psum_writes - forms.output_writes;
  forms.total_cycles =
      static_cast<uint64_t>(mapping.filter_groups) * mapping.passes_per_group *
          ofmap_positions +
      1;

  uint64_t reads_per_group = 0;
  for (const auto& pass : passes) {
    reads_per_group += static_cast<uint64_t>(pass.input_elems) * out.y +
                       static_cast<uint64_t>(pass.mid_row_reads) * (out.x - 1) * out.y;
  }
  forms.input_reads = reads_per_group * mapping.filter_groups;

  forms.i1 = passes.front().input_elems;
  forms.w1 = forms.i1 * mapping.active_arrays;
  forms.i2 = out.x >= 2 ? static_cast<uint64_t>(passes.front().mid_row_reads) : forms.i1;
  forms.event_cycle = out.x + 1;
  forms.degenerate_event = forms.i2 == forms.i1;
  return forms;
}

LayerTrace simulate_ws_layer(const ConvLayerSpec& conv, const FeatureMapShape& ifmap,
                             const WsConfig& cfg, TraceMode mode, int64_t prefix_margin) {
  const FeatureMapShape out = ofmap_shape(ifmap, conv);
  const WsMapping mapping = plan_ws_mapping(conv, cfg);
  const auto passes = build_ws_passes(conv, cfg, mapping);
  const WsClosedForms forms = ws_closed_forms(conv, ifmap, cfg);

  LayerTrace trace;
  trace.weight_reads = forms.weight_reads;
  trace.input_reads = forms.input_reads;
  trace.output_writes = forms.output_writes;
  trace.psum_writes = forms.psum_writes;
  trace.psum_reads = forms.psum_reads;
  trace.dram_writes = forms.output_writes;  // no pooling at this level
  trace.total_cycles = forms.total_cycles;

  const uint64_t compute_cycles = forms.total_cycles - 1;
  uint64_t limit = forms.total_cycles;
  if (mode == TraceMode::kPrefix) {
    limit = std::min<uint64_t>(limit, forms.event_cycle + prefix_margin);
  }
  trace.cycle_prefix.reserve(limit);

  const int64_t pass_count = mapping.passes_per_group;
  const uint64_t positions = static_cast<uint64_t>(out.x) * out.y;
  const uint64_t group_block = static_cast<uint64_t>(pass_count) * positions;
  const int64_t last_group_size =
      conv.filter_count - mapping.active_arrays * (mapping.filter_groups - 1);

  // Psums appear one cycle after the MACs that produce them (accumulation
  // latency q = 1), which is also what makes total_cycles = compute + 1.
  uint64_t pending_psw = 0, pending_psr = 0, pending_o = 0;

  for (uint64_t t = 1; t <= limit; ++t) {
    CycleRecord rec;
    rec.t = static_cast<int64_t>(t);
    rec.o = pending_o;
    rec.psr = pending_psr;
    rec.psw = pending_psw;
    pending_psw = pending_psr = pending_o = 0;

    if (t <= compute_cycles) {
      const uint64_t ct = t - 1;  // 0-based compute index
      const int64_t group = static_cast<int64_t>(ct / group_block);
      const uint64_t within = ct % group_block;
      const int64_t pass_idx = static_cast<int64_t>(within / positions);
      const uint64_t pos = within % positions;
      const int64_t x = static_cast<int64_t>(pos % out.x);
      const int64_t group_size =
          group + 1 == mapping.filter_groups ? last_group_size : mapping.active_arrays;
      const WsPass& pass = passes[pass_idx];

      rec.w = pos == 0 ? static_cast<uint64_t>(group_size) * pass.input_elems : 0;
      rec.i = x == 0 ? static_cast<uint64_t>(pass.input_elems)
                     : static_cast<uint64_t>(pass.mid_row_reads);

      pending_psw = group_size;
      pending_psr = pass_idx > 0 ? group_size : 0;
      pending_o = pass_idx + 1 == pass_count ? group_size : 0;
    }
    trace.cycle_prefix.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace dfscope
