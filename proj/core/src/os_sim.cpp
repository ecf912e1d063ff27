#include "dfscope/os_sim.hpp"

#include <algorithm>

namespace dfscope {

namespace {

struct TileExtent {
  int64_t active_cols = 0;
  int64_t active_rows = 0;
  int64_t active_pes() const { return active_cols * active_rows; }
};

TileExtent tile_extent(const OsConfig& cfg, int64_t out_x, int64_t out_y, int64_t tx,
                       int64_t ty) {
  return TileExtent{
      std::min(cfg.pes_per_array, out_x - tx * cfg.pes_per_array),
      std::min(cfg.arrays, out_y - ty * cfg.arrays),
  };
}

}  // namespace

OsTilePlan plan_os_tiles(const ConvLayerSpec& conv, const FeatureMapShape& ifmap,
                         const OsConfig& cfg) {
  if (cfg.pes_per_array < 1 || cfg.arrays < 1) {
    throw InvalidGeometry("OS config: m and n must be >= 1");
  }
  const FeatureMapShape out = ofmap_shape(ifmap, conv);
  OsTilePlan plan;
  plan.tiles_x = (out.x + cfg.pes_per_array - 1) / cfg.pes_per_array;
  plan.tiles_y = (out.y + cfg.arrays - 1) / cfg.arrays;
  plan.cycles_per_tile = conv.filter_size * conv.filter_size * conv.in_channels;
  return plan;
}

std::vector<int64_t> os_column_walk(int64_t filter_size, int64_t stride) {
  std::vector<int64_t> walk;
  walk.reserve(filter_size);
  for (int64_t offset = 0; offset < stride && offset < filter_size; ++offset) {
    for (int64_t x = offset; x < filter_size; x += stride) {
      walk.push_back(x);
    }
  }
  return walk;
}

uint64_t weight_address(const ConvLayerSpec& conv, int64_t k, int64_t c, int64_t y,
                        int64_t x) {
  return static_cast<uint64_t>(((k * conv.in_channels + c) * conv.filter_size + y) *
                                   conv.filter_size +
                               x);
}

OsClosedForms os_closed_forms(const ConvLayerSpec& conv, const FeatureMapShape& ifmap,
                              const OsConfig& cfg) {
  const FeatureMapShape out = ofmap_shape(ifmap, conv);
  const OsTilePlan plan = plan_os_tiles(conv, ifmap, cfg);

  OsClosedForms forms;
  forms.out_x = out.x;
  forms.out_y = out.y;
  forms.weight_reads = static_cast<uint64_t>(plan.tiles_x) * plan.tiles_y *
                       plan.cycles_per_tile * conv.filter_count;
  forms.output_writes = static_cast<uint64_t>(out.x) * out.y * conv.filter_count;
  forms.total_cycles = forms.weight_reads + 1;
  forms.event_cycle = plan.cycles_per_tile + 1;

  // Per (channel, filter-row) walk: St cycles re-read every active PE (walk
  // entry plus wraps), the remaining R - St stride steps read one element
  // per active row.
  const int64_t r = conv.filter_size;
  const int64_t st = conv.stride;
  uint64_t reads_per_channel_pass = 0;
  for (int64_t ty = 0; ty < plan.tiles_y; ++ty) {
    for (int64_t tx = 0; tx < plan.tiles_x; ++tx) {
      const TileExtent extent = tile_extent(cfg, out.x, out.y, tx, ty);
      reads_per_channel_pass += static_cast<uint64_t>(r) *
                                (static_cast<uint64_t>(st) * extent.active_pes() +
                                 static_cast<uint64_t>(r - st) * extent.active_rows);
    }
  }
  forms.input_reads =
      reads_per_channel_pass * conv.in_channels * conv.filter_count;
  return forms;
}

LayerTrace simulate_os_layer(const ConvLayerSpec& conv, const FeatureMapShape& ifmap,
                             const OsConfig& cfg, TraceMode mode, int64_t prefix_margin) {
  const FeatureMapShape out = ofmap_shape(ifmap, conv);
  const OsTilePlan plan = plan_os_tiles(conv, ifmap, cfg);
  const OsClosedForms forms = os_closed_forms(conv, ifmap, cfg);
  const auto walk = os_column_walk(conv.filter_size, conv.stride);

  LayerTrace trace;
  trace.weight_reads = forms.weight_reads;
  trace.input_reads = forms.input_reads;
  trace.output_writes = forms.output_writes;
  trace.dram_writes = forms.output_writes;
  trace.total_cycles = forms.total_cycles;

  const uint64_t compute_cycles = forms.weight_reads;
  uint64_t limit = forms.total_cycles;
  if (mode == TraceMode::kPrefix) {
    limit = std::min<uint64_t>(limit, forms.event_cycle + prefix_margin);
  }
  trace.cycle_prefix.reserve(limit);

  const int64_t tiles = plan.tiles_x * plan.tiles_y;
  const uint64_t block = static_cast<uint64_t>(plan.cycles_per_tile);
  const int64_t r = conv.filter_size;

  uint64_t pending_burst = 0;
  for (uint64_t t = 1; t <= limit; ++t) {
    CycleRecord rec;
    rec.t = static_cast<int64_t>(t);
    rec.o = pending_burst;
    pending_burst = 0;

    if (t <= compute_cycles) {
      const uint64_t ct = t - 1;
      const int64_t tile_seq = static_cast<int64_t>(ct / block);
      const uint64_t within = ct % block;
      const int64_t tile_grid = tile_seq % tiles;  // per-filter tile grid
      const int64_t k = tile_seq / tiles;
      const int64_t ty = tile_grid / plan.tiles_x;
      const int64_t tx = tile_grid % plan.tiles_x;
      const TileExtent extent = tile_extent(cfg, out.x, out.y, tx, ty);

      const int64_t c = static_cast<int64_t>(within) / (r * r);
      const int64_t rem = static_cast<int64_t>(within) % (r * r);
      const int64_t row = rem / r;
      const int64_t wi = rem % r;

      rec.w = 1;
      const bool stride_step = wi > 0 && walk[wi] == walk[wi - 1] + conv.stride;
      rec.i = stride_step ? static_cast<uint64_t>(extent.active_rows)
                          : static_cast<uint64_t>(extent.active_pes());

      if (t <= 2) {
        rec.w_addrs = {weight_address(conv, k, c, row, walk[wi])};
      }
      if (within + 1 == block) {
        pending_burst = extent.active_pes();
      }
    }
    trace.cycle_prefix.push_back(std::move(rec));
  }

  const auto addr_at = [&](uint64_t ct) {
    const int64_t tile_seq = static_cast<int64_t>(ct / block);
    const uint64_t within = ct % block;
    const int64_t k = tile_seq / tiles;
    const int64_t c = static_cast<int64_t>(within) / (r * r);
    const int64_t rem = static_cast<int64_t>(within) % (r * r);
    return weight_address(conv, k, c, rem / r, walk[rem % r]);
  };
  trace.first_two_weight_addrs = {addr_at(0),
                                  compute_cycles >= 2 ? addr_at(1) : addr_at(0)};
  return trace;
}

}  // namespace dfscope
