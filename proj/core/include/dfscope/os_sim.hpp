#pragma once

#include <cstdint>
#include <vector>

#include "dfscope/cnn.hpp"
#include "dfscope/trace.hpp"

namespace dfscope {

// OS(m, n): each PE accumulates exactly one ofmap value; a tile covers m
// ofmap columns by n ofmap rows. One weight is broadcast per cycle; inputs
// are unicast with right-neighbor forwarding along each array.
struct OsConfig {
  int64_t pes_per_array = 0;  // m, ofmap columns per tile
  int64_t arrays = 0;         // n, ofmap rows per tile
};

struct OsTilePlan {
  int64_t tiles_x = 0;          // ceil(X' / m)
  int64_t tiles_y = 0;          // ceil(Y' / n)
  int64_t cycles_per_tile = 0;  // R^2 * C, regardless of idle edge PEs
};

OsTilePlan plan_os_tiles(const ConvLayerSpec& conv, const FeatureMapShape& ifmap,
                         const OsConfig& cfg);

struct OsClosedForms {
  uint64_t weight_reads = 0;   // tiles_x * tiles_y * R^2 * C * K
  uint64_t input_reads = 0;
  uint64_t output_writes = 0;  // X' * Y' * K
  uint64_t total_cycles = 0;   // weight_reads + 1 (final burst cycle)
  int64_t event_cycle = 0;     // t_e = R^2 * C + 1, the first output write
  int64_t out_x = 0;
  int64_t out_y = 0;
};

OsClosedForms os_closed_forms(const ConvLayerSpec& conv, const FeatureMapShape& ifmap,
                              const OsConfig& cfg);

// The within-row weight order: filter columns in stride steps
// (1, 1+St, 1+2St, ... then wrapping to 2, 2+St, ...), which shifts each
// PE's window by exactly one neighbor per cycle and leaves one fresh input
// read per array on a stride step.
std::vector<int64_t> os_column_walk(int64_t filter_size, int64_t stride);

// Weight virtual address under the row-major layout
// addr(k, c, y, x) = ((k*C + c)*R + y)*R + x, base 0 per layer.
uint64_t weight_address(const ConvLayerSpec& conv, int64_t k, int64_t c, int64_t y,
                        int64_t x);

// Cycle-accurate trace of one layer; cycle records carry the weight address
// for the first two cycles, where |addr1 - addr2| == St.
LayerTrace simulate_os_layer(const ConvLayerSpec& conv, const FeatureMapShape& ifmap,
                             const OsConfig& cfg, TraceMode mode,
                             int64_t prefix_margin = 8);

}  // namespace dfscope
