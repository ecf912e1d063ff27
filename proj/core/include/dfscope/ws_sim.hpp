#pragma once

#include <cstdint>
#include <vector>

#include "dfscope/cnn.hpp"
#include "dfscope/trace.hpp"

namespace dfscope {

// WS(m, n): n PE arrays of m PEs, unicast weight NoC, array-wise multicast
// input NoC, neighbor forwarding inside an array, one adder tree per array
// emitting one psum per cycle.
struct WsConfig {
  int64_t pes_per_array = 0;  // m
  int64_t arrays = 0;         // n
};

// How one Conv layer maps onto the array.
//
// When R <= m, a pass pins g = m // R filter-row slots: the flat list of
// (filter row, channel) units, row-major with the channel varying fastest,
// is packed g units per pass. When C is not a multiple of g a pass straddles
// a row boundary; when C < g a pass carries several rows of one channel.
// When R > m the row is folded into ceil(R/m) chunks of width m (remainder
// last) and a pass holds a single (row, chunk, channel) unit.
//
// A pass executes one cycle per ofmap position, row-major. Weights load at
// the pass's first cycle and stay resident. The first cycle of each ofmap
// row reads the full window slice of every slot; later cycles in the row
// read min(St, slot width) fresh elements per slot, forwarding the rest.
struct WsMapping {
  int64_t channels_per_pass = 1;        // g (1 under folding)
  int64_t row_folds = 1;                // f = ceil(R/m)
  int64_t active_arrays = 1;            // n_a = min(n, K)
  int64_t filter_groups = 1;            // ceil(K / n_a)
  std::vector<int64_t> chunk_widths;    // fold chunk widths of one filter row
  int64_t passes_per_group = 0;         // P
  int64_t first_pass_elems = 0;         // per-array elements loaded at cycle 1
};

WsMapping plan_ws_mapping(const ConvLayerSpec& conv, const WsConfig& cfg);

// Exact totals for one WS layer, identical to what the cycle walk produces.
struct WsClosedForms {
  uint64_t weight_reads = 0;   // R^2 * C * K
  uint64_t input_reads = 0;
  uint64_t output_writes = 0;  // X' * Y' * K
  uint64_t psum_writes = 0;
  uint64_t psum_reads = 0;
  uint64_t total_cycles = 0;   // compute cycles + 1 (accumulation latency)
  uint64_t w1 = 0;             // weight reads in cycle 1
  uint64_t i1 = 0;             // input reads in cycle 1
  uint64_t i2 = 0;             // input reads in cycle 2
  int64_t event_cycle = 0;     // t_e = X' + 1
  // True when the per-cycle input reads are constant (St >= slot width or
  // X' == 1), so the i[t] == i[1] event carries no row-width information.
  bool degenerate_event = false;
  int64_t out_x = 0;
  int64_t out_y = 0;
};

WsClosedForms ws_closed_forms(const ConvLayerSpec& conv, const FeatureMapShape& ifmap,
                              const WsConfig& cfg);

// Cycle-accurate trace of one layer. Totals always come from the closed
// forms; cycle records cover the whole layer in full mode, or the targeted
// event plus `prefix_margin` cycles in prefix mode.
LayerTrace simulate_ws_layer(const ConvLayerSpec& conv, const FeatureMapShape& ifmap,
                             const WsConfig& cfg, TraceMode mode,
                             int64_t prefix_margin = 8);

}  // namespace dfscope
