#include "dfscope/oracle.hpp"

#include <algorithm>
#include <unordered_set>

namespace dfscope {

namespace {

// A slot pinned on one PE array during a pass: `width` consecutive filter
// columns of filter row `row`, channel `channel`, starting at column `base`.
struct Slot {
  int64_t channel = 0;
  int64_t row = 0;
  int64_t base = 0;
  int64_t width = 0;
};

int64_t padded_input_key(const FeatureMapShape& ifmap, int64_t pad, int64_t c, int64_t y,
                         int64_t x) {
  const int64_t width = ifmap.x + 2 * pad;
  const int64_t height = ifmap.y + 2 * pad;
  return (c * height + y) * width + x;
}

void check_guardrail(const ConvLayerSpec& conv, const FeatureMapShape& ifmap) {
  if (mac_event_count(conv, ifmap) > kOracleMacGuardrail) {
    throw TooLarge("brute_force_trace: layer exceeds the MAC guardrail");
  }
}

}  // namespace

uint64_t mac_event_count(const ConvLayerSpec& conv, const FeatureMapShape& ifmap) {
  const FeatureMapShape out = ofmap_shape(ifmap, conv);
  return static_cast<uint64_t>(conv.filter_size) * conv.filter_size * conv.in_channels *
         out.x * out.y * conv.filter_count;
}

std::vector<CycleRecord> brute_force_trace(const ConvLayerSpec& conv,
                                           const FeatureMapShape& ifmap,
                                           const WsConfig& cfg) {
  check_guardrail(conv, ifmap);
  const FeatureMapShape out = ofmap_shape(ifmap, conv);
  const int64_t r = conv.filter_size;
  const int64_t m = cfg.pes_per_array;
  const int64_t n_a = std::min<int64_t>(cfg.arrays, conv.filter_count);

  // Materialize the slot units in mapping order, then pack passes.
  std::vector<Slot> units;
  int64_t slots_per_pass = 1;
  if (r <= m) {
    slots_per_pass = m / r;
    for (int64_t row = 0; row < r; ++row) {
      for (int64_t channel = 0; channel < conv.in_channels; ++channel) {
        units.push_back({channel, row, 0, r});
      }
    }
  } else {
    for (int64_t row = 0; row < r; ++row) {
      for (int64_t base = 0; base < r; base += m) {
        const int64_t width = std::min(m, r - base);
        for (int64_t channel = 0; channel < conv.in_channels; ++channel) {
          units.push_back({channel, row, base, width});
        }
      }
    }
  }
  std::vector<std::vector<Slot>> passes;
  for (size_t start = 0; start < units.size(); start += slots_per_pass) {
    const size_t end = std::min(units.size(), start + slots_per_pass);
    passes.emplace_back(units.begin() + start, units.begin() + end);
  }
  const int64_t pass_count = static_cast<int64_t>(passes.size());

  const int64_t groups = (conv.filter_count + n_a - 1) / n_a;
  std::vector<CycleRecord> records;

  // (filter, ofmap position) -> contributions so far; every pass adds one.
  std::vector<int64_t> touches(static_cast<size_t>(conv.filter_count) * out.x * out.y, 0);

  uint64_t pending_psw = 0, pending_psr = 0, pending_o = 0;
  int64_t t = 0;

  const auto emit = [&](uint64_t w, uint64_t i) {
    CycleRecord rec;
    rec.t = ++t;
    rec.w = w;
    rec.i = i;
    rec.o = pending_o;
    rec.psr = pending_psr;
    rec.psw = pending_psw;
    pending_psw = pending_psr = pending_o = 0;
    records.push_back(std::move(rec));
  };

  for (int64_t group = 0; group < groups; ++group) {
    const int64_t group_size = std::min(n_a, conv.filter_count - group * n_a);
    for (int64_t pass_idx = 0; pass_idx < pass_count; ++pass_idx) {
      const auto& slots = passes[pass_idx];
      // One needed-set per slot; forwarding never crosses slot boundaries.
      std::vector<std::vector<int64_t>> resident(slots.size());
      // Weights resident per array are exactly this pass's elements; the
      // previous pass held disjoint elements, so pass entry reads them all.
      uint64_t pass_weight_elems = 0;
      for (const auto& slot : slots) {
        pass_weight_elems += static_cast<uint64_t>(slot.width);
      }

      for (int64_t oy = 0; oy < out.y; ++oy) {
        for (int64_t ox = 0; ox < out.x; ++ox) {
          uint64_t input_reads = 0;
          for (size_t si = 0; si < slots.size(); ++si) {
            const Slot& slot = slots[si];
            std::vector<int64_t> needed;
            needed.reserve(slot.width);
            const int64_t in_row = oy * conv.stride + slot.row;
            for (int64_t dx = 0; dx < slot.width; ++dx) {
              const int64_t in_col = ox * conv.stride + slot.base + dx;
              needed.push_back(
                  padded_input_key(ifmap, conv.pad, slot.channel, in_row, in_col));
            }
            for (int64_t key : needed) {
              if (std::find(resident[si].begin(), resident[si].end(), key) ==
                  resident[si].end()) {
                ++input_reads;
              }
            }
            resident[si] = std::move(needed);
          }
          const bool pass_entry = oy == 0 && ox == 0;
          const uint64_t weight_reads =
              pass_entry ? pass_weight_elems * static_cast<uint64_t>(group_size) : 0;
          emit(weight_reads, input_reads);

          pending_psw = static_cast<uint64_t>(group_size);
          pending_psr = 0;
          pending_o = 0;
          for (int64_t a = 0; a < group_size; ++a) {
            const int64_t k = group * n_a + a;
            auto& count = touches[static_cast<size_t>((k * out.y + oy) * out.x + ox)];
            if (count > 0) {
              ++pending_psr;
            }
            ++count;
            if (count == pass_count) {
              ++pending_o;
            }
          }
        }
      }
    }
  }
  emit(0, 0);  // drain cycle for the lagged psums
  return records;
}

std::vector<CycleRecord> brute_force_trace(const ConvLayerSpec& conv,
                                           const FeatureMapShape& ifmap,
                                           const OsConfig& cfg) {
  check_guardrail(conv, ifmap);
  const FeatureMapShape out = ofmap_shape(ifmap, conv);
  const int64_t r = conv.filter_size;
  const auto walk = os_column_walk(r, conv.stride);
  const int64_t tiles_x = (out.x + cfg.pes_per_array - 1) / cfg.pes_per_array;
  const int64_t tiles_y = (out.y + cfg.arrays - 1) / cfg.arrays;

  std::vector<CycleRecord> records;
  int64_t t = 0;
  uint64_t pending_burst = 0;

  constexpr int64_t kNoValue = -1;

  for (int64_t k = 0; k < conv.filter_count; ++k) {
    for (int64_t ty = 0; ty < tiles_y; ++ty) {
      for (int64_t tx = 0; tx < tiles_x; ++tx) {
        const int64_t cols = std::min(cfg.pes_per_array, out.x - tx * cfg.pes_per_array);
        const int64_t rows = std::min(cfg.arrays, out.y - ty * cfg.arrays);
        // held[a][b]: padded-input key each PE carries from the last cycle.
        std::vector<std::vector<int64_t>> held(
            rows, std::vector<int64_t>(cols, kNoValue));
        std::vector<std::vector<int64_t>> macs_done(rows, std::vector<int64_t>(cols, 0));
        const int64_t macs_per_pe = r * r * conv.in_channels;

        for (int64_t c = 0; c < conv.in_channels; ++c) {
          for (int64_t row = 0; row < r; ++row) {
            for (size_t wi = 0; wi < walk.size(); ++wi) {
              const int64_t wx = walk[wi];
              uint64_t input_reads = 0;
              std::vector<std::vector<int64_t>> next(
                  rows, std::vector<int64_t>(cols, kNoValue));
              for (int64_t a = 0; a < rows; ++a) {
                for (int64_t b = 0; b < cols; ++b) {
                  const int64_t oy = ty * cfg.arrays + a;
                  const int64_t ox = tx * cfg.pes_per_array + b;
                  const int64_t key = padded_input_key(
                      ifmap, conv.pad, c, oy * conv.stride + row, ox * conv.stride + wx);
                  const int64_t right = b + 1 < cols ? held[a][b + 1] : kNoValue;
                  if (key != held[a][b] && key != right) {
                    ++input_reads;
                  }
                  next[a][b] = key;
                }
              }
              held = std::move(next);

              CycleRecord rec;
              rec.t = ++t;
              rec.w = 1;
              rec.i = input_reads;
              rec.o = pending_burst;
              pending_burst = 0;
              if (t <= 2) {
                rec.w_addrs = {weight_address(conv, k, c, row, wx)};
              }

              uint64_t completed = 0;
              for (int64_t a = 0; a < rows; ++a) {
                for (int64_t b = 0; b < cols; ++b) {
                  if (++macs_done[a][b] == macs_per_pe) {
                    ++completed;
                  }
                }
              }
              pending_burst += completed;
              records.push_back(std::move(rec));
            }
          }
        }
      }
    }
  }
  CycleRecord drain;
  drain.t = ++t;
  drain.o = pending_burst;
  records.push_back(std::move(drain));
  return records;
}

}  // namespace dfscope
