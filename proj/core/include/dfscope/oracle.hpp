#pragma once

#include <cstdint>
#include <vector>

#include "dfscope/cnn.hpp"
#include "dfscope/os_sim.hpp"
#include "dfscope/trace.hpp"
#include "dfscope/ws_sim.hpp"

namespace dfscope {

// One multiply-accumulate: filter k, channel c, filter position (y, x),
// ofmap position (out_x, out_y).
struct MacEvent {
  int64_t k = 0;
  int64_t c = 0;
  int64_t y = 0;
  int64_t x = 0;
  int64_t out_x = 0;
  int64_t out_y = 0;
};

// MAC budget above which the brute-force replay refuses to run.
inline constexpr uint64_t kOracleMacGuardrail = 1'000'000;

uint64_t mac_event_count(const ConvLayerSpec& conv, const FeatureMapShape& ifmap);

// Brute-force reference: replays the mapping policy cycle by cycle and
// counts reads as literal set differences between the data each PE needs
// and the data still resident or forwardable from the previous cycle. No
// closed forms anywhere; used to validate the simulators record-for-record.
// Throws TooLarge above the MAC guardrail.
std::vector<CycleRecord> brute_force_trace(const ConvLayerSpec& conv,
                                           const FeatureMapShape& ifmap,
                                           const WsConfig& cfg);
std::vector<CycleRecord> brute_force_trace(const ConvLayerSpec& conv,
                                           const FeatureMapShape& ifmap,
                                           const OsConfig& cfg);

}  // namespace dfscope
