#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dfscope/cnn.hpp"
#include "dfscope/os_sim.hpp"
#include "dfscope/rational.hpp"
#include "dfscope/trace.hpp"
#include "dfscope/ws_sim.hpp"

namespace dfscope {

// ---------------------------------------------------------------------------
// Layer boundaries and type identification
// ---------------------------------------------------------------------------

struct LayerSpan {
  int64_t index = 0;
  int64_t begin_cycle = 0;  // global, inclusive
  int64_t end_cycle = 0;    // global, exclusive

  bool operator==(const LayerSpan&) const = default;
};

// Boundary signals derived from the stream alone (no layer indices used):
// active periods on the configuration network, and read-after-write
// dependencies between DRAM regions.
std::vector<BoundaryEvent> config_boundary_events(const GlobalTrace& trace);
std::vector<BoundaryEvent> raw_boundary_events(const GlobalTrace& trace);

// Segments the global cycle line into one span per layer. Uses whichever
// signal is present; when both are, their spans must agree. Throws
// BoundaryUndetectable without any signal, MalformedTrace on disagreement.
std::vector<LayerSpan> identify_layer_boundaries(const GlobalTrace& trace);

enum class LayerKind { kFullyConnected, kConv, kConvPool };

// Dense FC layers have no data reuse, so W_r == I_r * O_w; pooling shows as
// fewer DRAM writes than GB output writes. Throws MalformedTrace on zero
// totals.
LayerKind identify_layer_type(uint64_t weight_reads, uint64_t input_reads,
                              uint64_t output_writes, uint64_t gb_writes,
                              uint64_t dram_writes);

// ---------------------------------------------------------------------------
// Per-layer parameter recovery
// ---------------------------------------------------------------------------

// Recovered pooling parameters. The pooling kind (max vs average) does not
// affect any modeled count and is therefore unobservable.
struct PoolParams {
  int64_t window = 0;
  int64_t stride = 0;

  bool operator==(const PoolParams&) const = default;
};

struct CandidateStructure {
  int64_t filter_size = 0;   // R
  int64_t filter_count = 0;  // K
  int64_t in_channels = 0;   // C
  int64_t stride = 0;        // st
  int64_t pad = 0;           // pd
  int64_t out_x = 0;         // X'
  int64_t out_y = 0;         // Y'
  std::optional<PoolParams> pooling;

  // Shape consumed by the next layer (pooled when pooling is present).
  FeatureMapShape next_input_shape() const;

  bool operator==(const CandidateStructure&) const = default;
};

// {in = I_r, out = O_w}; throws NotAnFcLayer when W_r != I_r * O_w.
FcLayerSpec recover_fc(uint64_t weight_reads, uint64_t input_reads,
                       uint64_t output_writes);

// Pooling window/stride matching N_pool: windows from 2 upward, strides
// from non-overlapping down to 1, first hit wins. Throws NoPoolSolution.
PoolParams recover_pooling(uint64_t n_pool, int64_t out_x, int64_t out_y, int64_t k);

// Why a WS candidate {R, K} was discarded.
enum class WsReject {
  kSurvived,
  kActivePeDivisibility,  // partially filled row slots are never mapped
  kStrideNonIntegral,
  kStrideBound,           // st > R
  kPaddingInvalid,        // pd negative, fractional, or >= R
  kOutputTotalMismatch,   // O_w != X' * Y' * K (covers non-integral Y')
  kPoolingUnrecoverable,
  kFallbackExhausted,     // degenerate event: no (st, pd) reproduces the totals
};

const char* ws_reject_name(WsReject reject);

struct WsCandidateAudit {
  int64_t filter_size = 0;
  int64_t filter_count = 0;
  std::string stride;   // exact rational, empty when the check was not reached
  std::string padding;  // exact rational
  WsReject reject = WsReject::kSurvived;
};

struct WsRecovery {
  std::vector<CandidateStructure> candidates;
  std::vector<WsCandidateAudit> audit;
  int64_t active_arrays = 0;  // n_a = w[1] / i[1]
  int64_t event_cycle = 0;    // t_e as detected on the trace
  // True when the input-read prefix is constant (i[2] == i[1]): the event
  // carries no row-width information, so candidates come from matching
  // O_w, psum totals and the cycle count instead of Algorithm-style X'.
  bool used_fallback = false;
};

// Conv recovery from a WS trace. The ifmap {X, Y, C} is known from the
// previous layer. Never throws for an empty result; see recover_conv_ws.
WsRecovery recover_conv_ws_audited(const LayerTrace& trace, const FeatureMapShape& ifmap,
                                   const WsConfig& cfg);

// Throwing form: NoCandidates (with an audit summary) when every {R, K}
// was filtered out.
std::vector<CandidateStructure> recover_conv_ws(const LayerTrace& trace,
                                                const FeatureMapShape& ifmap,
                                                const WsConfig& cfg);

enum class OsReject {
  kAccepted,
  kOfmapNonIntegral,        // X' or Y' fractional for this pd
  kFilterCountNonIntegral,  // K = O_w / (X' * Y') not a positive integer
  kWeightTotalMismatch,     // tile count identity fails
};

const char* os_reject_name(OsReject reject);

struct OsPdAudit {
  int64_t pad = 0;
  std::string out_x;  // decimal with one truncated place when fractional
  std::string out_y;
  std::string k;      // empty when the ofmap was already non-integral
  OsReject reject = OsReject::kAccepted;
};

struct OsRecovery {
  std::vector<CandidateStructure> candidates;
  std::vector<OsPdAudit> audit;
  int64_t filter_size = 0;  // R from R^2 * C = t_e - 1 (0 if no integer root)
  int64_t stride = 0;       // |addr1 - addr2|
  int64_t event_cycle = 0;
};

OsRecovery recover_conv_os_audited(const LayerTrace& trace, const FeatureMapShape& ifmap,
                                   const OsConfig& cfg);
std::vector<CandidateStructure> recover_conv_os(const LayerTrace& trace,
                                                const FeatureMapShape& ifmap,
                                                const OsConfig& cfg);

// ---------------------------------------------------------------------------
// Whole-model recovery
// ---------------------------------------------------------------------------

struct RecoveredLayer {
  LayerKind kind = LayerKind::kConv;
  CandidateStructure conv;  // valid for kConv / kConvPool
  FcLayerSpec fc;           // valid for kFullyConnected

  bool operator==(const RecoveredLayer&) const = default;
};

using RecoveredStructure = std::vector<RecoveredLayer>;

// Audit entry for one (layer, candidate ifmap) recovery attempt.
struct RecoveryAuditEntry {
  int64_t layer_index = 0;
  FeatureMapShape ifmap;
  std::vector<WsCandidateAudit> ws_audit;
  std::vector<OsPdAudit> os_audit;
  bool used_fallback = false;
};

struct RecoveryReport {
  Dataflow dataflow = Dataflow::kWeightStationary;
  int64_t pes_per_array = 0;
  int64_t arrays = 0;
  FeatureMapShape first_ifmap;
  // Per layer, the union of candidates over every tried ifmap.
  std::vector<std::vector<RecoveredLayer>> layer_candidates;
  // Whole-model structures satisfying ifmap_j == ofmap_{j-1} end to end.
  std::vector<RecoveredStructure> structures;
  std::vector<RecoveryAuditEntry> audit;
  // Layers matching the FC identity while also showing psum traffic.
  std::vector<int64_t> ambiguous_layers;
};

// Layer-by-layer recovery and flattening. Per-layer traces must already be
// segmented (identify_layer_boundaries + collect_global_trace do this for
// file input). Throws RecoveryFailed when a layer has no candidates at all
// for any tried ifmap.
RecoveryReport recover_model(const std::vector<LayerTrace>& layers,
                             const FeatureMapShape& first_ifmap, Dataflow dataflow,
                             int64_t pes_per_array, int64_t arrays);

std::string report_to_json(const RecoveryReport& report);
RecoveryReport report_from_json(const std::string& text);

struct VerifyResult {
  bool match = false;
  std::string diff;  // first differing field, e.g. "conv1.pd"
};

// Exact layer-by-layer comparison; matches only when the report holds a
// single structure equal to the model.
VerifyResult verify_report_against_model(const RecoveryReport& report,
                                         const CnnModel& model);

}  // namespace dfscope
