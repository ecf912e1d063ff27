#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dfscope/cnn.hpp"
#include "dfscope/model_sim.hpp"
#include "dfscope/recovery.hpp"

namespace dfscope {

// Environment variable capping the matrix worker pool.
inline constexpr const char* kThreadsEnvVar = "DATAFLOW_SCOPE_THREADS";

struct ExperimentSpec {
  std::string model_name;  // zoo name; ignored when model_file is set
  std::string model_file;
  AcceleratorConfig accel;
  TraceMode mode = TraceMode::kPrefix;
  int64_t prefix_margin = 8;
  std::string trace_path;
  uint64_t seed = 0;  // shuffles matrix cell execution order
};

CnnModel resolve_model(const ExperimentSpec& spec);

struct SimulateOutcome {
  uint64_t records_written = 0;
  // Conv layers cross-checked against the brute-force reference (layers
  // above the MAC guardrail are skipped).
  int64_t oracle_checked_layers = 0;
  int64_t oracle_skipped_layers = 0;
};

// Simulates the model and writes the trace file. With check_oracle, every
// small-enough Conv layer is replayed by the brute-force reference and
// compared record for record (throws Error on any mismatch).
SimulateOutcome run_simulate(const ExperimentSpec& spec, bool check_oracle = false);

struct AttackOutcome {
  RecoveryReport report;
  std::vector<LayerSpan> spans;
};

// Decodes a trace file, segments it, recovers the model, and (when
// report_path is non-empty) writes the report JSON. The accelerator
// parameters come from the trace meta unless overridden.
AttackOutcome run_attack(const std::string& trace_path, const FeatureMapShape& first_ifmap,
                         const std::optional<AcceleratorConfig>& accel_override,
                         const std::string& report_path);

VerifyResult run_verify(const std::string& report_path, const CnnModel& model);

struct MatrixCell {
  std::string model;
  AcceleratorConfig accel;
  int64_t structure_count = 0;
  bool verified = false;
  std::string diff;  // first mismatching field when !verified
  std::string error; // non-empty when the cell failed outright
};

struct MatrixResult {
  std::vector<MatrixCell> cells;
  bool all_single_and_verified = false;
};

// The benchmark grid of the experiments: three WS and three OS shapes.
std::vector<AcceleratorConfig> default_accelerator_grid();

// simulate -> attack -> verify for every (model, config) cell, through
// trace/report files under out_dir. Cells run on a worker pool sized by
// DATAFLOW_SCOPE_THREADS (default: hardware concurrency).
MatrixResult run_matrix(const std::vector<std::string>& models,
                        const std::vector<AcceleratorConfig>& configs,
                        const std::string& out_dir, int64_t prefix_margin = 8,
                        uint64_t seed = 0);

std::string format_matrix_table(const MatrixResult& result,
                                const std::vector<std::string>& models,
                                const std::vector<AcceleratorConfig>& configs);
std::string format_matrix_csv(const MatrixResult& result);

std::string accel_label(const AcceleratorConfig& accel);  // e.g. "WS(12,4)"

}  // namespace dfscope
