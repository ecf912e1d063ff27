#include "dfscope/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "dfscope/oracle.hpp"
#include "dfscope/os_sim.hpp"
#include "dfscope/trace_io.hpp"
#include "dfscope/ws_sim.hpp"
#include "dfscope/zoo.hpp"

namespace dfscope {

namespace {

int64_t worker_pool_size(size_t cells) {
  int64_t threads = static_cast<int64_t>(std::thread::hardware_concurrency());
  if (threads < 1) {
    threads = 1;
  }
  if (const char* env = std::getenv(kThreadsEnvVar)) {
    const int64_t cap = std::atoll(env);
    if (cap >= 1) {
      threads = std::min(threads, cap);
    }
  }
  return std::min<int64_t>(threads, static_cast<int64_t>(cells));
}

std::string cell_stem(const std::string& model, const AcceleratorConfig& accel) {
  std::ostringstream os;
  os << model << "_" << dataflow_name(accel.dataflow) << accel.pes_per_array << "x"
     << accel.arrays;
  return os.str();
}

}  // namespace

std::string accel_label(const AcceleratorConfig& accel) {
  std::ostringstream os;
  os << (accel.dataflow == Dataflow::kWeightStationary ? "WS" : "OS") << "("
     << accel.pes_per_array << "," << accel.arrays << ")";
  return os.str();
}

CnnModel resolve_model(const ExperimentSpec& spec) {
  if (!spec.model_file.empty()) {
    return load_model_json(spec.model_file);
  }
  return zoo_model(spec.model_name);
}

SimulateOutcome run_simulate(const ExperimentSpec& spec, bool check_oracle) {
  const CnnModel model = resolve_model(spec);
  const auto records = simulate_model(model, spec.accel, spec.mode, spec.prefix_margin);
  write_trace_file(spec.trace_path, records);

  SimulateOutcome outcome;
  outcome.records_written = records.size();

  if (check_oracle) {
    FeatureMapShape shape = model.input;
    for (size_t j = 0; j < model.layers.size(); ++j) {
      const auto* conv = std::get_if<ConvLayerSpec>(&model.layers[j]);
      if (conv == nullptr) {
        shape = model.input_shape_of(j + 1);
        continue;
      }
      if (mac_event_count(*conv, shape) > kOracleMacGuardrail) {
        ++outcome.oracle_skipped_layers;
        shape = model.input_shape_of(j + 1);
        continue;
      }
      std::vector<CycleRecord> reference;
      LayerTrace simulated;
      if (spec.accel.dataflow == Dataflow::kWeightStationary) {
        const WsConfig cfg{spec.accel.pes_per_array, spec.accel.arrays};
        reference = brute_force_trace(*conv, shape, cfg);
        simulated = simulate_ws_layer(*conv, shape, cfg, TraceMode::kFull);
      } else {
        const OsConfig cfg{spec.accel.pes_per_array, spec.accel.arrays};
        reference = brute_force_trace(*conv, shape, cfg);
        simulated = simulate_os_layer(*conv, shape, cfg, TraceMode::kFull);
      }
      if (simulated.cycle_prefix != reference) {
        throw Error("oracle check failed at layer " + std::to_string(j));
      }
      ++outcome.oracle_checked_layers;
      shape = model.input_shape_of(j + 1);
    }
  }
  return outcome;
}

AttackOutcome run_attack(const std::string& trace_path, const FeatureMapShape& first_ifmap,
                         const std::optional<AcceleratorConfig>& accel_override,
                         const std::string& report_path) {
  const auto records = read_trace_file(trace_path);
  const GlobalTrace global = collect_global_trace(records);

  AttackOutcome outcome;
  outcome.spans = identify_layer_boundaries(global);
  if (outcome.spans.size() != global.layers.size()) {
    throw MalformedTrace("run_attack: boundary segments do not match layer records");
  }

  const AcceleratorConfig accel =
      accel_override.value_or(AcceleratorConfig{global.meta.dataflow,
                                                global.meta.pes_per_array,
                                                global.meta.arrays});
  outcome.report = recover_model(global.layers, first_ifmap, accel.dataflow,
                                 accel.pes_per_array, accel.arrays);

  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) {
      throw Error("run_attack: cannot write report file " + report_path);
    }
    out << report_to_json(outcome.report);
  }
  return outcome;
}

VerifyResult run_verify(const std::string& report_path, const CnnModel& model) {
  std::ifstream in(report_path);
  if (!in) {
    throw Error("run_verify: cannot open report file " + report_path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const RecoveryReport report = report_from_json(buffer.str());
  return verify_report_against_model(report, model);
}

std::vector<AcceleratorConfig> default_accelerator_grid() {
  return {
      {Dataflow::kWeightStationary, 4, 4},
      {Dataflow::kWeightStationary, 12, 4},
      {Dataflow::kWeightStationary, 24, 10},
      {Dataflow::kOutputStationary, 4, 4},
      {Dataflow::kOutputStationary, 10, 4},
      {Dataflow::kOutputStationary, 20, 10},
  };
}

MatrixResult run_matrix(const std::vector<std::string>& models,
                        const std::vector<AcceleratorConfig>& configs,
                        const std::string& out_dir, int64_t prefix_margin,
                        uint64_t seed) {
  std::filesystem::create_directories(out_dir);

  MatrixResult result;
  result.cells.resize(models.size() * configs.size());

  std::vector<size_t> order(result.cells.size());
  for (size_t idx = 0; idx < order.size(); ++idx) {
    order[idx] = idx;
  }
  // Execution order is shuffled to keep cells order-independent; the
  // assembled table is positional, so output stays deterministic.
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto run_cell = [&](size_t flat_index) {
    const size_t model_idx = flat_index / configs.size();
    const size_t config_idx = flat_index % configs.size();
    MatrixCell& cell = result.cells[flat_index];
    cell.model = models[model_idx];
    cell.accel = configs[config_idx];
    try {
      const CnnModel model = zoo_model(cell.model);
      const std::string stem =
          (std::filesystem::path(out_dir) / cell_stem(cell.model, cell.accel)).string();

      ExperimentSpec spec;
      spec.model_name = cell.model;
      spec.accel = cell.accel;
      spec.mode = TraceMode::kPrefix;
      spec.prefix_margin = prefix_margin;
      spec.trace_path = stem + ".trace.jsonl";
      run_simulate(spec);

      // The attack consumes only the trace file: the handoff never passes
      // in-memory state from the simulator side.
      const AttackOutcome attack =
          run_attack(spec.trace_path, model.input, std::nullopt, stem + ".report.json");
      cell.structure_count = static_cast<int64_t>(attack.report.structures.size());

      const VerifyResult verdict = run_verify(stem + ".report.json", model);
      cell.verified = verdict.match;
      cell.diff = verdict.diff;
    } catch (const Error& e) {
      cell.error = e.what();
    }
  };

  const int64_t pool = worker_pool_size(result.cells.size());
  std::atomic<size_t> cursor{0};
  std::vector<std::thread> workers;
  workers.reserve(pool);
  for (int64_t w = 0; w < pool; ++w) {
    workers.emplace_back([&] {
      while (true) {
        const size_t slot = cursor.fetch_add(1);
        if (slot >= order.size()) {
          return;
        }
        run_cell(order[slot]);
      }
    });
  }
  for (auto& worker : workers) {
    worker.join();
  }

  result.all_single_and_verified =
      std::all_of(result.cells.begin(), result.cells.end(), [](const MatrixCell& cell) {
        return cell.error.empty() && cell.structure_count == 1 && cell.verified;
      });
  return result;
}

std::string format_matrix_table(const MatrixResult& result,
                                const std::vector<std::string>& models,
                                const std::vector<AcceleratorConfig>& configs) {
  std::ostringstream os;
  os << "potential structures per (architecture, model)\n";
  os << "          ";
  for (const auto& model : models) {
    os << " | " << model;
  }
  os << "\n";
  for (size_t c = 0; c < configs.size(); ++c) {
    std::string label = accel_label(configs[c]);
    label.resize(10, ' ');
    os << label;
    for (size_t m = 0; m < models.size(); ++m) {
      const MatrixCell& cell = result.cells[m * configs.size() + c];
      os << " | ";
      if (!cell.error.empty()) {
        os << "error";
      } else {
        os << cell.structure_count << (cell.verified ? "" : "!");
      }
      os << std::string(models[m].size() > 5 ? models[m].size() - 5 : 0, ' ');
    }
    os << "\n";
  }
  return os.str();
}

std::string format_matrix_csv(const MatrixResult& result) {
  std::ostringstream os;
  os << "model,dataflow,m,n,structures,verified,detail\n";
  for (const auto& cell : result.cells) {
    os << cell.model << "," << dataflow_name(cell.accel.dataflow) << ","
       << cell.accel.pes_per_array << "," << cell.accel.arrays << ","
       << cell.structure_count << "," << (cell.verified ? 1 : 0) << ","
       << (!cell.error.empty() ? cell.error : cell.diff) << "\n";
  }
  return os.str();
}

}  // namespace dfscope
