// dfscope: simulate dataflow CNN accelerators at cycle granularity, capture
// the memory side-channel trace, and run the architecture recovery attack.

#include <iostream>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfscope/harness.hpp"
#include "dfscope/trace_io.hpp"
#include "dfscope/zoo.hpp"

namespace {

using namespace dfscope;

FeatureMapShape parse_ifmap(const std::string& text) {
  FeatureMapShape shape;
  char sep1 = 0, sep2 = 0;
  std::istringstream is(text);
  if (!(is >> shape.x >> sep1 >> shape.y >> sep2 >> shape.c) || sep1 != 'x' ||
      sep2 != 'x') {
    throw CLI::ValidationError("--ifmap", "expected XxYxC, e.g. 227x227x3");
  }
  return shape;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

struct ArchFlags {
  std::string arch;
  int64_t m = 0;
  int64_t n = 0;

  AcceleratorConfig to_config() const {
    AcceleratorConfig accel;
    accel.dataflow = dataflow_from_name(arch);
    accel.pes_per_array = m;
    accel.arrays = n;
    return accel;
  }
};

int cmd_simulate(const ExperimentSpec& spec, bool oracle_check) {
  const SimulateOutcome outcome = run_simulate(spec, oracle_check);
  std::cout << "trace: " << spec.trace_path << "\n";
  if (oracle_check) {
    std::cout << "oracle check: " << outcome.oracle_checked_layers << " layer(s) verified";
    if (outcome.oracle_skipped_layers > 0) {
      std::cout << ", " << outcome.oracle_skipped_layers << " above the MAC guardrail";
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_attack(const std::string& trace_path, const FeatureMapShape& ifmap,
               const std::optional<AcceleratorConfig>& accel,
               const std::string& report_path) {
  const AttackOutcome outcome = run_attack(trace_path, ifmap, accel, report_path);
  for (size_t j = 0; j < outcome.report.layer_candidates.size(); ++j) {
    std::cout << "layer " << j << ": " << outcome.report.layer_candidates[j].size()
              << " candidate(s)\n";
  }
  for (int64_t layer : outcome.report.ambiguous_layers) {
    std::cout << "layer " << layer
              << ": FC identity holds despite psum traffic; type is ambiguous\n";
  }
  std::cout << "structures: " << outcome.report.structures.size() << "\n";
  if (!report_path.empty()) {
    std::cout << "report: " << report_path << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& report_path, const ExperimentSpec& model_spec) {
  const CnnModel model = resolve_model(model_spec);
  const VerifyResult verdict = run_verify(report_path, model);
  if (verdict.match) {
    std::cout << "match: recovered structure equals " << model.name << "\n";
    return 0;
  }
  std::cout << "mismatch at " << verdict.diff << "\n";
  return 1;
}

int cmd_matrix(std::vector<std::string> models, const std::string& arch_filter,
               const std::string& out_dir, int64_t prefix_margin, uint64_t seed) {
  if (models.empty()) {
    models = {"lenet", "alexnet", "vgg16"};
  }
  std::vector<AcceleratorConfig> configs;
  for (const auto& config : default_accelerator_grid()) {
    if (arch_filter.empty() || dataflow_name(config.dataflow) == arch_filter) {
      configs.push_back(config);
    }
  }
  const MatrixResult result = run_matrix(models, configs, out_dir, prefix_margin, seed);
  std::cout << format_matrix_table(result, models, configs);
  std::cout << "csv: " << out_dir << "/matrix.csv\n";
  std::ofstream csv(out_dir + "/matrix.csv");
  csv << format_matrix_csv(result);
  if (!result.all_single_and_verified) {
    std::cerr << "matrix: at least one cell did not converge to the single correct "
                 "structure\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memory side-channel analysis of dataflow CNN inference accelerators"};
  app.require_subcommand(1);

  // --- simulate ---------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "run a model and capture its trace");
  ExperimentSpec sim_spec;
  ArchFlags sim_arch;
  std::string sim_mode = "prefix";
  bool oracle_check = false;
  simulate->add_option("--model", sim_spec.model_name, "zoo model: lenet|alexnet|vgg16");
  simulate->add_option("--model-file", sim_spec.model_file, "model JSON file");
  simulate->add_option("--arch", sim_arch.arch, "dataflow: ws|os")->required();
  simulate->add_option("--m", sim_arch.m, "PEs per array")->required();
  simulate->add_option("--n", sim_arch.n, "PE arrays")->required();
  simulate->add_option("--mode", sim_mode, "trace mode: full|prefix (default prefix)");
  simulate->add_option("--prefix-margin", sim_spec.prefix_margin,
                       "cycles recorded beyond the targeted event (default 8)");
  simulate->add_option("--out", sim_spec.trace_path, "trace file path")->required();
  simulate->add_flag("--oracle-check", oracle_check,
                     "replay small Conv layers with the brute-force reference");
  simulate->add_option("--seed", sim_spec.seed, "seed for randomized runs");

  // --- attack -----------------------------------------------------------
  auto* attack = app.add_subcommand("attack", "recover the architecture from a trace");
  std::string attack_trace, attack_ifmap, attack_report;
  ArchFlags attack_arch;
  attack->add_option("--trace", attack_trace, "trace file")->required();
  attack->add_option("--ifmap", attack_ifmap, "first-layer ifmap, XxYxC")->required();
  attack->add_option("--arch", attack_arch.arch, "override dataflow from trace meta");
  attack->add_option("--m", attack_arch.m, "override PEs per array");
  attack->add_option("--n", attack_arch.n, "override PE arrays");
  attack->add_option("--out", attack_report, "report JSON path");

  // --- verify -----------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "compare a report with ground truth");
  std::string verify_report;
  ExperimentSpec verify_spec;
  verify->add_option("--report", verify_report, "report JSON file")->required();
  verify->add_option("--model", verify_spec.model_name, "zoo model name");
  verify->add_option("--model-file", verify_spec.model_file, "model JSON file");

  // --- matrix -----------------------------------------------------------
  auto* matrix = app.add_subcommand("matrix", "reproduce the models x architectures grid");
  std::string matrix_models, matrix_arch, matrix_out = "matrix_out";
  int64_t matrix_margin = 8;
  uint64_t matrix_seed = 0;
  matrix->add_option("--models", matrix_models, "comma-separated zoo models (default all)");
  matrix->add_option("--arch", matrix_arch, "restrict to one dataflow: ws|os");
  matrix->add_option("--out", matrix_out, "directory for trace/report files");
  matrix->add_option("--prefix-margin", matrix_margin, "prefix margin in cycles");
  matrix->add_option("--seed", matrix_seed, "shuffle seed for cell execution order");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      sim_spec.accel = sim_arch.to_config();
      sim_spec.mode = sim_mode == "full" ? TraceMode::kFull : TraceMode::kPrefix;
      return cmd_simulate(sim_spec, oracle_check);
    }
    if (attack->parsed()) {
      std::optional<AcceleratorConfig> accel;
      if (!attack_arch.arch.empty()) {
        accel = attack_arch.to_config();
      }
      return cmd_attack(attack_trace, parse_ifmap(attack_ifmap), accel, attack_report);
    }
    if (verify->parsed()) {
      return cmd_verify(verify_report, verify_spec);
    }
    if (matrix->parsed()) {
      return cmd_matrix(split_csv(matrix_models), matrix_arch, matrix_out, matrix_margin,
                        matrix_seed);
    }
  } catch (const dfscope::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
