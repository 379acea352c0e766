//
// Copyright 2026 The dputil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "absl/strings/str_format.h"
#include "dputil/harness.h"
#include "dputil/status_macros.h"

namespace dputil {
namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string ResolveOutputDir(const std::string& flag,
                             const ExperimentConfig& config) {
  if (!flag.empty()) return flag;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "results";
}

absl::Status RunSynth(const SyntheticSpec& spec, const std::string& out_path,
                      std::ostream& out) {
  ASSIGN_OR_RETURN(Dataset data, Synthesize(spec));
  RETURN_IF_ERROR(WriteCsv(data, out_path));
  out << absl::StrFormat("wrote %d rows (%d features, %d classes) to %s\n",
                         data.size(), data.dim(), data.class_count, out_path);
  return absl::OkStatus();
}

absl::Status RunSweepCommand(const std::string& config_path,
                             const std::vector<uint64_t>& seeds,
                             const std::string& out_flag, bool save_models,
                             std::ostream& out, std::ostream& err) {
  ASSIGN_OR_RETURN(ExperimentConfig config, LoadConfig(config_path));
  if (!seeds.empty()) config.seeds = seeds;
  const std::string dir = ResolveOutputDir(out_flag, config);
  SweepOptions options;
  options.log = &err;
  if (save_models) options.models_dir = (fs::path(dir) / "models").string();
  ASSIGN_OR_RETURN(SweepResult result, RunSweep(config, options));
  RETURN_IF_ERROR(WriteResults(result, dir));
  size_t failed = 0;
  for (const SweepRow& row : result.rows) failed += !row.ok;
  out << absl::StrFormat("%d rows (%d failed) written to %s in %.1f s\n",
                         result.rows.size(), failed,
                         (fs::path(dir) / kResultsFile).string(),
                         result.wall_seconds);
  return absl::OkStatus();
}

absl::Status RunAttackCommand(const std::string& model_path,
                              const std::string& config_path,
                              const std::vector<uint64_t>& seeds,
                              std::ostream& out) {
  ASSIGN_OR_RETURN(ExperimentConfig config, LoadConfig(config_path));
  if (!seeds.empty()) config.seeds = seeds;
  std::ifstream in(model_path);
  if (!in) {
    return absl::NotFoundError(
        absl::StrFormat("model file not found: %s", model_path));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%s: invalid JSON: %s", model_path, e.what()));
  }
  ASSIGN_OR_RETURN(PrivateModel model, PrivateModelFromJson(j));
  ASSIGN_OR_RETURN(Dataset data, LoadDataset(config));
  const uint64_t seed = config.seeds.front();
  ASSIGN_OR_RETURN(SeedContext ctx, PrepareSeed(config, data, seed));
  if (model.arch().kind != ctx.arch.kind ||
      model.arch().input_dim != ctx.arch.input_dim ||
      model.arch().class_count != ctx.arch.class_count) {
    return absl::InvalidArgumentError(
        "model architecture does not match the config's dataset and arch");
  }
  ASSIGN_OR_RETURN(MetricRow m,
                   AssessPrivateModel(ctx, model,
                                      Rng::Derive(seed, "attack-cli").NextU64()));
  out << absl::StrFormat(
      "seed=%d acc_nonprivate=%.4f acc_private=%.4f utility_loss=%.4f "
      "tpr=%.4f fpr=%.4f privacy_leakage=%.4f true_revealed=%d "
      "n_members=%d\n",
      seed, m.acc_nonprivate, m.acc_private, m.utility_loss, m.tpr, m.fpr,
      m.privacy_leakage, m.true_revealed, m.n_members);
  return absl::OkStatus();
}

absl::Status RunReportCommand(const std::string& dir, std::ostream& out) {
  ASSIGN_OR_RETURN(SweepResult result, ReadResults(dir));
  ASSIGN_OR_RETURN(std::vector<std::string> paths, EmitPlots(result, dir));
  std::set<std::pair<std::string, std::string>> groups;
  for (const SweepRow& row : result.rows) groups.insert({row.dataset, row.arch});
  for (const auto& [dataset, arch] : groups) {
    out << absl::StrFormat("%s (%s)\n", dataset, arch);
    out << absl::StrFormat("  %-10s %10s %18s %18s %18s\n", "mechanism",
                           "epsilon", "utility_loss", "privacy_leakage",
                           "true_revealed");
    const auto loss = AggregateMetric(result, dataset, arch, "utility_loss");
    const auto leak = AggregateMetric(result, dataset, arch, "privacy_leakage");
    const auto revealed =
        AggregateMetric(result, dataset, arch, "true_revealed");
    for (size_t i = 0; i < loss.size(); ++i) {
      out << absl::StrFormat(
          "  %-10s %10g %9.4f+-%-7.4f %9.4f+-%-7.4f %9.1f+-%-7.1f\n",
          loss[i].mechanism, loss[i].epsilon, loss[i].value.mean,
          loss[i].value.stddev, leak[i].value.mean, leak[i].value.stddev,
          revealed[i].value.mean, revealed[i].value.stddev);
    }
  }
  size_t failed = 0;
  for (const SweepRow& row : result.rows) failed += !row.ok;
  if (failed > 0) {
    out << absl::StrFormat("%d failed rows excluded\n", failed);
  }
  out << absl::StrFormat("%d files written to %s\n", paths.size(), dir);
  return absl::OkStatus();
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Differential-privacy utility and leakage toolkit", "dputil"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  SyntheticSpec spec;
  std::string synth_out = "synthetic.csv";
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset CSV");
  synth->add_option("--n", spec.n, "Row count")->capture_default_str();
  synth->add_option("--d", spec.d, "Feature count")->capture_default_str();
  synth->add_option("--classes", spec.class_count, "Class count")
      ->capture_default_str();
  synth->add_option("--separation", spec.class_separation,
                    "Distance between class centers")
      ->capture_default_str();
  synth->add_option("--seed", spec.seed, "Generator seed")
      ->capture_default_str();
  synth->add_option("--out", synth_out, "Output CSV path")
      ->capture_default_str();

  std::string config_path;
  std::vector<uint64_t> seeds;
  std::string out_dir;
  bool save_models = false;
  auto* sweep = app.add_subcommand("sweep", "Run the epsilon sweep");
  sweep->add_option("config", config_path, "Experiment config JSON")
      ->required();
  sweep->add_option("--seed", seeds, "Override the config's seed list");
  sweep->add_option("--out", out_dir,
                    absl::StrFormat("Output directory (default: config "
                                    "output_dir, then $%s, then ./results)",
                                    kOutputDirEnv));
  sweep->add_flag("--save-models", save_models,
                  "Write every private model under <out>/models");

  std::string model_path;
  auto* attack =
      app.add_subcommand("attack", "Attack one saved private model");
  attack->add_option("model", model_path, "Private model JSON")->required();
  attack->add_option("config", config_path, "Experiment config JSON")
      ->required();
  attack->add_option("--seed", seeds,
                     "Split seed the model was trained on (first is used)");

  std::string report_dir;
  auto* report =
      app.add_subcommand("report", "Plot and summarize a results directory");
  report->add_option("dir", report_dir, "Directory holding results.csv")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (e.get_name() == "CallForVersion" ? e.what() : app.help()) << "\n";
      return kExitOk;
    }
    err << "dputil: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  absl::Status status;
  if (synth->parsed()) {
    status = RunSynth(spec, synth_out, out);
  } else if (sweep->parsed()) {
    status =
        RunSweepCommand(config_path, seeds, out_dir, save_models, out, err);
  } else if (attack->parsed()) {
    status = RunAttackCommand(model_path, config_path, seeds, out);
  } else if (report->parsed()) {
    status = RunReportCommand(report_dir, out);
  }
  if (!status.ok()) {
    err << "dputil: " << status.message() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace dputil
