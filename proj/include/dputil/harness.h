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

// Experiment orchestration: config parsing, the epsilon sweep, results
// persistence and SVG reports.
//
// Config schema (JSON):
//   {
//     "dataset": {"synthetic": {"n", "d", "class_count", "class_separation",
//                               "seed"}}
//              | {"csv": {"path", "label_column", "class_count"}},
//     "arch": "LR" | "MLP",
//     "train": {"epochs", "learning_rate", "batch_size", "lambda",
//               "adam": {"beta1", "beta2", "epsilon"}},      (optional)
//     "mechanisms": ["input", {"kind": "gradient", "clip_norm": 1.0}, ...],
//     "epsilons": [0.01, ..., 10000],                         (optional)
//     "seeds": [0, 1, 2],
//     "delta": 1e-5,                                          (optional)
//     "shadow_count": 10,                                     (optional)
//     "forest": {"trees", "max_depth"},                       (optional)
//     "workers": 1,                                           (optional)
//     "output_dir": "results"                                 (optional)
//   }
// A relative csv path is resolved against the config file's directory.

#ifndef DPUTIL_HARNESS_H_
#define DPUTIL_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "dputil/attack.h"
#include "dputil/dataset.h"
#include "dputil/learners.h"
#include "dputil/mechanisms.h"
#include "dputil/metrics.h"
#include "json.hpp"

namespace dputil {

inline constexpr char kVersion[] = "0.1.0";
inline constexpr char kOutputDirEnv[] = "DPUTIL_OUTPUT_DIR";
inline constexpr double kMinSweepEpsilon = 1e-2;
inline constexpr double kMaxSweepEpsilon = 1e4;

struct CsvSource {
  std::string path;
  std::string label_column = "label";
  int class_count = 2;
};

struct ExperimentConfig {
  std::variant<SyntheticSpec, CsvSource> dataset;
  ArchKind arch = ArchKind::kLogistic;
  TrainConfig train;
  // Templates; each cell copies one and sets its budget.
  std::vector<MechanismSpec> mechanisms;
  std::vector<double> epsilons = {1e-2, 1e-1, 1, 10, 1e2, 1e3, 1e4};
  std::vector<uint64_t> seeds;
  // Unset: PrivacyBudget::DefaultDelta(|target_train|).
  std::optional<double> delta;
  size_t shadow_count = 10;
  ForestParams forest;
  size_t workers = 1;
  std::string output_dir;
};

absl::StatusOr<ExperimentConfig> ParseConfig(const nlohmann::json& j,
                                             const std::string& base_dir = "");
absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path);
// Grid range, non-empty lists and mechanism/arch compatibility.
absl::Status ValidateConfig(const ExperimentConfig& config);
absl::StatusOr<Dataset> LoadDataset(const ExperimentConfig& config);

struct SweepRow {
  std::string dataset;
  std::string arch;
  std::string mechanism;
  double epsilon = 0.0;
  uint64_t seed = 0;
  bool ok = false;
  // acc_nonprivate and n_members are set for failed rows too.
  MetricRow metrics;
  // Not persisted in the results CSV.
  std::string error;

  friend bool operator==(const SweepRow& a, const SweepRow& b) {
    return a.dataset == b.dataset && a.arch == b.arch &&
           a.mechanism == b.mechanism && a.epsilon == b.epsilon &&
           a.seed == b.seed && a.ok == b.ok && a.metrics == b.metrics;
  }
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double wall_seconds = 0.0;
  std::string generator = std::string(Rng::kAlgorithm);
  std::string version = kVersion;
};

struct SweepOptions {
  // When set, every successful PrivateModel is written here as JSON.
  std::string models_dir;
  std::ostream* log = nullptr;
};

// Per seed: split, non-private baseline, one shadow ensemble and forest,
// then every (mechanism, epsilon) cell. Rows come out ordered by seed,
// mechanism, epsilon. Cell failures become status=failed rows.
absl::StatusOr<SweepResult> RunSweep(const ExperimentConfig& config,
                                     const SweepOptions& options = {});

// Everything one seed's cells share.
struct SeedContext {
  Dataset data;
  SplitPlan split;
  Dataset target_train;
  Dataset target_test;
  ModelArch arch;
  TrainConfig train;
  double delta = 0.0;
  double acc_nonprivate = 0.0;
  ForestClassifier forest;
};
absl::StatusOr<SeedContext> PrepareSeed(const ExperimentConfig& config,
                                        const Dataset& data, uint64_t seed);
// Accuracy, attack and metrics for one trained private model.
absl::StatusOr<MetricRow> AssessPrivateModel(const SeedContext& context,
                                             const PrivateModel& model,
                                             uint64_t query_seed);

inline constexpr char kResultsHeader[] =
    "dataset,arch,mechanism,epsilon,seed,acc_nonprivate,acc_private,"
    "utility_loss,tpr,fpr,privacy_leakage,true_revealed,n_members,status";
inline constexpr char kResultsFile[] = "results.csv";
inline constexpr char kRunMetadataFile[] = "run.json";

std::string ResultsCsv(const SweepResult& result);
// results.csv plus run.json (timing, generator, version, failures).
absl::Status WriteResults(const SweepResult& result, const std::string& dir);
absl::StatusOr<SweepResult> ParseResultsCsv(const std::string& text);
absl::StatusOr<SweepResult> ReadResults(const std::string& dir);

struct PlotPoint {
  std::string mechanism;
  double epsilon = 0.0;
  MeanStd value;
  size_t count = 0;
};
// Seed mean and standard deviation of `metric` for each (mechanism,
// epsilon) among successful rows of one (dataset, arch) group. Metric is
// utility_loss, privacy_leakage or true_revealed.
std::vector<PlotPoint> AggregateMetric(const SweepResult& result,
                                       const std::string& dataset,
                                       const std::string& arch,
                                       const std::string& metric);

inline constexpr const char* kPlottedMetrics[] = {
    "utility_loss", "privacy_leakage", "true_revealed"};

// Writes <metric>_<dataset>_<arch>.svg and a companion .csv of the plotted
// values for each metric and (dataset, arch) group. Returns written paths.
absl::StatusOr<std::vector<std::string>> EmitPlots(const SweepResult& result,
                                                   const std::string& dir);

std::string SvgLineChart(const std::string& title, const std::string& y_label,
                         const std::vector<PlotPoint>& points);

// Command-line entry point; see tools/dputil_main.cc.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace dputil

#endif  // DPUTIL_HARNESS_H_
