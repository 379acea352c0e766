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

#include "dputil/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "absl/strings/numbers.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "dputil/status_macros.h"

namespace dputil {
namespace {

namespace fs = std::filesystem;

uint64_t DeriveSeed(uint64_t seed, const std::string& label) {
  return Rng::Derive(seed, label).NextU64();
}

absl::Status CheckDisjoint(const std::vector<size_t>& a,
                           const std::vector<size_t>& b, const char* what) {
  std::unordered_set<size_t> seen(a.begin(), a.end());
  for (size_t i : b) {
    if (seen.count(i)) {
      return absl::InternalError(
          absl::StrFormat("split hygiene violated: %s share row %d", what, i));
    }
  }
  return absl::OkStatus();
}

std::string FormatDouble(double v) { return absl::StrFormat("%.17g", v); }

}  // namespace

absl::StatusOr<ExperimentConfig> ParseConfig(const nlohmann::json& j,
                                             const std::string& base_dir) {
  ExperimentConfig config;
  try {
    if (!j.is_object()) {
      return absl::InvalidArgumentError("config must be a JSON object");
    }
    const auto& ds = j.at("dataset");
    if (ds.contains("synthetic")) {
      const auto& s = ds.at("synthetic");
      SyntheticSpec spec;
      spec.n = s.value("n", spec.n);
      spec.d = s.value("d", spec.d);
      spec.class_count = s.value("class_count", spec.class_count);
      spec.class_separation = s.value("class_separation", spec.class_separation);
      spec.seed = s.value("seed", spec.seed);
      config.dataset = spec;
    } else if (ds.contains("csv")) {
      const auto& c = ds.at("csv");
      CsvSource source;
      source.path = c.at("path").get<std::string>();
      if (!base_dir.empty() && fs::path(source.path).is_relative()) {
        source.path = (fs::path(base_dir) / source.path).string();
      }
      source.label_column = c.value("label_column", source.label_column);
      source.class_count = c.value("class_count", source.class_count);
      config.dataset = source;
    } else {
      return absl::InvalidArgumentError(
          "config: dataset needs a 'synthetic' or 'csv' entry");
    }
    ASSIGN_OR_RETURN(config.arch,
                     ParseArchKind(j.value("arch", std::string("LR"))));
    if (j.contains("train")) {
      ASSIGN_OR_RETURN(config.train, TrainConfigFromJson(j.at("train")));
    }
    for (const auto& m : j.at("mechanisms")) {
      ASSIGN_OR_RETURN(MechanismSpec spec, MechanismSpecFromJson(m));
      config.mechanisms.push_back(spec);
    }
    if (j.contains("epsilons")) {
      config.epsilons = j.at("epsilons").get<std::vector<double>>();
    }
    config.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    if (j.contains("delta") && !j.at("delta").is_null()) {
      config.delta = j.at("delta").get<double>();
    }
    config.shadow_count = j.value("shadow_count", config.shadow_count);
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      config.forest.trees = f.value("trees", config.forest.trees);
      config.forest.max_depth = f.value("max_depth", config.forest.max_depth);
      config.forest.features_per_split =
          f.value("features_per_split", config.forest.features_per_split);
    }
    config.workers = j.value("workers", config.workers);
    config.output_dir = j.value("output_dir", std::string());
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrFormat("config: %s", e.what()));
  }
  RETURN_IF_ERROR(ValidateConfig(config));
  return config;
}

absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(
        absl::StrFormat("config file not found: %s", path));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%s: invalid JSON: %s", path, e.what()));
  }
  return ParseConfig(j, fs::path(path).parent_path().string());
}

absl::Status ValidateConfig(const ExperimentConfig& config) {
  if (config.mechanisms.empty()) {
    return absl::InvalidArgumentError("config: at least one mechanism needed");
  }
  if (config.seeds.empty()) {
    return absl::InvalidArgumentError("config: at least one seed needed");
  }
  if (config.epsilons.empty()) {
    return absl::InvalidArgumentError("config: epsilon grid is empty");
  }
  for (double eps : config.epsilons) {
    if (!(eps >= kMinSweepEpsilon && eps <= kMaxSweepEpsilon)) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "config: epsilon %g outside the sweep range [%g, %g]", eps,
          kMinSweepEpsilon, kMaxSweepEpsilon));
    }
  }
  if (config.delta && !(*config.delta >= 0 && *config.delta < 1)) {
    return absl::InvalidArgumentError("config: delta must lie in [0, 1)");
  }
  if (config.shadow_count == 0) {
    return absl::InvalidArgumentError("config: shadow_count must be >= 1");
  }
  for (const MechanismSpec& spec : config.mechanisms) {
    if ((spec.kind == MechanismKind::kObjective ||
         spec.kind == MechanismKind::kOutput) &&
        config.arch != ArchKind::kLogistic) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "config: %s perturbation requested with %s; objective and output "
          "perturbation are in scope for LR only",
          MechanismName(spec.kind), ArchKindName(config.arch)));
    }
  }
  return config.train.Validate();
}

absl::StatusOr<Dataset> LoadDataset(const ExperimentConfig& config) {
  if (const auto* spec = std::get_if<SyntheticSpec>(&config.dataset)) {
    return Synthesize(*spec);
  }
  const auto& csv = std::get<CsvSource>(config.dataset);
  return LoadCsv(csv.path, csv.label_column, csv.class_count);
}

absl::StatusOr<SeedContext> PrepareSeed(const ExperimentConfig& config,
                                        const Dataset& data, uint64_t seed) {
  SeedContext ctx;
  ASSIGN_OR_RETURN(ctx.split, MakeSplit(data, seed));
  RETURN_IF_ERROR(CheckDisjoint(ctx.split.target_train, ctx.split.target_test,
                                "target_train and target_test"));
  RETURN_IF_ERROR(CheckDisjoint(ctx.split.target_train, ctx.split.shadow_pool,
                                "target_train and shadow_pool"));
  RETURN_IF_ERROR(CheckDisjoint(ctx.split.target_test, ctx.split.shadow_pool,
                                "target_test and shadow_pool"));
  ctx.target_train = data.Subset(ctx.split.target_train);
  ctx.target_test = data.Subset(ctx.split.target_test);
  ctx.arch = config.arch == ArchKind::kLogistic
                 ? ModelArch::Logistic(data.dim(), data.class_count)
                 : ModelArch::Mlp(data.dim(), data.class_count);
  ctx.train = config.train;
  ctx.train.seed = DeriveSeed(seed, "train");
  ctx.delta = config.delta.value_or(
      PrivacyBudget::DefaultDelta(ctx.target_train.size()));

  ASSIGN_OR_RETURN(Model baseline, Train(ctx.arch, ctx.target_train, ctx.train));
  ASSIGN_OR_RETURN(ctx.acc_nonprivate, Evaluate(baseline, ctx.target_test));

  ASSIGN_OR_RETURN(ShadowEnsemble shadows,
                   TrainShadows(data, ctx.split.shadow_pool, ctx.arch,
                                ctx.train, config.shadow_count,
                                DeriveSeed(seed, "shadows")));
  for (size_t s = 0; s < shadows.models.size(); ++s) {
    RETURN_IF_ERROR(CheckDisjoint(shadows.train_indices[s],
                                  ctx.split.target_train,
                                  "shadow data and target_train"));
    RETURN_IF_ERROR(CheckDisjoint(shadows.test_indices[s],
                                  ctx.split.target_test,
                                  "shadow data and target_test"));
  }
  ASSIGN_OR_RETURN(AttackSet records,
                   BuildAttackSet(shadows, data, DeriveSeed(seed, "records")));
  ASSIGN_OR_RETURN(ctx.forest,
                   ForestClassifier::Fit(records, config.forest,
                                         DeriveSeed(seed, "forest")));
  ctx.data = data;
  return ctx;
}

absl::StatusOr<MetricRow> AssessPrivateModel(const SeedContext& context,
                                             const PrivateModel& model,
                                             uint64_t query_seed) {
  Rng accuracy_rng = Rng::Derive(query_seed, "queries/accuracy");
  ASSIGN_OR_RETURN(double acc_private,
                   EvaluatePrivate(model, context.target_test, accuracy_rng));
  Rng attack_rng = Rng::Derive(query_seed, "queries/attack");
  PredictionApi api = [&model, &attack_rng](const Matrix& x) {
    return model.PredictProba(x, attack_rng);
  };
  ASSIGN_OR_RETURN(AttackOutcome outcome,
                   EvaluateAttack(context.forest, api, context.target_train,
                                  context.target_test));
  return ComputeMetrics(acc_private, context.acc_nonprivate, outcome);
}

absl::StatusOr<SweepResult> RunSweep(const ExperimentConfig& config,
                                     const SweepOptions& options) {
  RETURN_IF_ERROR(ValidateConfig(config));
  const auto start = std::chrono::steady_clock::now();
  ASSIGN_OR_RETURN(Dataset data, LoadDataset(config));
  RETURN_IF_ERROR(ValidateDataset(data));
  if (!options.models_dir.empty()) {
    std::error_code ec;
    fs::create_directories(options.models_dir, ec);
    if (ec) {
      return absl::PermissionDeniedError(absl::StrFormat(
          "cannot create %s: %s", options.models_dir, ec.message()));
    }
  }
  const std::string arch_name = ArchKindName(config.arch);
  SweepResult result;
  for (uint64_t seed : config.seeds) {
    if (options.log) {
      *options.log << absl::StrFormat("seed %d: baseline and shadows\n", seed);
    }
    ASSIGN_OR_RETURN(SeedContext ctx, PrepareSeed(config, data, seed));

    struct Cell {
      MechanismSpec spec;
      double epsilon;
    };
    std::vector<Cell> cells;
    for (const MechanismSpec& templ : config.mechanisms) {
      for (double eps : config.epsilons) {
        MechanismSpec spec = templ;
        spec.budget = {eps, ctx.delta};
        cells.push_back({spec, eps});
      }
    }
    std::vector<SweepRow> rows(cells.size());
    std::vector<std::optional<PrivateModel>> models(cells.size());
    auto run_cell = [&](size_t i) {
      const Cell& cell = cells[i];
      SweepRow& row = rows[i];
      row.dataset = data.name;
      row.arch = arch_name;
      row.mechanism = MechanismName(cell.spec.kind);
      row.epsilon = cell.epsilon;
      row.seed = seed;
      row.metrics.acc_nonprivate = ctx.acc_nonprivate;
      row.metrics.n_members = ctx.target_train.size();
      const uint64_t cell_seed = DeriveSeed(
          seed, absl::StrFormat("cell/%s/%.17g", row.mechanism, cell.epsilon));
      auto model =
          TrainPrivate(ctx.arch, ctx.target_train, cell.spec, ctx.train,
                       cell_seed);
      if (!model.ok()) {
        row.error = std::string(model.status().message());
        return;
      }
      auto metrics = AssessPrivateModel(ctx, *model, cell_seed);
      if (!metrics.ok()) {
        row.error = std::string(metrics.status().message());
        return;
      }
      row.metrics = *metrics;
      row.ok = true;
      if (!options.models_dir.empty()) models[i].emplace(*std::move(model));
    };
    const size_t workers =
        std::max<size_t>(1, std::min(config.workers, cells.size()));
    if (workers == 1) {
      for (size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
      std::atomic<size_t> next{0};
      std::vector<std::jthread> pool;
      for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (size_t i = next++; i < cells.size(); i = next++) run_cell(i);
        });
      }
    }
    for (size_t i = 0; i < rows.size(); ++i) {
      if (options.log && !rows[i].ok) {
        *options.log << absl::StrFormat("  %s eps=%g failed: %s\n",
                                        rows[i].mechanism, rows[i].epsilon,
                                        rows[i].error);
      }
      if (models[i]) {
        const std::string path =
            (fs::path(options.models_dir) /
             absl::StrFormat("%s_eps%g_seed%d.json", rows[i].mechanism,
                             rows[i].epsilon, seed))
                .string();
        std::ofstream out(path);
        out << PrivateModelToJson(*models[i]).dump() << "\n";
        if (!out) {
          return absl::PermissionDeniedError(
              absl::StrFormat("cannot write %s", path));
        }
      }
      result.rows.push_back(std::move(rows[i]));
    }
  }
  result.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return result;
}

std::string ResultsCsv(const SweepResult& result) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const SweepRow& row : result.rows) {
    const MetricRow& m = row.metrics;
    std::vector<std::string> cells = {
        row.dataset,
        row.arch,
        row.mechanism,
        FormatDouble(row.epsilon),
        absl::StrFormat("%d", row.seed),
        FormatDouble(m.acc_nonprivate)};
    if (row.ok) {
      cells.push_back(FormatDouble(m.acc_private));
      cells.push_back(FormatDouble(m.utility_loss));
      cells.push_back(FormatDouble(m.tpr));
      cells.push_back(FormatDouble(m.fpr));
      cells.push_back(FormatDouble(m.privacy_leakage));
      cells.push_back(absl::StrFormat("%d", m.true_revealed));
    } else {
      cells.insert(cells.end(), 6, "");
    }
    cells.push_back(absl::StrFormat("%d", m.n_members));
    cells.push_back(row.ok ? "ok" : "failed");
    out += absl::StrJoin(cells, ",") + "\n";
  }
  return out;
}

absl::Status WriteResults(const SweepResult& result, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return absl::PermissionDeniedError(
        absl::StrFormat("cannot create %s: %s", dir, ec.message()));
  }
  {
    std::ofstream out(fs::path(dir) / kResultsFile, std::ios::binary);
    out << ResultsCsv(result);
    if (!out) {
      return absl::PermissionDeniedError(
          absl::StrFormat("cannot write %s/%s", dir, kResultsFile));
    }
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const SweepRow& row : result.rows) {
    if (row.ok) continue;
    failures.push_back({{"mechanism", row.mechanism},
                        {"epsilon", row.epsilon},
                        {"seed", row.seed},
                        {"error", row.error}});
  }
  std::ofstream meta(fs::path(dir) / kRunMetadataFile);
  meta << nlohmann::json{{"wall_seconds", result.wall_seconds},
                         {"generator", result.generator},
                         {"version", result.version},
                         {"rows", result.rows.size()},
                         {"failures", failures}}
              .dump(2)
       << "\n";
  if (!meta) {
    return absl::PermissionDeniedError(
        absl::StrFormat("cannot write %s/%s", dir, kRunMetadataFile));
  }
  return absl::OkStatus();
}

absl::StatusOr<SweepResult> ParseResultsCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "results format error: header does not match dputil results v1 "
        "(expected '%s')",
        kResultsHeader));
  }
  SweepResult result;
  size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<std::string> cells = absl::StrSplit(line, ',');
    auto bad = [&](const char* what) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "malformed results CSV line %d: %s", line_number, what));
    };
    if (cells.size() != 14) return bad("expected 14 fields");
    SweepRow row;
    row.dataset = cells[0];
    row.arch = cells[1];
    row.mechanism = cells[2];
    MetricRow& m = row.metrics;
    if (!absl::SimpleAtod(cells[3], &row.epsilon)) return bad("epsilon");
    if (!absl::SimpleAtoi(cells[4], &row.seed)) return bad("seed");
    if (!absl::SimpleAtod(cells[5], &m.acc_nonprivate)) {
      return bad("acc_nonprivate");
    }
    if (!absl::SimpleAtoi(cells[12], &m.n_members)) return bad("n_members");
    if (cells[13] == "ok") {
      row.ok = true;
      if (!absl::SimpleAtod(cells[6], &m.acc_private) ||
          !absl::SimpleAtod(cells[7], &m.utility_loss) ||
          !absl::SimpleAtod(cells[8], &m.tpr) ||
          !absl::SimpleAtod(cells[9], &m.fpr) ||
          !absl::SimpleAtod(cells[10], &m.privacy_leakage) ||
          !absl::SimpleAtoi(cells[11], &m.true_revealed)) {
        return bad("metric field");
      }
    } else if (cells[13] == "failed") {
      for (size_t c = 6; c <= 11; ++c) {
        if (!cells[c].empty()) return bad("failed row with metric values");
      }
    } else {
      return bad("status must be ok or failed");
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

absl::StatusOr<SweepResult> ReadResults(const std::string& dir) {
  const fs::path path = fs::path(dir) / kResultsFile;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        absl::StrFormat("no results file at %s", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  ASSIGN_OR_RETURN(SweepResult result, ParseResultsCsv(buffer.str()));
  std::ifstream meta(fs::path(dir) / kRunMetadataFile);
  if (meta) {
    try {
      const auto j = nlohmann::json::parse(meta);
      result.wall_seconds = j.value("wall_seconds", 0.0);
      result.generator = j.value("generator", result.generator);
      result.version = j.value("version", result.version);
      const auto failures = j.value("failures", nlohmann::json::array());
      for (const auto& f : failures) {
        for (SweepRow& row : result.rows) {
          if (!row.ok && row.mechanism == f.value("mechanism", "") &&
              row.epsilon == f.value("epsilon", 0.0) &&
              row.seed == f.value("seed", uint64_t{0})) {
            row.error = f.value("error", "");
          }
        }
      }
    } catch (const nlohmann::json::exception& e) {
      return absl::InvalidArgumentError(
          absl::StrFormat("%s: %s", kRunMetadataFile, e.what()));
    }
  }
  return result;
}

}  // namespace dputil
