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


// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "absl/strings/str_format.h"
#include "dputil/attack.h"
#include "dputil/dataset.h"
#include "dputil/harness.h"
#include "dputil/learners.h"
#include "dputil/mechanisms.h"
#include "dputil/metrics.h"
#include "dputil/numkit.h"

namespace dputil {
namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

template <typename T>
T Must(absl::StatusOr<T> v, const char* what) {
  if (!v.ok()) {
    std::fprintf(stderr, "%s: %s\n", what, v.status().ToString().c_str());
    std::exit(2);
  }
  return *std::move(v);
}

double SampleVariance(const Vector& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (v.size() - 1);
}

double Ks(Vector sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

// Smallest |pre-activation| over the MLP's hidden units, computed from the
// documented layout: per layer W (out x in, row-major) then b (out).
double MinHiddenMargin(const Model& model, const Matrix& x) {
  std::vector<size_t> widths = {model.arch.input_dim};
  widths.insert(widths.end(), model.arch.hidden.begin(),
                model.arch.hidden.end());
  double margin = 1e300;
  for (size_t r = 0; r < x.rows(); ++r) {
    Vector a(x.row(r).begin(), x.row(r).end());
    size_t offset = 0;
    for (size_t l = 1; l < widths.size(); ++l) {
      const size_t in = widths[l - 1], out = widths[l];
      Vector z(out);
      for (size_t o = 0; o < out; ++o) {
        double s = model.params[offset + in * out + o];
        for (size_t i = 0; i < in; ++i) {
          s += model.params[offset + o * in + i] * a[i];
        }
        margin = std::min(margin, std::abs(s));
        z[o] = std::max(0.0, s);
      }
      offset += in * out + out;
      a = z;
    }
  }
  return margin;
}

// Objective from forward predictions only: mean cross-entropy plus
// (lambda/2) * ||weights||^2.
double ForwardLoss(const Model& model, const Dataset& data, double lambda,
                   const Vector& mask) {
  const Matrix proba = Must(PredictProba(model, data.features), "forward");
  double loss = 0.0;
  for (size_t r = 0; r < data.size(); ++r) {
    loss -= std::log(proba(r, data.labels[r]));
  }
  loss /= static_cast<double>(data.size());
  for (size_t i = 0; i < mask.size(); ++i) {
    loss += 0.5 * lambda * mask[i] * model.params[i] * model.params[i];
  }
  return loss;
}

// Average ranks, ties share their mean rank.
Vector Ranks(const Vector& v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return v[a] < v[b]; });
  Vector ranks(v.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = 0.5 * (i + j) + 1.0;
    i = j + 1;
  }
  return ranks;
}

double Pearson(const Vector& a, const Vector& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// The separable synthetic dataset used by the limit checks and the sweep.
SyntheticSpec Separable() { return {2000, 10, 2, 4.0, 7}; }

Verdict MetricFormulas() {
  const double loss = Must(UtilityLoss(0.528, 0.661), "utility loss");
  AttackOutcome o;
  o.tp = 62;
  o.fn = 38;
  o.fp = 50;
  o.tn = 50;
  const double leak = Must(PrivacyLeakage(o), "leakage");
  // 62/100 - 50/100 evaluated the same way the formula does.
  const double expected = 62.0 / 100.0 - 50.0 / 100.0;
  return {std::abs(loss - 0.201) <= 0.001 && leak == expected &&
              std::abs(leak - 0.12) < 1e-15,
          absl::StrFormat("utility_loss=%.6f privacy_leakage=%.17g", loss,
                          leak)};
}

Verdict NoiseArithmetic() {
  const double output = OutputNoiseScale(25000, 1e-4, 1.0);
  const double objective = ObjectiveNoiseScale(5000, 0.1);
  const double sigma = DpSgdSigma(0.01, 10000, 1e-5, 1.0, 1.0);
  const double sigma_ref = 1.0 * 0.01 * std::sqrt(10000.0 * std::log(1e5));
  const bool pass = std::abs(output - 2.0 / (25000 * 1e-4 * 1.0)) <= 1e-9 &&
                    std::abs(output - 0.8) <= 1e-9 &&
                    std::abs(objective - 2.0 / (5000 * 0.1)) <= 1e-9 &&
                    std::abs(objective - 0.004) <= 1e-9 &&
                    std::abs(sigma - sigma_ref) <= 1e-9 &&
                    std::abs(sigma - 3.393) < 5e-4;
  return {pass, absl::StrFormat("output=%.12g objective=%.12g sigma=%.12g",
                                output, objective, sigma)};
}

Verdict SamplerFidelity() {
  Rng rng(20260101);
  const Vector lap = Must(SampleLaplace(rng, 1.0, 1000000), "laplace");
  const Vector gauss = Must(SampleGaussian(rng, 2.0, 1000000), "gaussian");
  const double vl = SampleVariance(lap);
  const double vg = SampleVariance(gauss);
  const double kl = Ks(lap, [](double x) {
    return x < 0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
  });
  const double kg = Ks(gauss, [](double x) {
    return 0.5 * std::erfc(-x / (2.0 * std::sqrt(2.0)));
  });
  const bool pass = std::abs(vl - 2.0) <= 0.04 && std::abs(vg - 4.0) <= 0.08 &&
                    kl < 0.01 && kg < 0.01;
  return {pass, absl::StrFormat("laplace var=%.4f ks=%.5f; gaussian var=%.4f "
                                "ks=%.5f",
                                vl, kl, vg, kg)};
}

Verdict GradientCorrectness() {
  Rng rng(4);
  double worst = 0.0;
  size_t redrawn = 0;
  const Dataset data = Must(Synthesize({24, 6, 3, 2.0, 1}), "data");
  for (const ModelArch& arch :
       {ModelArch::Logistic(6, 3), ModelArch::Mlp(6, 3)}) {
    const Vector mask = RegularizationMask(arch);
    for (int point = 0; point < 20; ++point) {
      Model model = InitialModel(arch, 0);
      const double spread = arch.kind == ArchKind::kLogistic ? 1.0 : 0.3;
      for (double& p : model.params) p = spread * (2 * rng.NextDouble() - 1);
      // Finite differences are only valid away from ReLU kinks.
      if (arch.kind == ArchKind::kMlp &&
          MinHiddenMargin(model, data.features) < 1e-4) {
        ++redrawn;
        --point;
        continue;
      }
      const Vector grad =
          Must(ComputeLossAndGrad(model, data.features, data.labels, 1e-2),
               "grad")
              .grad;
      double diff = 0.0, na = 0.0, nf = 0.0;
      for (size_t i = 0; i < grad.size(); ++i) {
        const double saved = model.params[i];
        model.params[i] = saved + 1e-6;
        const double up = ForwardLoss(model, data, 1e-2, mask);
        model.params[i] = saved - 1e-6;
        const double down = ForwardLoss(model, data, 1e-2, mask);
        model.params[i] = saved;
        const double fd = (up - down) / 2e-6;
        diff += (fd - grad[i]) * (fd - grad[i]);
        na += grad[i] * grad[i];
        nf += fd * fd;
      }
      worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(na),
                                                         std::sqrt(nf)));
    }
  }
  return {worst <= 1e-5,
          absl::StrFormat("worst relative error %.3g over 40 points (%d MLP "
                          "draws within 1e-4 of a ReLU kink redrawn)",
                          worst, redrawn)};
}

Verdict VanishingNoise() {
  const Dataset data = Must(Synthesize(Separable()), "data");
  const SplitPlan split = Must(MakeSplit(data, 0), "split");
  const Dataset train = data.Subset(split.target_train);
  const Dataset test = data.Subset(split.target_test);
  const ModelArch arch = ModelArch::Logistic(10, 2);
  const TrainConfig config;
  const double base = Must(Evaluate(Must(Train(arch, train, config), "base"),
                                    test),
                           "eval");
  const double delta = PrivacyBudget::DefaultDelta(train.size());
  bool pass = true;
  std::string detail = absl::StrFormat("baseline=%.4f", base);
  for (MechanismKind kind : kAllMechanisms) {
    MechanismSpec spec;
    spec.kind = kind;
    // The default delta makes input perturbation infeasible at this n
    // (needs n > 16/delta); use the largest feasible round value instead.
    spec.budget = {1e6, kind == MechanismKind::kInput ? 0.1 : delta};
    auto model = TrainPrivate(arch, train, spec, config, 11);
    if (!model.ok()) {
      pass = false;
      detail += absl::StrFormat(" %s=error(%s)", MechanismName(kind),
                                std::string(model.status().message()));
      continue;
    }
    Rng rng(12);
    const double acc = Must(EvaluatePrivate(*model, test, rng), "eval");
    pass = pass && std::abs(acc - base) <= 0.02;
    detail += absl::StrFormat(" %s=%.4f", MechanismName(kind), acc);
  }
  return {pass, detail};
}

Verdict CrushingNoise() {
  const Dataset data = Must(Synthesize(Separable()), "data");
  constexpr int kSeeds = 10;
  double total = 0.0;
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const SplitPlan split = Must(MakeSplit(data, seed), "split");
    MechanismSpec spec;
    spec.kind = MechanismKind::kOutput;
    spec.budget = {1e-2, 0};
    auto model = Must(OutputPerturb(data.Subset(split.target_train), spec,
                                    TrainConfig{}, seed),
                      "output");
    Rng rng(seed);
    total += Must(EvaluatePrivate(model, data.Subset(split.target_test), rng),
                  "eval");
  }
  const double mean = total / kSeeds;
  return {std::abs(mean - 0.5) <= 0.1,
          absl::StrFormat("seed-mean accuracy %.4f over %d seeds (chance 0.5)",
                          mean, kSeeds)};
}

Verdict ClippingInvariant() {
  const Dataset data = Must(Synthesize(Separable()), "data");
  const SplitPlan split = Must(MakeSplit(data, 0), "split");
  const Dataset train = data.Subset(split.target_train);
  size_t recorded = 0, violations = 0;
  double max_norm = 0.0;
  MechanismSpec spec;
  spec.kind = MechanismKind::kGradient;
  spec.budget = {1.0, PrivacyBudget::DefaultDelta(train.size())};
  spec.clip_norm = 1.0;
  TrainConfig config;
  config.batch_size = 50;
  for (const ModelArch& arch :
       {ModelArch::Logistic(10, 2), ModelArch::Mlp(10, 2)}) {
    Must(GradientPerturbDpSgd(arch, train, spec, config, 3,
                              [&](const Matrix& clipped, size_t) {
                                for (size_t r = 0; r < clipped.rows(); ++r) {
                                  const double norm = L2Norm(clipped.row(r));
                                  max_norm = std::max(max_norm, norm);
                                  violations += norm > 1.0 + 1e-12;
                                  ++recorded;
                                }
                              }),
         "dpsgd");
  }
  return {violations == 0 && recorded == 2 * 100 * train.size(),
          absl::StrFormat("%d gradients recorded, %d above C, max norm %.15f",
                          recorded, violations, max_norm)};
}

Verdict PateOracle() {
  const Dataset data = Must(Synthesize({1200, 6, 3, 2.0, 3}), "data");
  const SplitPlan split = Must(MakeSplit(data, 0), "split");
  const Dataset train = data.Subset(split.target_train);
  MechanismSpec spec;
  spec.kind = MechanismKind::kPrediction;
  spec.noise_enabled = false;
  spec.teachers = 10;
  TrainConfig config;
  config.epochs = 20;
  auto model = Must(PredictionPerturb(ModelArch::Logistic(6, 3), train, spec,
                                      config, 5),
                    "pate");
  std::vector<size_t> queries(100);
  std::iota(queries.begin(), queries.end(), 0);
  const Matrix x = data.Subset(split.shadow_pool).features.SelectRows(queries);
  Rng rng(0);
  const Matrix proba = Must(model.PredictProba(x, rng), "predict");
  size_t agree = 0, ties = 0;
  for (size_t q = 0; q < x.rows(); ++q) {
    std::vector<int> votes(3, 0);
    for (const Model& teacher : model.ensemble().teachers) {
      const Matrix p = Must(
          PredictProba(teacher, x.SelectRows(std::vector<size_t>{q})), "t");
      int best = 0;
      for (int k = 1; k < 3; ++k) {
        if (p(0, k) > p(0, best)) best = k;
      }
      votes[best]++;
    }
    int majority = 0;
    for (int k = 1; k < 3; ++k) {
      if (votes[k] > votes[majority]) majority = k;
    }
    ties += std::count(votes.begin(), votes.end(), votes[majority]) > 1;
    agree += ArgMax(proba.row(q)) == static_cast<size_t>(majority);
  }
  Rng tie_rng(1);
  const NoisyVote tie = NoisyAggregate(Vector{10, 10}, 1.0, tie_rng, false);
  const NoisyVote tie3 = NoisyAggregate(Vector{2, 4, 4}, 1.0, tie_rng, false);
  return {agree == 100 && tie.label == 0 && tie3.label == 1,
          absl::StrFormat("%d/100 agree (%d natural ties); (10,10)->%d "
                          "(2,4,4)->%d",
                          agree, ties, tie.label, tie3.label)};
}

Verdict AttackSanity() {
  // Part 1: overfit non-private MLP on 50 training records.
  ExperimentConfig config;
  config.dataset = SyntheticSpec{200, 20, 2, 1.0, 5};
  config.arch = ArchKind::kMlp;
  config.train.epochs = 300;
  config.train.batch_size = 10;
  config.mechanisms = {MechanismSpec{}};
  config.seeds = {0};
  const Dataset data = Must(LoadDataset(config), "data");
  const SeedContext ctx = Must(PrepareSeed(config, data, 0), "seed");
  const Model target = Must(Train(ctx.arch, ctx.target_train, ctx.train),
                            "target");
  const double train_acc = Must(Evaluate(target, ctx.target_train), "acc");
  PredictionApi api = [&target](const Matrix& x) {
    return PredictProba(target, x);
  };
  const AttackOutcome outcome =
      Must(EvaluateAttack(ctx.forest, api, ctx.target_train, ctx.target_test),
           "attack");
  const double leakage = Must(PrivacyLeakage(outcome), "leakage");

  // Part 2: a forest fit on label-permuted records, scored on a large
  // held-out record set from disjoint shadows.
  const Dataset big = Must(Synthesize({4000, 20, 2, 1.0, 6}), "big");
  std::vector<size_t> first(2000), second(2000);
  std::iota(first.begin(), first.end(), 0);
  std::iota(second.begin(), second.end(), 2000);
  TrainConfig shadow_config;
  shadow_config.epochs = 100;
  shadow_config.batch_size = 25;
  const ModelArch arch = ModelArch::Mlp(20, 2);
  AttackSet fit_set = Must(
      BuildAttackSet(Must(TrainShadows(big, first, arch, shadow_config, 5, 1),
                          "shadows"),
                     big, 2),
      "records");
  const AttackSet held_out = Must(
      BuildAttackSet(Must(TrainShadows(big, second, arch, shadow_config, 5, 3),
                          "shadows"),
                     big, 4),
      "records");
  std::vector<size_t> perm(fit_set.labels.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng perm_rng(7);
  Shuffle(perm, perm_rng);
  std::vector<int> permuted(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) {
    permuted[i] = fit_set.labels[perm[i]];
  }
  fit_set.labels = permuted;
  const ForestClassifier permuted_forest =
      Must(ForestClassifier::Fit(fit_set, ForestParams{}, 8), "forest");
  const double permuted_acc = permuted_forest.Accuracy(held_out);
  return {leakage > 0.1 && std::abs(permuted_acc - 0.5) <= 0.05,
          absl::StrFormat("overfit MLP train acc %.3f leakage %.3f (tpr %.2f "
                          "fpr %.2f); permuted-label held-out accuracy %.4f "
                          "on %d records",
                          train_acc, leakage,
                          static_cast<double>(outcome.tp) / 50.0,
                          static_cast<double>(outcome.fp) / 50.0, permuted_acc,
                          held_out.labels.size())};
}

ExperimentConfig SweepConfig() {
  ExperimentConfig config;
  config.dataset = Separable();
  config.arch = ArchKind::kLogistic;
  for (MechanismKind kind : kAllMechanisms) {
    MechanismSpec spec;
    spec.kind = kind;
    config.mechanisms.push_back(spec);
  }
  config.seeds = {0, 1, 2, 3, 4};
  return config;
}

Verdict QualitativeOrdering(const SweepResult& result) {
  std::map<std::string, std::map<double, std::pair<double, int>>> sums;
  for (const SweepRow& row : result.rows) {
    if (!row.ok) continue;
    auto& s = sums[row.mechanism][row.epsilon];
    s.first += row.metrics.utility_loss;
    s.second += 1;
  }
  auto mean = [&](const std::string& m, double eps) {
    const auto& s = sums[m][eps];
    return s.first / s.second;
  };
  bool pass = sums.count("prediction") > 0;
  std::string detail;
  for (double eps : {1.0, 10.0, 100.0}) {
    const double pred = mean("prediction", eps);
    std::string best_other;
    double best = 1e300;
    for (const auto& [mech, by_eps] : sums) {
      if (mech == "prediction" || !by_eps.count(eps)) continue;
      if (mean(mech, eps) < best) {
        best = mean(mech, eps);
        best_other = mech;
      }
    }
    pass = pass && pred <= best;
    detail += absl::StrFormat("eps=%g prediction %.4f vs min other %.4f (%s); ",
                              eps, pred, best, best_other);
  }
  double worst = -1e300;
  for (const auto& [eps, s] : sums["prediction"]) {
    if (eps >= 1.0) worst = std::max(worst, s.first / s.second);
  }
  pass = pass && worst < 0.05;
  detail += absl::StrFormat("max prediction loss for eps>=1 %.4f", worst);
  return {pass, detail};
}

Verdict LeakageLinkage(const SweepResult& result) {
  Vector leakage, revealed;
  for (const SweepRow& row : result.rows) {
    if (row.ok && row.metrics.privacy_leakage > 0) {
      leakage.push_back(row.metrics.privacy_leakage);
      revealed.push_back(static_cast<double>(row.metrics.true_revealed));
    }
  }
  if (leakage.size() < 3) {
    return {false, absl::StrFormat("only %d rows with positive leakage",
                                   leakage.size())};
  }
  const double rho = Pearson(Ranks(leakage), Ranks(revealed));
  const double max_leak = *std::max_element(leakage.begin(), leakage.end());
  return {rho >= 0.7,
          absl::StrFormat("Spearman %.3f over %d rows (max leakage %.3f)", rho,
                          leakage.size(), max_leak)};
}

}  // namespace
}  // namespace dputil

int main() {
  using namespace dputil;
  struct Timed {
    Verdict verdict;
    double seconds;
  };
  auto run = [](const std::function<Verdict()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v = f();
    return Timed{v, std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count()};
  };
  std::vector<std::pair<int, Timed>> results;
  auto report = [&](int id, const char* name, const Timed& t) {
    std::printf("CRITERION %2d %-28s %s  (%.1fs) %s\n", id, name,
                t.verdict.pass ? "PASS" : "FAIL", t.seconds,
                t.verdict.detail.c_str());
    std::fflush(stdout);
    results.emplace_back(id, t);
  };
  report(1, "metric formulas", run(MetricFormulas));
  report(2, "noise-scale arithmetic", run(NoiseArithmetic));
  report(3, "sampler fidelity", run(SamplerFidelity));
  report(4, "gradient correctness", run(GradientCorrectness));
  report(5, "vanishing-noise limit", run(VanishingNoise));
  report(6, "crushing-noise limit", run(CrushingNoise));
  report(7, "clipping invariant", run(ClippingInvariant));
  report(8, "PATE oracle equivalence", run(PateOracle));
  report(9, "attack sanity", run(AttackSanity));

  const ExperimentConfig config = SweepConfig();
  SweepResult first, second;
  const Timed sweep = run([&] {
    first = Must(RunSweep(config), "sweep");
    return Verdict{true, ""};
  });
  Timed ordering = run([&] { return QualitativeOrdering(first); });
  ordering.seconds += sweep.seconds;
  report(10, "qualitative ordering", ordering);
  report(11, "leakage/true-revealed link", run([&] {
           return LeakageLinkage(first);
         }));
  report(12, "end-to-end determinism", run([&] {
           second = Must(RunSweep(config), "sweep");
           const bool same = ResultsCsv(first) == ResultsCsv(second);
           return Verdict{same, absl::StrFormat(
                                    "%d rows, results CSV %s", first.rows.size(),
                                    same ? "byte-identical" : "differs")};
         }));

  size_t failed = 0;
  for (const auto& [id, t] : results) failed += !t.verdict.pass;
  std::printf("%zu/%zu criteria passed\n", results.size() - failed,
              results.size());
  return failed == 0 ? 0 : 1;
}
