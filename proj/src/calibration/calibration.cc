// Copyright 2026 The structprompt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "structprompt/calibration.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

#include "structprompt/error.h"
#include "structprompt/metrics.h"

namespace structprompt {

namespace {

std::string KindName(CalibratorKind kind) {
  return kind == CalibratorKind::kIdentity ? "identity" : "affine_softmax";
}

void Softmax(std::vector<double> &z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0;
  for (double &v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double &v : z) v /= sum;
}

std::uint64_t Mix(std::uint64_t seed, const std::string &label) {
  return seed ^ (std::hash<std::string>{}(label) + 0x9e3779b97f4a7c15ULL +
                 (seed << 6) + (seed >> 2));
}

std::vector<int> GoldLabels(const StructuredProblem &p) {
  if (!p.gold()) {
    throw Error(ErrorCode::kNoGold,
                "problem without gold labels in calibration data");
  }
  return p.LabelsFromAssignment(*p.gold());
}

struct Example {
  const std::vector<double> *w;
  int gold;
};

using ExampleMap = std::map<CalibratorKey, std::vector<Example>>;

ExampleMap CollectExamples(const std::vector<StructuredProblem> &problems,
                           std::vector<std::vector<int>> &gold_storage) {
  ExampleMap out;
  gold_storage.clear();
  gold_storage.reserve(problems.size());
  for (const auto &p : problems) gold_storage.push_back(GoldLabels(p));
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const auto &p = problems[i];
    for (const auto &t : p.tables()) {
      const int j = *p.DecisionIndex(t.decision);
      out[{t.decision.subproblem, t.strategy}].push_back(
          {&t.scores, gold_storage[i][j]});
    }
  }
  return out;
}

double ExampleLoss(const Calibrator &c, const Example &e) {
  const auto s = c.Apply(*e.w);
  return -std::log(std::max(s[e.gold], 1e-300));
}

double MeanLoss(const Calibrator &c, const std::vector<Example> &examples) {
  if (examples.empty()) return 0.0;
  double sum = 0;
  for (const auto &e : examples) sum += ExampleLoss(c, e);
  return sum / static_cast<double>(examples.size());
}

// dL/dz for output s and upstream gradient g through softmax.
std::vector<double> SoftmaxBackward(const std::vector<double> &s,
                                    const std::vector<double> &g) {
  double dot = 0;
  for (std::size_t k = 0; k < s.size(); ++k) dot += s[k] * g[k];
  std::vector<double> dz(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) dz[k] = s[k] * (g[k] - dot);
  return dz;
}

void AccumulateAffine(const std::vector<double> &dz,
                      const std::vector<double> &w, CalibratorGrad &g) {
  const std::size_t n = dz.size();
  if (g.weights.empty()) {
    g.weights.assign(n * n, 0.0);
    g.bias.assign(n, 0.0);
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) g.weights[r * n + c] += dz[r] * w[c];
    g.bias[r] += dz[r];
  }
}

void Step(Calibrator &c, const CalibratorGrad &g, double scale) {
  if (g.weights.empty()) return;
  for (std::size_t i = 0; i < c.weights.size(); ++i) {
    c.weights[i] -= scale * g.weights[i];
  }
  for (std::size_t i = 0; i < c.bias.size(); ++i) c.bias[i] -= scale * g.bias[i];
}

bool Finite(const Calibrator &c) {
  for (double v : c.weights) {
    if (!std::isfinite(v)) return false;
  }
  for (double v : c.bias) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

class EpochLog {
 public:
  EpochLog(const std::filesystem::path &path, TrainStats *stats)
      : stats_(stats) {
    if (!path.empty()) {
      out_.open(path, std::ios::app);
      if (!out_) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
    }
  }
  void Write(const json &line) {
    if (out_.is_open()) out_ << line.dump() << '\n';
    if (stats_ != nullptr) stats_->log.push_back(line);
  }

 private:
  std::ofstream out_;
  TrainStats *stats_;
};

// Constrained micro-F1 pooled over every decision.
double DevF1(const std::vector<StructuredProblem> &dev,
             const CalibratorSet &cals, const SolveLimits &limits) {
  LabelTally tally;
  for (const auto &p : dev) {
    auto cp = cals.Apply(p);
    Assignment a;
    try {
      a = SolveMap(cp, limits).assignment;
    } catch (const Error &) {
      a = LocalArgmax(cp);
    }
    tally.Add(cp, a);
  }
  return tally.F1("", Averaging::kMicro);
}

}  // namespace

Calibrator Calibrator::Identity(std::string subproblem, std::string strategy,
                                int dim) {
  return Calibrator{std::move(subproblem), std::move(strategy),
                    CalibratorKind::kIdentity, dim, {}, {}};
}

Calibrator Calibrator::Affine(std::string subproblem, std::string strategy,
                              int dim) {
  if (dim < 1) throw Error(ErrorCode::kDimMismatch, "calibrator dim < 1");
  Calibrator c{std::move(subproblem), std::move(strategy),
               CalibratorKind::kAffineSoftmax, dim,
               std::vector<double>(static_cast<std::size_t>(dim) * dim, 0.0),
               std::vector<double>(dim, 0.0)};
  for (int k = 0; k < dim; ++k) c.weights[k * dim + k] = 1.0;
  return c;
}

std::vector<double> Calibrator::Apply(const std::vector<double> &w) const {
  if (static_cast<int>(w.size()) != dim) {
    throw Error(ErrorCode::kDimMismatch,
                "calibrator " + subproblem + "/" + strategy + " expects " +
                    std::to_string(dim) + " scores, got " +
                    std::to_string(w.size()));
  }
  if (kind == CalibratorKind::kIdentity) return w;
  std::vector<double> z(bias);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) z[r] += weights[r * dim + c] * w[c];
  }
  Softmax(z);
  return z;
}

void to_json(json &j, const Calibrator &c) {
  j = json{{"subproblem", c.subproblem},
           {"strategy", c.strategy},
           {"kind", KindName(c.kind)},
           {"dim", c.dim}};
  if (c.kind == CalibratorKind::kAffineSoftmax) {
    j["weights"] = c.weights;
    j["bias"] = c.bias;
  }
}

void from_json(const json &j, Calibrator &c) {
  c.subproblem = j.at("subproblem").get<std::string>();
  c.strategy = j.at("strategy").get<std::string>();
  c.dim = j.at("dim").get<int>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "identity") {
    c.kind = CalibratorKind::kIdentity;
    c.weights.clear();
    c.bias.clear();
    return;
  }
  if (kind != "affine_softmax") {
    throw Error(ErrorCode::kSchemaError, "unknown calibrator kind " + kind);
  }
  c.kind = CalibratorKind::kAffineSoftmax;
  c.weights = j.at("weights").get<std::vector<double>>();
  c.bias = j.at("bias").get<std::vector<double>>();
  if (c.weights.size() != static_cast<std::size_t>(c.dim) * c.dim ||
      c.bias.size() != static_cast<std::size_t>(c.dim)) {
    throw Error(ErrorCode::kDimMismatch, "calibrator parameter sizes");
  }
}

void CalibratorSet::Put(Calibrator c) {
  CalibratorKey key{c.subproblem, c.strategy};
  items_[std::move(key)] = std::move(c);
}

const Calibrator *CalibratorSet::Find(const std::string &subproblem,
                                      const std::string &strategy) const {
  auto it = items_.find({subproblem, strategy});
  return it == items_.end() ? nullptr : &it->second;
}

ScoreTable CalibratorSet::Calibrate(const ScoreTable &table) const {
  const Calibrator *c = Find(table.decision.subproblem, table.strategy);
  if (c == nullptr) return table;
  ScoreTable out = table;
  out.scores = c->Apply(table.scores);
  return out;
}

StructuredProblem CalibratorSet::Apply(const StructuredProblem &problem) const {
  if (items_.empty()) return problem;
  std::vector<ScoreTable> tables;
  tables.reserve(problem.tables().size());
  for (const auto &t : problem.tables()) tables.push_back(Calibrate(t));
  return problem.WithTables(std::move(tables));
}

json CalibratorSet::ToJson() const {
  json arr = json::array();
  for (const auto &[key, c] : items_) arr.push_back(c);
  return json{{"calibrators", arr}};
}

CalibratorSet CalibratorSet::FromJson(const json &j) {
  CalibratorSet set;
  try {
    for (const auto &c : j.at("calibrators")) set.Put(c.get<Calibrator>());
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kSchemaError,
                std::string("calibrator file: ") + e.what());
  }
  return set;
}

CalibratorSet AffineCalibratorsFor(
    const std::vector<StructuredProblem> &problems) {
  CalibratorSet set;
  for (const auto &p : problems) {
    for (const auto &t : p.tables()) {
      const int dim = static_cast<int>(t.scores.size());
      if (const Calibrator *c = set.Find(t.decision.subproblem, t.strategy)) {
        if (c->dim != dim) {
          throw Error(ErrorCode::kDimMismatch,
                      "subproblem " + t.decision.subproblem +
                          " has tables of sizes " + std::to_string(c->dim) +
                          " and " + std::to_string(dim));
        }
        continue;
      }
      set.Put(Calibrator::Affine(t.decision.subproblem, t.strategy, dim));
    }
  }
  return set;
}

void to_json(json &j, const TrainConfig &c) {
  j = json{{"objective", c.objective == Objective::kLocalCrossEntropy
                             ? "local_ce"
                             : "global_hinge"},
           {"learning_rate", c.learning_rate},
           {"epochs", c.epochs},
           {"seed", c.seed},
           {"patience", c.patience},
           {"hamming_cost", c.hamming_cost},
           {"max_nodes", c.solve_limits.max_nodes},
           {"time_limit_ms", c.solve_limits.time_limit.count()}};
  j["batch_size"] = c.document_batches ? json("document") : json(c.batch_size);
  if (!c.log_path.empty()) j["log_path"] = c.log_path.string();
}

void from_json(const json &j, TrainConfig &c) {
  c = TrainConfig{};
  const auto objective = j.value("objective", std::string("local_ce"));
  if (objective == "local_ce") {
    c.objective = Objective::kLocalCrossEntropy;
  } else if (objective == "global_hinge") {
    c.objective = Objective::kGlobalHinge;
  } else {
    throw Error(ErrorCode::kConfigError, "unknown objective " + objective);
  }
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (j.contains("batch_size")) {
    if (j["batch_size"].is_string()) {
      if (j["batch_size"] != "document") {
        throw Error(ErrorCode::kConfigError,
                    "batch_size must be an integer or \"document\"");
      }
      c.document_batches = true;
    } else {
      c.batch_size = j["batch_size"].get<int>();
    }
  }
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.patience = j.value("patience", c.patience);
  c.hamming_cost = j.value("hamming_cost", c.hamming_cost);
  c.solve_limits.max_nodes = j.value("max_nodes", c.solve_limits.max_nodes);
  c.solve_limits.time_limit = std::chrono::milliseconds(
      j.value("time_limit_ms", c.solve_limits.time_limit.count()));
  if (j.contains("log_path")) c.log_path = j["log_path"].get<std::string>();
  if (!(c.learning_rate > 0)) {
    throw Error(ErrorCode::kConfigError, "learning_rate must be positive");
  }
  if (c.batch_size < 1 || c.epochs < 0 || c.patience < 0) {
    throw Error(ErrorCode::kConfigError, "invalid batch_size/epochs/patience");
  }
}

double CrossEntropy(const std::vector<StructuredProblem> &problems,
                    const CalibratorSet &calibrators) {
  double sum = 0;
  long n = 0;
  for (const auto &p : problems) {
    const auto gold = GoldLabels(p);
    for (const auto &t : p.tables()) {
      const auto s = calibrators.Calibrate(t).scores;
      const int j = *p.DecisionIndex(t.decision);
      sum += -std::log(std::max(s[gold[j]], 1e-300));
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

CalibratorSet TrainLocal(const std::vector<StructuredProblem> &train,
                         const std::vector<StructuredProblem> &dev,
                         const TrainConfig &config, TrainStats *stats) {
  if (!(config.learning_rate > 0)) {
    throw Error(ErrorCode::kConfigError, "learning_rate must be positive");
  }
  std::vector<std::vector<int>> train_gold, dev_gold;
  ExampleMap train_ex = CollectExamples(train, train_gold);
  ExampleMap dev_ex = CollectExamples(dev, dev_gold);
  if (train_ex.empty()) {
    throw Error(ErrorCode::kNoGold, "no training tables");
  }
  CalibratorSet init = AffineCalibratorsFor(train);
  EpochLog log(config.log_path, stats);
  CalibratorSet result;
  if (stats != nullptr) *stats = TrainStats{};
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);

  for (const auto &[key, examples] : train_ex) {
    Calibrator c = *init.Find(key.first, key.second);
    auto dev_it = dev_ex.find(key);
    const auto &held = dev_it != dev_ex.end() && !dev_it->second.empty()
                           ? dev_it->second
                           : examples;
    std::mt19937_64 rng(Mix(config.seed, key.first + "/" + key.second));
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);

    Calibrator best = c;
    double best_loss = MeanLoss(c, held);
    int best_epoch = 0, stale = 0, epoch = 0;
    for (epoch = 1; epoch <= config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t end = std::min(order.size(), start + batch);
        CalibratorGrad g;
        for (std::size_t i = start; i < end; ++i) {
          const Example &e = examples[order[i]];
          auto dz = c.Apply(*e.w);
          dz[e.gold] -= 1.0;
          AccumulateAffine(dz, *e.w, g);
        }
        Step(c, g, config.learning_rate / static_cast<double>(end - start));
      }
      const double train_loss = MeanLoss(c, examples);
      const double dev_loss = MeanLoss(c, held);
      if (!std::isfinite(train_loss) || !Finite(c)) {
        throw Error(ErrorCode::kDiverged,
                    "local training of " + key.first + "/" + key.second +
                        " diverged at epoch " + std::to_string(epoch) +
                        " (seed " + std::to_string(config.seed) + ")");
      }
      log.Write({{"objective", "local_ce"},
                 {"subproblem", key.first},
                 {"strategy", key.second},
                 {"epoch", epoch},
                 {"train_loss", train_loss},
                 {"dev_loss", dev_loss}});
      if (dev_loss < best_loss - 1e-12) {
        best_loss = dev_loss;
        best = c;
        best_epoch = epoch;
        stale = 0;
      } else if (config.patience > 0 && ++stale >= config.patience) {
        break;
      }
    }
    if (stats != nullptr) {
      stats->epochs_run = std::max(stats->epochs_run, std::min(epoch, config.epochs));
      stats->best_epoch = std::max(stats->best_epoch, best_epoch);
      stats->best_dev += best_loss;
    }
    result.Put(std::move(best));
  }
  return result;
}

double HingeLoss(const StructuredProblem &problem,
                 const CalibratorSet &calibrators, const Assignment &predicted,
                 GradientSet *grad, double cost) {
  if (!problem.gold()) {
    throw Error(ErrorCode::kNoGold, "hinge loss needs a gold assignment");
  }
  if (!predicted.IsTotal() || predicted.size() != problem.num_variables()) {
    throw Error(ErrorCode::kPartialAssignment, "prediction is not total");
  }
  const Assignment &gold = *problem.gold();

  struct Piece {
    const Calibrator *cal;
    const std::vector<double> *w;
    std::vector<double> s;
    std::vector<double> diff;
  };
  std::vector<Piece> pieces;
  double loss = cost;
  for (const auto &t : problem.tables()) {
    const auto &info = problem.decisions()[*problem.DecisionIndex(t.decision)];
    const int strat = *problem.StrategyIndex(t.strategy);
    const Calibrator *cal =
        calibrators.Find(t.decision.subproblem, t.strategy);
    Piece piece{cal, &t.scores, cal ? cal->Apply(t.scores) : t.scores, {}};
    piece.diff.assign(piece.s.size(), 0.0);
    for (int k = 0; k < info.num_labels; ++k) {
      const int v = info.outcome_vars[k][strat];
      if (v < 0) continue;
      piece.diff[k] = static_cast<double>(predicted[v] - gold[v]);
      loss += piece.s[k] * piece.diff[k];
    }
    pieces.push_back(std::move(piece));
  }
  if (loss <= 0) return 0.0;
  if (grad != nullptr) {
    for (const auto &piece : pieces) {
      if (piece.cal == nullptr ||
          piece.cal->kind != CalibratorKind::kAffineSoftmax) {
        continue;
      }
      const auto dz = SoftmaxBackward(piece.s, piece.diff);
      AccumulateAffine(dz, *piece.w,
                       (*grad)[{piece.cal->subproblem, piece.cal->strategy}]);
    }
  }
  return loss;
}

CalibratorSet TrainGlobal(const std::vector<StructuredProblem> &train,
                          const std::vector<StructuredProblem> &dev,
                          const TrainConfig &config, CalibratorSet init,
                          TrainStats *stats) {
  if (!(config.learning_rate > 0)) {
    throw Error(ErrorCode::kConfigError, "learning_rate must be positive");
  }
  for (const auto &p : train) GoldLabels(p);
  for (const auto &p : dev) GoldLabels(p);

  CalibratorSet cals = std::move(init);
  const CalibratorSet fresh = AffineCalibratorsFor(train);
  for (const auto &[key, c] : fresh.all()) {
    if (cals.Find(key.first, key.second) == nullptr) cals.Put(c);
  }
  if (stats != nullptr) *stats = TrainStats{};
  EpochLog log(config.log_path, stats);
  const auto &held = dev.empty() ? train : dev;

  CalibratorSet best = cals;
  double best_f1 = DevF1(held, cals, config.solve_limits);
  int best_epoch = 0, stale = 0, skipped = 0, epoch = 0;
  log.Write({{"objective", "global_hinge"}, {"epoch", 0}, {"dev_f1", best_f1}});

  std::mt19937_64 rng(Mix(config.seed, "global"));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch =
      config.document_batches ? 1 : static_cast<std::size_t>(config.batch_size);

  for (epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      GradientSet g;
      for (std::size_t i = start; i < end; ++i) {
        const StructuredProblem &p = train[order[i]];
        StructuredProblem cp = cals.Apply(p);
        std::vector<int> gold_labels;
        if (config.hamming_cost) {
          gold_labels = GoldLabels(p);
          std::vector<double> w;
          for (const auto &v : cp.variables()) w.push_back(v.weight);
          for (std::size_t j = 0; j < cp.decisions().size(); ++j) {
            const auto &info = cp.decisions()[j];
            int scored = 0;
            for (int v : info.outcome_vars[0]) scored += v >= 0;
            for (int k = 0; k < info.num_labels; ++k) {
              if (k == gold_labels[j]) continue;
              for (int v : info.outcome_vars[k]) {
                if (v >= 0) w[v] += 1.0 / scored;
              }
            }
          }
          cp = cp.WithWeights(std::move(w));
        }
        SolveResult r;
        try {
          r = SolveMap(cp, config.solve_limits);
        } catch (const Error &e) {
          if (e.code() != ErrorCode::kBudgetExceeded &&
              e.code() != ErrorCode::kInfeasible) {
            throw;
          }
          ++skipped;
          continue;
        }
        if (!r.proven_optimal) {
          ++skipped;
          continue;
        }
        double cost = 0;
        if (config.hamming_cost) {
          const auto pred = p.LabelsFromAssignment(r.assignment);
          for (std::size_t j = 0; j < pred.size(); ++j) {
            cost += pred[j] != gold_labels[j];
          }
        }
        epoch_loss += HingeLoss(p, cals, r.assignment, &g, cost);
      }
      if (!std::isfinite(epoch_loss)) {
        throw Error(ErrorCode::kDiverged,
                    "global training diverged at epoch " +
                        std::to_string(epoch) + " (seed " +
                        std::to_string(config.seed) + ")");
      }
      const double scale =
          config.learning_rate / static_cast<double>(end - start);
      for (const auto &[key, grad] : g) {
        Calibrator c = *cals.Find(key.first, key.second);
        Step(c, grad, scale);
        if (!Finite(c)) {
          throw Error(ErrorCode::kDiverged,
                      "non-finite calibrator parameters (seed " +
                          std::to_string(config.seed) + ")");
        }
        cals.Put(std::move(c));
      }
    }
    const double f1 = DevF1(held, cals, config.solve_limits);
    log.Write({{"objective", "global_hinge"},
               {"epoch", epoch},
               {"train_loss", epoch_loss / std::max<std::size_t>(1, train.size())},
               {"dev_f1", f1},
               {"skipped_steps", skipped}});
    if (f1 > best_f1 + 1e-12) {
      best_f1 = f1;
      best = cals;
      best_epoch = epoch;
      stale = 0;
    } else if (config.patience > 0 && ++stale >= config.patience) {
      break;
    }
  }
  if (stats != nullptr) {
    stats->epochs_run = std::min(epoch, config.epochs);
    stats->best_epoch = best_epoch;
    stats->best_dev = best_f1;
    stats->skipped_steps = skipped;
  }
  return best;
}

void to_json(json &j, const CalibrationReport &r) {
  j = json{{"micro_f1_constrained", r.micro_f1_constrained},
           {"macro_f1_constrained", r.macro_f1_constrained},
           {"micro_f1_unconstrained", r.micro_f1_unconstrained},
           {"macro_f1_unconstrained", r.macro_f1_unconstrained},
           {"violations_constrained", r.violations_constrained},
           {"violations_unconstrained", r.violations_unconstrained},
           {"ece", r.ece},
           {"solver_failures", r.solver_failures}};
}

CalibrationReport EvaluateCalibration(
    const CalibratorSet &calibrators,
    const std::vector<StructuredProblem> &problems, const SolveLimits &limits) {
  CalibrationReport report;
  LabelTally constrained, unconstrained;
  std::vector<double> confidences;
  std::vector<bool> correct;
  for (const auto &p : problems) {
    const auto cp = calibrators.Apply(p);
    const auto gold = GoldLabels(cp);
    try {
      constrained.Add(cp, SolveMap(cp, limits).assignment);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kBudgetExceeded &&
          e.code() != ErrorCode::kInfeasible) {
        throw;
      }
      ++report.solver_failures;
    }
    unconstrained.Add(cp, LocalArgmax(cp));
    for (const auto &t : cp.tables()) {
      const auto top = std::max_element(t.scores.begin(), t.scores.end());
      confidences.push_back(*top);
      const int j = *cp.DecisionIndex(t.decision);
      correct.push_back(static_cast<int>(top - t.scores.begin()) == gold[j]);
    }
  }
  auto fill = [](const LabelTally &tally, std::map<std::string, double> &micro,
                 std::map<std::string, double> &macro) {
    micro[""] = tally.F1("", Averaging::kMicro);
    macro[""] = tally.F1("", Averaging::kMacro);
    for (const auto &[sub, labels] : tally.predicted) {
      micro[sub] = tally.F1(sub, Averaging::kMicro);
      macro[sub] = tally.F1(sub, Averaging::kMacro);
    }
  };
  fill(constrained, report.micro_f1_constrained, report.macro_f1_constrained);
  fill(unconstrained, report.micro_f1_unconstrained,
       report.macro_f1_unconstrained);
  report.violations_constrained = constrained.violations;
  report.violations_unconstrained = unconstrained.violations;
  report.ece = ExpectedCalibrationError(confidences, correct);
  return report;
}

}  // namespace structprompt
