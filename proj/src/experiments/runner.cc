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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "structprompt/constraints.h"
#include "structprompt/dataset.h"
#include "structprompt/error.h"
#include "structprompt/experiment.h"
#include "structprompt/metrics.h"

namespace structprompt {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Error message without the "<code>: " prefix added by Error.
std::string Detail(const Error &e) {
  const std::string what = e.what();
  const std::string prefix = std::string(ErrorCodeName(e.code())) + ": ";
  return what.starts_with(prefix) ? what.substr(prefix.size()) : what;
}

[[noreturn]] void Rethrow(const std::string &context) {
  try {
    throw;
  } catch (const Error &e) {
    throw Error(e.code(), context + ": " + Detail(e));
  } catch (const fs::filesystem_error &e) {
    throw Error(ErrorCode::kIoError, context + ": " + e.what());
  }
}

// Runs fn(0..n-1) on up to `workers` threads. The exception of the lowest
// failing index is rethrown, so failures are reported deterministically.
void ParallelFor(std::size_t n, int workers,
                 const std::function<void(std::size_t)> &fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
  for (auto &t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

class CountingBackend : public Backend {
 public:
  explicit CountingBackend(Backend &inner) : inner_(inner) {}
  const BackendDescriptor &descriptor() const override {
    return inner_.descriptor();
  }
  CompletionResponse Generate(const CompletionRequest &request) override {
    ++count_;
    return inner_.Generate(request);
  }
  std::int64_t count() const { return count_.load(); }

 private:
  Backend &inner_;
  std::atomic<std::int64_t> count_{0};
};

void Truncate(const fs::path &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

void AppendLines(const fs::path &path, const std::vector<json> &lines) {
  std::ofstream out(path, std::ios::app);
  for (const auto &l : lines) out << l.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::string FileSafe(std::string s) {
  for (char &c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') c = '_';
  }
  return s;
}

struct Evaluated {
  Assignment unconstrained;
  std::optional<SolveResult> constrained;
};

}  // namespace

std::string TaskData::ItemId(std::size_t i) const {
  return task == kTaskMorality ? tweets.at(i).id : docs.at(i).id;
}

TaskData LoadTaskData(const ExperimentConfig &config) {
  TaskData data;
  data.task = config.task;
  if (config.task == kTaskMorality) {
    data.tweets = LoadTweets(config.dataset);
  } else if (config.dataset_format == "conll") {
    data.docs = ReadConll2012(config.dataset, config.coref_window);
  } else {
    data.docs = LoadCorefDocuments(config.dataset);
    if (config.coref_window > 0) {
      for (auto &d : data.docs) {
        const auto allowed = CandidatePairs(
            static_cast<int>(d.mentions.size()), config.coref_window);
        std::erase_if(d.pairs, [&](const std::pair<int, int> &p) {
          return !std::binary_search(allowed.begin(), allowed.end(), p);
        });
      }
    }
  }
  if (data.size() == 0) {
    throw Error(ErrorCode::kSchemaError,
                config.dataset.string() + ": dataset is empty");
  }
  return data;
}

std::vector<ScoringJob> PlanJobs(const ExperimentConfig &config,
                                 const TaskData &data,
                                 const StrategyConfig &strategy,
                                 const std::vector<std::size_t> &items,
                                 const std::vector<std::size_t> &shot_pool,
                                 const TemplateSet &templates) {
  const std::uint64_t prompt_seed = DeriveSeed(config.seed, "prompts");
  std::vector<ScoringJob> jobs;
  if (data.task == kTaskMorality) {
    std::vector<TweetInstance> pool;
    for (auto i : shot_pool) pool.push_back(data.tweets[i]);
    for (auto i : items) {
      const TweetInstance &t = data.tweets[i];
      for (auto variant : strategy.variants) {
        MoralityPromptRequest req{strategy.method, strategy.shots, variant,
                                  &pool,           prompt_seed,    &templates};
        jobs.push_back({i, FoundationDecision(t), kNumFoundations,
                        t.foundation, FoundationPrompts(t, req)});
        for (std::size_t e = 0; e < t.entities.size(); ++e) {
          const int ei = static_cast<int>(e);
          jobs.push_back({i, RoleDecision(t, ei), kNumRoles,
                          t.entities[e].role, RolePrompts(t, ei, req)});
        }
      }
    }
    return jobs;
  }
  std::vector<CorefDocument> pool_docs;
  for (auto i : shot_pool) pool_docs.push_back(data.docs[i]);
  const auto pool = CorefShotPool(pool_docs);
  CorefPromptRequest req{strategy.method, strategy.shots, &pool, prompt_seed,
                         &templates};
  for (auto i : items) {
    const CorefDocument &d = data.docs[i];
    for (const auto &[a, b] : d.pairs) {
      jobs.push_back({i, PairDecisionId(d, a, b), 2, ViewPair(d, a, b).gold,
                      CorefPrompts(d, a, b, req)});
    }
  }
  return jobs;
}

std::vector<std::size_t> ItemsToScore(const ExperimentConfig &config,
                                      const FoldSplit &split) {
  std::vector<std::size_t> items = split.test;
  if (config.calibration != CalibrationMode::kNone) {
    items.insert(items.end(), split.train.begin(), split.train.end());
    items.insert(items.end(), split.dev.begin(), split.dev.end());
    std::sort(items.begin(), items.end());
  }
  return items;
}

MetricsReport RunExperiment(const ExperimentConfig &config,
                            const RunOptions &options, RunStats *stats) {
  ValidateConfig(config);
  const auto start = Clock::now();
  auto progress = [&](const std::string &m) {
    if (options.progress) options.progress(m);
  };

  const TaskData data = LoadTaskData(config);
  const TemplateSet templates = config.templates_dir.empty()
                                    ? TemplateSet::Builtin()
                                    : TemplateSet::FromDirectory(
                                          config.templates_dir);
  const fs::path out = config.output_dir;
  const fs::path scores_path = out / "scores.jsonl";
  const fs::path solutions_path = out / "solutions.jsonl";
  try {
    fs::create_directories(out);
    Truncate(scores_path);
    Truncate(solutions_path);
  } catch (...) {
    Rethrow("output directory " + out.string());
  }

  std::unique_ptr<Backend> owned;
  Backend *inner = options.backend;
  if (inner == nullptr) {
    HttpOptions http;
    http.max_in_flight = config.max_in_flight;
    owned = MakeBackend(config.backend, http);
    inner = owned.get();
  }
  CountingBackend counted(*inner);
  ScoreCache cache(CacheDir(config));
  CachingBackend backend(counted, cache);

  const bool morality = config.task == kTaskMorality;
  MetricsReport report;
  report.config = config;
  report.task = config.task;
  report.folds = config.folds;
  if (morality) {
    report.subproblems = {kMoralFoundation, kMoralRole};
    if (config.morality_constraints.alignment) {
      report.tags.push_back(kTagAlignment);
    }
    if (config.morality_constraints.role_uniqueness) {
      report.tags.push_back(kTagMutex);
    }
  } else {
    report.subproblems = {kCorefPair};
    if (config.coref_constraints.transitivity) {
      report.tags.push_back(kTagTransitivity);
    }
  }
  report.conventions = {
      {"macro_f1",
       "classes absent from both gold and predictions are excluded; a gold "
       "class never predicted contributes 0"},
      {"micro_f1", "over decisions; equals accuracy"},
      {"pooled", "\"\" pools all subproblems (macro: mean of subproblems)"},
      {"folds",
       "unstratified seeded folds; dev is 10% of the remaining items"},
      {"stdev", "sample standard deviation over folds"},
      {"violations", "hard-constraint violations summed over test items"}};
  if (!morality) {
    report.conventions["coref_f1"] =
        "pairwise macro F1 over {coreferent, distinct}";
  }
  for (const auto &s : config.strategies) {
    report.rows.push_back({s.method, s.Label(), false, {}, {}, {}, {}});
    if (config.constrained) {
      report.rows.push_back({s.method, s.Label(), true, {}, {}, {}, {}});
    }
  }

  const auto folds =
      MakeFolds(data.size(), config.folds, config.seed, config.dev_fraction);
  const std::string dataset_name = config.dataset.stem().string();

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto fold_start = Clock::now();
    const FoldSplit &split = folds[f];
    const std::string fold_ctx = "fold " + std::to_string(f);
    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
      const StrategyConfig &strategy = config.strategies[s];
      const std::string ctx = fold_ctx + ", " + strategy.Label();

      // Score.
      std::vector<ScoringJob> jobs;
      try {
        jobs = PlanJobs(config, data, strategy, ItemsToScore(config, split),
                        split.train, templates);
      } catch (...) {
        Rethrow(ctx);
      }
      std::vector<ScoreTable> tables(jobs.size());
      ParallelFor(jobs.size(), config.workers, [&](std::size_t k) {
        const ScoringJob &job = jobs[k];
        try {
          tables[k] = ScoreBundle(job.decision, job.bundle, job.num_labels,
                                  backend, config.scoring);
        } catch (...) {
          Rethrow(ctx + ", " + job.decision.ToString());
        }
      });
      std::vector<ScoreRecord> records;
      for (std::size_t k = 0; k < jobs.size(); ++k) {
        report.scoring_requests +=
            static_cast<std::int64_t>(BundlePrompts(jobs[k].bundle).size());
        records.push_back({dataset_name, static_cast<int>(f), tables[k]});
      }
      AppendScoreRecords(scores_path, records);
      progress(ctx + ": scored " + std::to_string(tables.size()) + " tables");
      if (options.stop_after == RunStage::kScore) continue;

      // Assemble one problem per item.
      std::map<std::size_t, std::vector<ScoreTable>> by_item;
      for (std::size_t k = 0; k < jobs.size(); ++k) {
        by_item[jobs[k].item].push_back(tables[k]);
      }
      std::map<std::size_t, StructuredProblem> problems;
      for (auto &[item, item_tables] : by_item) {
        try {
          problems.emplace(
              item, morality
                        ? BuildMoralityProblem(data.tweets[item], item_tables,
                                               config.morality_constraints)
                        : BuildCorefProblem(data.docs[item], item_tables,
                                            config.coref_constraints));
        } catch (...) {
          Rethrow(ctx + ", " + data.ItemId(item));
        }
      }
      auto gather = [&](const std::vector<std::size_t> &idx) {
        std::vector<StructuredProblem> v;
        for (auto i : idx) v.push_back(problems.at(i));
        return v;
      };

      // Calibrate.
      CalibratorSet calibrators;
      if (config.calibration != CalibrationMode::kNone) {
        TrainConfig tc = config.train;
        tc.seed = DeriveSeed(config.seed, "train/" + std::to_string(f) + "/" +
                                              strategy.Label());
        tc.log_path.clear();
        try {
          const auto train = gather(split.train);
          const auto dev = gather(split.dev);
          tc.objective = Objective::kLocalCrossEntropy;
          calibrators = TrainLocal(train, dev, tc);
          if (config.calibration == CalibrationMode::kGlobal) {
            tc.objective = Objective::kGlobalHinge;
            calibrators = TrainGlobal(train, dev, tc, calibrators);
          }
          const fs::path cal_dir = out / "calibrators";
          fs::create_directories(cal_dir);
          std::ofstream cal_out(cal_dir / ("fold" + std::to_string(f) + "-" +
                                           FileSafe(strategy.method) + "-" +
                                           std::to_string(strategy.shots) +
                                           ".json"));
          cal_out << calibrators.ToJson().dump(2) << '\n';
          if (!cal_out) throw Error(ErrorCode::kIoError, "calibrator write");
        } catch (...) {
          Rethrow(ctx + ", calibration");
        }
        progress(ctx + ": calibrated " +
                 std::to_string(calibrators.all().size()) + " calibrators");
      }
      if (options.stop_after == RunStage::kCalibrate) continue;

      // Infer on the test items.
      const auto &test = split.test;
      std::vector<StructuredProblem> calibrated(test.size());
      std::vector<Evaluated> results(test.size());
      ParallelFor(test.size(), config.workers, [&](std::size_t k) {
        try {
          calibrated[k] = calibrators.Apply(problems.at(test[k]));
          results[k].unconstrained = LocalArgmax(calibrated[k]);
          if (config.constrained) {
            try {
              results[k].constrained = SolveMap(calibrated[k], config.solve);
            } catch (const Error &e) {
              if (e.code() != ErrorCode::kBudgetExceeded &&
                  e.code() != ErrorCode::kInfeasible) {
                throw;
              }
            }
          }
        } catch (...) {
          Rethrow(ctx + ", " + data.ItemId(test[k]));
        }
      });

      LabelTally plain_tally, constr_tally;
      FoldMetrics plain, constr;
      plain.fold = constr.fold = static_cast<int>(f);
      std::vector<double> confidences;
      std::vector<bool> correct;
      std::vector<json> solution_lines;
      for (std::size_t k = 0; k < test.size(); ++k) {
        const StructuredProblem &p = calibrated[k];
        const auto gold = p.LabelsFromAssignment(*p.gold());
        plain_tally.Add(p, results[k].unconstrained);
        ++plain.instances;
        json line{{"fold", f},
                  {"strategy", strategy.Label()},
                  {"item", data.ItemId(test[k])},
                  {"gold", gold},
                  {"unconstrained",
                   p.LabelsFromAssignment(results[k].unconstrained)}};
        if (config.constrained) {
          const auto &r = results[k].constrained;
          if (r) {
            constr_tally.Add(p, r->assignment);
            ++constr.instances;
            constr.nodes_explored += r->nodes_explored;
            if (!r->proven_optimal) ++constr.solver_failures;
            line["constrained"] = p.LabelsFromAssignment(r->assignment);
            line["objective"] = r->objective;
            line["proven_optimal"] = r->proven_optimal;
          } else {
            ++constr.solver_failures;
            line["constrained"] = nullptr;
          }
        }
        for (const auto &t : p.tables()) {
          const auto top = std::max_element(t.scores.begin(), t.scores.end());
          confidences.push_back(*top);
          correct.push_back(static_cast<int>(top - t.scores.begin()) ==
                            gold[*p.DecisionIndex(t.decision)]);
        }
        solution_lines.push_back(std::move(line));
      }
      AppendLines(solutions_path, solution_lines);

      auto finish = [&](const LabelTally &tally, FoldMetrics &m) {
        m.micro_f1[""] = tally.F1("", Averaging::kMicro);
        m.macro_f1[""] = tally.F1("", Averaging::kMacro);
        for (const auto &sub : report.subproblems) {
          m.micro_f1[sub] = tally.F1(sub, Averaging::kMicro);
          m.macro_f1[sub] = tally.F1(sub, Averaging::kMacro);
        }
        for (const auto &tag : report.tags) {
          auto it = tally.violations.find(tag);
          m.violations[tag] = it == tally.violations.end() ? 0 : it->second;
        }
        m.ece = ExpectedCalibrationError(confidences, correct);
      };
      finish(plain_tally, plain);
      for (auto &row : report.rows) {
        if (row.label != strategy.Label()) continue;
        if (!row.constrained) {
          row.folds.push_back(plain);
        } else {
          finish(constr_tally, constr);
          row.folds.push_back(constr);
        }
      }
      progress(ctx + ": evaluated " + std::to_string(test.size()) +
               " test items");
    }
    if (stats) {
      stats->fold_seconds.push_back(
          std::chrono::duration<double>(Clock::now() - fold_start).count());
    }
  }

  Aggregate(report);
  if (stats) {
    stats->wall_seconds =
        std::chrono::duration<double>(Clock::now() - start).count();
    stats->backend_requests = counted.count();
    stats->cache_hits = cache.hits();
    stats->cache_misses = cache.misses();
  }
  if (options.stop_after == RunStage::kEvaluate) {
    try {
      EmitReport(report, out);
      if (stats) {
        std::ofstream timing(out / "timing.json");
        timing << json(*stats).dump(2) << '\n';
      }
    } catch (...) {
      Rethrow("report");
    }
  }
  return report;
}

}  // namespace structprompt
