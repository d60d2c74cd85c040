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

#include "structprompt/ilp.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "structprompt/error.h"

namespace structprompt {

namespace {

constexpr double kTolerance = 1e-9;

bool IsStructuralTag(const std::string &tag) {
  return tag == kTagMulticlass || tag == kTagLinkUpper || tag == kTagLinkLower;
}

// Outcome completion for one (decision, label): every outcome with a
// non-negative weight is switched on; when all are negative only the best
// one is. Returns the objective contribution.
double LabelGain(const StructuredProblem &problem, const DecisionInfo &d,
                 int label, std::vector<int> *on) {
  const auto &vars = problem.variables();
  double gain = 0.0;
  int best = -1;
  bool any_nonneg = false;
  for (int v : d.outcome_vars[label]) {
    if (v < 0) continue;
    const double w = vars[v].weight;
    if (w >= 0.0) {
      any_nonneg = true;
      gain += w;
      if (on) on->push_back(v);
    } else if (best < 0 || w > vars[best].weight) {
      best = v;
    }
  }
  if (!any_nonneg && best >= 0) {
    gain = vars[best].weight;
    if (on) on->push_back(best);
  }
  return gain;
}

// A hard constraint in "<=" form, grouped by decision. contrib[k] is the
// row's coefficient mass on label k of the group's decision.
struct Group {
  int decision = 0;
  std::vector<std::int64_t> contrib;
};

struct Row {
  std::vector<Group> groups;
  std::int64_t bound = 0;
};

struct Compiled {
  std::vector<std::vector<double>> gain;  // [decision][label]
  std::vector<Row> rows;
  std::vector<std::vector<int>> rows_of;  // decision -> row indices
};

Compiled Compile(const StructuredProblem &problem) {
  Compiled c;
  const auto &decisions = problem.decisions();
  c.gain.resize(decisions.size());
  for (std::size_t j = 0; j < decisions.size(); ++j) {
    for (int k = 0; k < decisions[j].num_labels; ++k) {
      c.gain[j].push_back(LabelGain(problem, decisions[j], k, nullptr));
    }
  }

  c.rows_of.resize(decisions.size());
  const auto &vars = problem.variables();
  for (const IndexedConstraint &row : problem.rows()) {
    if (IsStructuralTag(problem.tags()[row.tag])) continue;
    std::vector<Group> groups;
    for (const auto &[v, coef] : row.terms) {
      const VarKey &key = vars[v].key;
      if (key.kind != VarKind::kDecision) {
        throw Error(ErrorCode::kInvalidProblem,
                    "hard constraints may only reference decision variables");
      }
      const int j = *problem.DecisionIndex(key.decision);
      auto g = std::find_if(groups.begin(), groups.end(),
                            [j](const Group &x) { return x.decision == j; });
      if (g == groups.end()) {
        groups.push_back(Group{j, std::vector<std::int64_t>(
                                      decisions[j].num_labels, 0)});
        g = groups.end() - 1;
      }
      g->contrib[key.label] += coef;
    }
    auto emit = [&](std::int64_t sign, std::int64_t bound) {
      Row r;
      r.bound = sign * bound;
      r.groups = groups;
      for (Group &g : r.groups) {
        for (auto &x : g.contrib) x *= sign;
      }
      const int index = static_cast<int>(c.rows.size());
      for (const Group &g : r.groups) c.rows_of[g.decision].push_back(index);
      c.rows.push_back(std::move(r));
    };
    switch (row.relation) {
      case Relation::kLessEqual: emit(1, row.bound); break;
      case Relation::kGreaterEqual: emit(-1, row.bound); break;
      case Relation::kEqual:
        emit(1, row.bound);
        emit(-1, row.bound);
        break;
    }
  }
  return c;
}

// Union-find components of the decision/constraint graph, each listed in
// canonical decision order; components ordered by their first decision.
std::vector<std::vector<int>> Components(const Compiled &c, std::size_t n,
                                         bool decompose) {
  std::vector<std::vector<int>> out;
  if (!decompose) {
    out.emplace_back(n);
    std::iota(out.back().begin(), out.back().end(), 0);
    return out;
  }
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Row &r : c.rows) {
    for (std::size_t i = 1; i < r.groups.size(); ++i) {
      int a = find(r.groups[0].decision), b = find(r.groups[i].decision);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<int> slot(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    int root = find(static_cast<int>(j));
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[slot[root]].push_back(static_cast<int>(j));
  }
  return out;
}

// Depth-first branch and bound over the label domains of one component.
class Search {
 public:
  Search(const Compiled &c, std::vector<int> order, const SolveLimits &limits,
         std::chrono::steady_clock::time_point deadline)
      : c_(c),
        order_(std::move(order)),
        limits_(limits),
        deadline_(deadline),
        dom_(c.gain.size()),
        size_(c.gain.size(), 0),
        queued_(c.rows.size(), 0) {
    for (int j : order_) {
      dom_[j] = std::vector<char>(c_.gain[j].size(), 1);
      size_[j] = static_cast<int>(c_.gain[j].size());
    }
  }

  // Returns false when the root propagation already fails.
  bool Run() {
    std::vector<int> rows;
    for (int j : order_) {
      rows.insert(rows.end(), c_.rows_of[j].begin(), c_.rows_of[j].end());
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    if (!Propagate(rows)) return false;
    Dfs(0);
    return true;
  }

  bool has_incumbent() const { return has_best_; }
  bool stopped() const { return stopped_; }
  std::int64_t nodes() const { return nodes_; }
  // Labels of the incumbent, indexed like `order`.
  const std::vector<int> &best_labels() const { return best_labels_; }

 private:
  std::int64_t MinContrib(const Group &g) const {
    std::int64_t m = std::numeric_limits<std::int64_t>::max();
    const auto &dom = dom_.at(g.decision);
    for (std::size_t k = 0; k < dom.size(); ++k) {
      if (dom[k]) m = std::min(m, g.contrib[k]);
    }
    return m;
  }

  bool Remove(int j, int k) {
    dom_[j][k] = 0;
    --size_[j];
    trail_.emplace_back(j, k);
    return size_[j] > 0;
  }

  void Undo(std::size_t mark) {
    while (trail_.size() > mark) {
      auto [j, k] = trail_.back();
      trail_.pop_back();
      dom_[j][k] = 1;
      ++size_[j];
    }
  }

  bool Propagate(const std::vector<int> &seed) {
    std::vector<int> queue = seed;
    for (int r : queue) queued_[r] = 1;
    const bool ok = Drain(queue);
    for (int r : queue) queued_[r] = 0;
    return ok;
  }

  // Processes rows until the queue is empty (true) or a row cannot be
  // satisfied (false, leaving the rest queued).
  bool Drain(std::vector<int> &queue) {
    auto &queued = queued_;
    while (!queue.empty()) {
      const int r = queue.back();
      queue.pop_back();
      queued[r] = 0;
      const Row &row = c_.rows[r];
      std::int64_t total = 0;
      mins_.resize(row.groups.size());
      for (std::size_t g = 0; g < row.groups.size(); ++g) {
        mins_[g] = MinContrib(row.groups[g]);
        total += mins_[g];
      }
      if (total > row.bound) return false;
      for (std::size_t g = 0; g < row.groups.size(); ++g) {
        const Group &grp = row.groups[g];
        const std::int64_t slack = row.bound - (total - mins_[g]);
        auto &dom = dom_[grp.decision];
        bool changed = false;
        for (std::size_t k = 0; k < dom.size(); ++k) {
          if (dom[k] && grp.contrib[k] > slack) {
            if (!Remove(grp.decision, static_cast<int>(k))) return false;
            changed = true;
          }
        }
        if (changed) {
          for (int other : c_.rows_of[grp.decision]) {
            if (!queued[other]) {
              queued[other] = 1;
              queue.push_back(other);
            }
          }
        }
      }
    }
    return true;
  }

  double UpperBound() const {
    double ub = 0.0;
    for (int j : order_) {
      double m = -std::numeric_limits<double>::infinity();
      const auto &dom = dom_.at(j);
      for (std::size_t k = 0; k < dom.size(); ++k) {
        if (dom[k]) m = std::max(m, c_.gain[j][k]);
      }
      ub += m;
    }
    return ub;
  }

  bool OutOfBudget() {
    if (nodes_ >= limits_.max_nodes) return true;
    if ((nodes_ & 255) == 0 && std::chrono::steady_clock::now() > deadline_) {
      return true;
    }
    return false;
  }

  void Dfs(std::size_t depth) {
    if (stopped_) return;
    if (depth == order_.size()) {
      double value = 0.0;
      labels_.resize(order_.size());
      for (std::size_t i = 0; i < order_.size(); ++i) {
        const auto &dom = dom_.at(order_[i]);
        labels_[i] = static_cast<int>(
            std::find(dom.begin(), dom.end(), 1) - dom.begin());
        value += c_.gain[order_[i]][labels_[i]];
      }
      if (!has_best_ || value > best_ + kTolerance) {
        has_best_ = true;
        best_ = value;
        best_labels_ = labels_;
      }
      return;
    }
    const int j = order_[depth];
    const std::size_t num_labels = dom_.at(j).size();
    for (std::size_t k = 0; k < num_labels; ++k) {
      if (!dom_.at(j)[k]) continue;
      if (OutOfBudget()) {
        stopped_ = true;
        return;
      }
      ++nodes_;
      const std::size_t mark = trail_.size();
      bool ok = true;
      for (std::size_t other = 0; other < num_labels && ok; ++other) {
        if (other != k && dom_.at(j)[other]) {
          ok = Remove(j, static_cast<int>(other));
        }
      }
      if (ok) ok = Propagate(c_.rows_of[j]);
      if (ok && (!has_best_ || UpperBound() > best_ + kTolerance)) {
        Dfs(depth + 1);
      }
      Undo(mark);
      if (stopped_) return;
    }
  }

  const Compiled &c_;
  std::vector<int> order_;
  const SolveLimits &limits_;
  std::chrono::steady_clock::time_point deadline_;
  std::vector<std::vector<char>> dom_;
  std::vector<int> size_;
  std::vector<char> queued_;
  std::vector<std::pair<int, int>> trail_;
  std::vector<std::int64_t> mins_;
  std::vector<int> labels_;
  std::vector<int> best_labels_;
  double best_ = 0.0;
  bool has_best_ = false;
  bool stopped_ = false;
  std::int64_t nodes_ = 0;
};

Assignment CompleteAssignment(const StructuredProblem &problem,
                              const std::vector<int> &labels) {
  Assignment a(problem.num_variables());
  for (std::size_t i = 0; i < a.size(); ++i) a.Set(i, false);
  const auto &decisions = problem.decisions();
  std::vector<int> on;
  for (std::size_t j = 0; j < decisions.size(); ++j) {
    a.Set(decisions[j].decision_vars[labels[j]], true);
    on.clear();
    LabelGain(problem, decisions[j], labels[j], &on);
    for (int v : on) a.Set(v, true);
  }
  return a;
}

}  // namespace

SolveResult SolveMap(const StructuredProblem &problem,
                     const SolveLimits &limits) {
  const auto start = std::chrono::steady_clock::now();
  const auto deadline = start + limits.time_limit;
  const Compiled compiled = Compile(problem);
  const std::size_t n = problem.decisions().size();

  std::vector<int> labels(n, -1);
  SolveResult result;
  result.proven_optimal = true;
  for (const std::vector<int> &component :
       Components(compiled, n, limits.decompose)) {
    Search search(compiled, component, limits, deadline);
    const bool root_ok = search.Run();
    result.nodes_explored += search.nodes();
    if (!root_ok || (!search.has_incumbent() && !search.stopped())) {
      throw Error(ErrorCode::kInfeasible,
                  "no assignment satisfies the constraints (component of " +
                      problem.decisions()[component.front()].id.ToString() +
                      ")");
    }
    if (!search.has_incumbent()) {
      throw Error(ErrorCode::kBudgetExceeded,
                  "search budget exhausted before a feasible assignment was "
                  "found");
    }
    if (search.stopped()) result.proven_optimal = false;
    for (std::size_t i = 0; i < component.size(); ++i) {
      labels[component[i]] = search.best_labels()[i];
    }
  }

  result.assignment = CompleteAssignment(problem, labels);
  if (!IsFeasible(problem, result.assignment)) {
    throw Error(ErrorCode::kInvalidProblem,
                "solver output violates a constraint; the problem has "
                "non-standard structural constraints");
  }
  result.objective = ObjectiveValue(problem, result.assignment);
  result.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

SolveResult BruteForceMap(const StructuredProblem &problem) {
  const auto start = std::chrono::steady_clock::now();
  const auto &decisions = problem.decisions();
  const auto &vars = problem.variables();
  constexpr double kMaxCandidates = double(1 << 24);
  double candidates = 1.0;
  for (const DecisionInfo &d : decisions) candidates *= d.num_labels;
  if (candidates > kMaxCandidates) {
    throw Error(ErrorCode::kTooLarge,
                "brute force limited to 2^24 label combinations");
  }

  // Best outcome subset for each (decision, label), found by enumerating
  // every non-empty subset of its outcome variables.
  std::vector<std::vector<std::vector<int>>> best_subset(decisions.size());
  for (std::size_t j = 0; j < decisions.size(); ++j) {
    for (int k = 0; k < decisions[j].num_labels; ++k) {
      std::vector<int> outcomes;
      for (int v : decisions[j].outcome_vars[k]) {
        if (v >= 0) outcomes.push_back(v);
      }
      std::vector<int> best;
      double best_value = -std::numeric_limits<double>::infinity();
      for (unsigned mask = 1; mask < (1u << outcomes.size()); ++mask) {
        double value = 0.0;
        std::vector<int> subset;
        for (std::size_t b = 0; b < outcomes.size(); ++b) {
          if (mask & (1u << b)) {
            value += vars[outcomes[b]].weight;
            subset.push_back(outcomes[b]);
          }
        }
        if (value > best_value) {
          best_value = value;
          best = std::move(subset);
        }
      }
      best_subset[j].push_back(std::move(best));
    }
  }

  SolveResult result;
  std::vector<int> labels(decisions.size(), 0);
  bool found = false;
  double best = 0.0;
  Assignment a(vars.size());
  while (true) {
    ++result.nodes_explored;
    for (std::size_t i = 0; i < a.size(); ++i) a.Set(i, false);
    for (std::size_t j = 0; j < decisions.size(); ++j) {
      a.Set(decisions[j].decision_vars[labels[j]], true);
      for (int v : best_subset[j][labels[j]]) a.Set(v, true);
    }
    if (IsFeasible(problem, a)) {
      const double value = ObjectiveValue(problem, a);
      if (!found || value > best + kTolerance) {
        found = true;
        best = value;
        result.assignment = a;
      }
    }
    // Odometer in lexicographic order: the last decision moves fastest.
    int j = static_cast<int>(decisions.size()) - 1;
    while (j >= 0 && ++labels[j] == decisions[j].num_labels) {
      labels[j] = 0;
      --j;
    }
    if (j < 0) break;
  }
  if (!found) {
    throw Error(ErrorCode::kInfeasible,
                "no label combination satisfies the constraints");
  }
  result.objective = best;
  result.proven_optimal = true;
  result.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

Assignment LocalArgmax(const StructuredProblem &problem) {
  const auto &vars = problem.variables();
  std::vector<int> labels;
  for (const DecisionInfo &d : problem.decisions()) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < d.num_labels; ++k) {
      double score = 0.0;
      for (int v : d.outcome_vars[k]) {
        if (v >= 0) score += vars[v].weight;
      }
      if (score > best_score) {
        best_score = score;
        best = k;
      }
    }
    labels.push_back(best);
  }
  return problem.AssignmentFromLabels(labels);
}

std::string ExportLp(const StructuredProblem &problem) {
  std::ostringstream out;
  out << std::setprecision(17);
  const auto &vars = problem.variables();
  out << "\\ structprompt MAP problem\n";
  for (std::size_t i = 0; i < vars.size(); ++i) {
    out << "\\ x" << i << " = " << vars[i].key.ToString() << "\n";
  }
  out << "Maximize\n obj:";
  bool any = false;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].key.kind != VarKind::kOutcome) continue;
    out << (any ? " + " : " ") << vars[i].weight << " x" << i;
    any = true;
  }
  if (!any) out << " 0 x0";
  out << "\nSubject To\n";
  int index = 0;
  for (const IndexedConstraint &row : problem.rows()) {
    out << " c" << index++ << "_" << problem.tags()[row.tag] << ":";
    bool first = true;
    for (const auto &[v, coef] : row.terms) {
      if (coef < 0) out << " - ";
      else if (!first) out << " + ";
      else out << " ";
      std::int64_t mag = coef < 0 ? -coef : coef;
      if (mag != 1) out << mag << " ";
      out << "x" << v;
      first = false;
    }
    out << " " << RelationSymbol(row.relation) << " " << row.bound << "\n";
  }
  out << "Binary\n";
  for (std::size_t i = 0; i < vars.size(); ++i) out << " x" << i << "\n";
  out << "End\n";
  return out.str();
}

}  // namespace structprompt
