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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "structprompt/error.h"
#include "structprompt/experiment.h"

namespace structprompt {

namespace {

namespace fs = std::filesystem;

std::string Percent(const Stat &s) {
  char buf[64];
  if (s.stdev) {
    std::snprintf(buf, sizeof(buf), "%.1f ± %.1f", 100 * s.mean,
                  100 * *s.stdev);
  } else {
    std::snprintf(buf, sizeof(buf), "%.1f", 100 * s.mean);
  }
  return buf;
}

std::string SubproblemTitle(const std::string &sub) {
  if (sub == kMoralFoundation) return "Foundation";
  if (sub == kMoralRole) return "Role";
  if (sub == kCorefPair) return "Pair";
  return sub;
}

void WriteAtomically(const fs::path &path, const std::string &text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot rename to " + path.string() + ": " + ec.message());
  }
}

}  // namespace

void to_json(json &j, const Stat &s) {
  j = json{{"mean", s.mean}};
  j["stdev"] = s.stdev ? json(*s.stdev) : json(nullptr);
}

void from_json(const json &j, Stat &s) {
  s.mean = j.at("mean").get<double>();
  s.stdev.reset();
  if (j.contains("stdev") && !j["stdev"].is_null()) {
    s.stdev = j["stdev"].get<double>();
  }
}

void to_json(json &j, const FoldMetrics &m) {
  j = json{{"fold", m.fold},
           {"instances", m.instances},
           {"micro_f1", m.micro_f1},
           {"macro_f1", m.macro_f1},
           {"violations", m.violations},
           {"ece", m.ece},
           {"solver_failures", m.solver_failures},
           {"nodes_explored", m.nodes_explored}};
}

void from_json(const json &j, FoldMetrics &m) {
  m.fold = j.at("fold").get<int>();
  m.instances = j.at("instances").get<int>();
  m.micro_f1 = j.at("micro_f1").get<std::map<std::string, double>>();
  m.macro_f1 = j.at("macro_f1").get<std::map<std::string, double>>();
  m.violations = j.at("violations").get<std::map<std::string, long>>();
  m.ece = j.at("ece").get<double>();
  m.solver_failures = j.at("solver_failures").get<int>();
  m.nodes_explored = j.at("nodes_explored").get<std::int64_t>();
}

void to_json(json &j, const ReportRow &r) {
  j = json{{"method", r.method},
           {"label", r.label},
           {"constrained", r.constrained},
           {"folds", r.folds},
           {"micro_f1", r.micro_f1},
           {"macro_f1", r.macro_f1},
           {"violations", r.violations}};
}

void from_json(const json &j, ReportRow &r) {
  r.method = j.at("method").get<std::string>();
  r.label = j.at("label").get<std::string>();
  r.constrained = j.at("constrained").get<bool>();
  r.folds = j.at("folds").get<std::vector<FoldMetrics>>();
  r.micro_f1 = j.at("micro_f1").get<std::map<std::string, Stat>>();
  r.macro_f1 = j.at("macro_f1").get<std::map<std::string, Stat>>();
  r.violations = j.at("violations").get<std::map<std::string, long>>();
}

Stat Summarize(const std::vector<double> &values) {
  Stat s;
  if (values.empty()) return s;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

void Aggregate(MetricsReport &report) {
  for (auto &row : report.rows) {
    row.micro_f1.clear();
    row.macro_f1.clear();
    row.violations.clear();
    std::map<std::string, std::vector<double>> micro, macro;
    for (const auto &f : row.folds) {
      for (const auto &[k, v] : f.micro_f1) micro[k].push_back(v);
      for (const auto &[k, v] : f.macro_f1) macro[k].push_back(v);
      for (const auto &[k, v] : f.violations) row.violations[k] += v;
    }
    for (const auto &[k, v] : micro) row.micro_f1[k] = Summarize(v);
    for (const auto &[k, v] : macro) row.macro_f1[k] = Summarize(v);
    for (const auto &tag : report.tags) row.violations.try_emplace(tag, 0);
  }
}

void to_json(json &j, const MetricsReport &r) {
  j = json{{"format", "structprompt-report/1"},
           {"config", r.config},
           {"task", r.task},
           {"folds", r.folds},
           {"subproblems", r.subproblems},
           {"tags", r.tags},
           {"conventions", r.conventions},
           {"rows", r.rows},
           {"scoring_requests", r.scoring_requests}};
}

void from_json(const json &j, MetricsReport &r) {
  try {
    if (j.value("format", std::string()) != "structprompt-report/1") {
      throw Error(ErrorCode::kSchemaError, "not a structprompt report");
    }
    r = MetricsReport{};
    r.config = j.at("config");
    r.task = j.at("task").get<std::string>();
    r.folds = j.at("folds").get<int>();
    r.subproblems = j.at("subproblems").get<std::vector<std::string>>();
    r.tags = j.at("tags").get<std::vector<std::string>>();
    r.conventions =
        j.at("conventions").get<std::map<std::string, std::string>>();
    r.rows = j.at("rows").get<std::vector<ReportRow>>();
    r.scoring_requests = j.at("scoring_requests").get<std::int64_t>();
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kSchemaError, std::string("report: ") + e.what());
  }
}

void to_json(json &j, const RunStats &s) {
  j = json{{"wall_seconds", s.wall_seconds},
           {"fold_seconds", s.fold_seconds},
           {"backend_requests", s.backend_requests},
           {"cache_hits", s.cache_hits},
           {"cache_misses", s.cache_misses}};
}

std::string ReportJsonText(const MetricsReport &report) {
  return json(report).dump(2) + "\n";
}

std::string ReportMarkdown(const MetricsReport &report) {
  std::ostringstream md;
  const json &c = report.config;
  md << "# Results: " << report.task << "\n\n";
  md << "Dataset `" << c.value("dataset", std::string()) << "`, "
     << report.folds << (report.folds == 1 ? " fold" : " folds")
     << ", calibration " << c.value("calibration", std::string("none"))
     << ", seed " << c.value("seed", 0) << ".\n";
  md << "F1 values are percentages";
  if (report.folds > 1) md << " (mean ± stdev over folds)";
  md << "; violations are totals over all test items.\n\n";

  md << "| Method |";
  std::string rule = "|---|";
  for (const auto &sub : report.subproblems) {
    md << " " << SubproblemTitle(sub) << " micro-F1 | " << SubproblemTitle(sub)
       << " macro-F1 |";
    rule += "---:|---:|";
  }
  for (const auto &tag : report.tags) {
    md << " " << tag << " viol. |";
    rule += "---:|";
  }
  md << "\n" << rule << "\n";
  for (const auto &row : report.rows) {
    md << "| " << (row.constrained ? "+ constr" : row.label) << " |";
    for (const auto &sub : report.subproblems) {
      auto mi = row.micro_f1.find(sub);
      auto ma = row.macro_f1.find(sub);
      md << " " << (mi == row.micro_f1.end() ? "-" : Percent(mi->second))
         << " | " << (ma == row.macro_f1.end() ? "-" : Percent(ma->second))
         << " |";
    }
    for (const auto &tag : report.tags) {
      auto it = row.violations.find(tag);
      md << " " << (it == row.violations.end() ? 0 : it->second) << " |";
    }
    md << "\n";
  }
  md << "\nConventions:\n\n";
  for (const auto &[k, v] : report.conventions) {
    md << "- " << k << ": " << v << "\n";
  }
  return md.str();
}

// One horizontal strip per row: per-fold pooled micro-F1 as dots, the mean
// as a vertical tick.
std::string ReportSvg(const MetricsReport &report) {
  const int left = 200, width = 420, strip = 26, top = 40;
  const int height = top + strip * static_cast<int>(report.rows.size()) + 40;
  auto x_of = [&](double v) { return left + v * width; };
  std::ostringstream svg;
  char buf[256];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << left + width + 30 << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"10\" y=\"20\" font-size=\"13\">Pooled micro-F1 per fold ("
      << report.task << ")</text>\n";
  for (int t = 0; t <= 10; ++t) {
    const double x = x_of(t / 10.0);
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%d\" x2=\"%.1f\" y2=\"%d\" "
                  "stroke=\"#ddd\"/>\n<text x=\"%.1f\" y=\"%d\" "
                  "text-anchor=\"middle\">%d</text>\n",
                  x, top - 8, x, height - 30, x, height - 16, t * 10);
    svg << buf;
  }
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const ReportRow &row = report.rows[i];
    const int y = top + strip * static_cast<int>(i) + strip / 2;
    const std::string name =
        row.constrained ? row.label + " + constr" : row.label;
    const char *color = row.constrained ? "#1f77b4" : "#d62728";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%s</text>\n",
                  left - 8, y + 4, name.c_str());
    svg << buf;
    for (const auto &f : row.folds) {
      auto it = f.micro_f1.find("");
      if (it == f.micro_f1.end()) continue;
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.2f\" cy=\"%d\" r=\"3.5\" fill=\"%s\" "
                    "fill-opacity=\"0.6\"/>\n",
                    x_of(it->second), y, color);
      svg << buf;
    }
    auto mean = row.micro_f1.find("");
    if (mean != row.micro_f1.end()) {
      const double x = x_of(mean->second.mean);
      std::snprintf(buf, sizeof(buf),
                    "<line x1=\"%.2f\" y1=\"%d\" x2=\"%.2f\" y2=\"%d\" "
                    "stroke=\"%s\" stroke-width=\"2\"/>\n",
                    x, y - 8, x, y + 8, color);
      svg << buf;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void EmitReport(const MetricsReport &report, const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create " + dir.string() + ": " + ec.message());
  }
  WriteAtomically(dir / "report.json", ReportJsonText(report));
  WriteAtomically(dir / "report.md", ReportMarkdown(report));
  WriteAtomically(dir / "report.svg", ReportSvg(report));
}

MetricsReport LoadReport(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kSchemaError,
                path.string() + ": " + std::string(e.what()));
  }
  return j.get<MetricsReport>();
}

}  // namespace structprompt
