#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "capstate/core/csv.hpp"
#include "capstate/eval/loso.hpp"
#include "capstate/eval/state_space.hpp"
#include "capstate/eval/stats.hpp"

namespace capstate::eval {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- fold files ----

inline fs::path fold_file(const fs::path &dir, const std::string &subject) {
  return dir / ("fold_" + subject + ".csv");
}

inline void write_fold_csv(const fs::path &file, const FoldResult &r) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw DataError("cannot write file", file.string());
  out << "subject,condition,window_start_s,U,O,stress_label,effort_label,mask\n";
  for (const auto &w : r.windows)
    out << r.subject_id << ',' << to_string(w.condition) << ','
        << csv::format_double(w.window_start_s) << ',' << csv::format_double(w.U) << ','
        << csv::format_double(w.O) << ',' << w.stress_label << ',' << w.effort_label << ','
        << w.mask << '\n';
}

inline FoldResult read_fold_csv(const fs::path &file) {
  const auto t = csv::read_table(file);
  const auto fn = file.string();
  const char *cols[] = {"subject", "condition", "window_start_s", "U",
                        "O",       "stress_label", "effort_label", "mask"};
  std::size_t idx[8];
  for (int i = 0; i < 8; ++i) idx[i] = t.column(cols[i], fn);
  FoldResult r;
  long row = 2;
  auto as_int = [&](const std::string &s, std::initializer_list<int> allowed) {
    for (int a : allowed)
      if (s == std::to_string(a)) return a;
    throw DataError("bad label value '" + s + "'", fn, row);
  };
  for (const auto &f : t.rows) {
    if (f.size() != t.header.size()) throw DataError("wrong field count", fn, row);
    if (r.subject_id.empty()) r.subject_id = f[idx[0]];
    if (f[idx[0]] != r.subject_id) throw DataError("mixed subjects in fold file", fn, row);
    WindowPrediction w;
    try {
      w.condition = parse_condition(f[idx[1]]);
    } catch (const DataError &e) {
      throw DataError(e.what(), fn, row);
    }
    w.window_start_s = csv::parse_double(f[idx[2]], fn, row);
    w.U = csv::parse_double(f[idx[3]], fn, row);
    w.O = csv::parse_double(f[idx[4]], fn, row);
    w.stress_label = as_int(f[idx[5]], {0, 1});
    w.effort_label = as_int(f[idx[6]], {-1, 0, 1});
    w.mask = as_int(f[idx[7]], {0, 1});
    r.windows.push_back(w);
    ++row;
  }
  if (r.windows.empty()) throw DataError("fold file has no windows", fn);
  score_fold(r);
  return r;
}

inline std::vector<FoldResult> read_fold_dir(const fs::path &dir) {
  if (!fs::is_directory(dir)) throw DataError("missing results directory", dir.string());
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("fold_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  if (files.empty()) throw DataError("no fold_<subject>.csv files", dir.string());
  std::sort(files.begin(), files.end());
  std::vector<FoldResult> out;
  for (const auto &f : files) out.push_back(read_fold_csv(f));
  return out;
}

// ---- summaries ----

struct HeadSummary {
  std::size_t n = 0; // folds with a defined metric
  double mean = NAN, sd = NAN, median = NAN, min = NAN, max = NAN;
  double mean_f1 = NAN;
  std::array<double, 2> mean_class_recall{NAN, NAN};
};

enum class Head { Stress, Effort };

inline const std::optional<ClassMetrics> &head_metrics(const FoldResult &r, Head h) {
  return h == Head::Stress ? r.stress : r.effort;
}

inline std::vector<double> head_values(const std::vector<FoldResult> &folds, Head h) {
  std::vector<double> v;
  for (const auto &f : folds)
    if (const auto &m = head_metrics(f, h)) v.push_back(m->balanced_accuracy);
  return v;
}

// SD is the sample SD, undefined (NaN) for a single fold.
inline HeadSummary summarize(const std::vector<FoldResult> &folds, Head h) {
  HeadSummary s;
  std::vector<double> ba, f1, r0, r1;
  for (const auto &f : folds)
    if (const auto &m = head_metrics(f, h)) {
      ba.push_back(m->balanced_accuracy);
      f1.push_back(m->macro_f1);
      r0.push_back(m->per_class_recall[0]);
      r1.push_back(m->per_class_recall[1]);
    }
  s.n = ba.size();
  if (ba.empty()) return s;
  auto mean = [](const std::vector<double> &v) {
    double a = 0.0;
    for (double x : v) a += x;
    return a / static_cast<double>(v.size());
  };
  s.mean = mean(ba);
  if (ba.size() > 1) {
    double ss = 0.0;
    for (double x : ba) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(ba.size() - 1));
  }
  auto sorted = ba;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.min = sorted.front();
  s.max = sorted.back();
  s.mean_f1 = mean(f1);
  s.mean_class_recall = {mean(r0), mean(r1)};
  return s;
}

inline void write_summary_csv(const fs::path &file, const std::vector<FoldResult> &folds) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw DataError("cannot write file", file.string());
  out << "subject,ba_stress,f1_stress,ba_effort,f1_effort,n_windows\n";
  auto cell = [](const std::optional<ClassMetrics> &m, bool f1) {
    return m ? csv::format_double(f1 ? m->macro_f1 : m->balanced_accuracy) : std::string("NA");
  };
  for (const auto &f : folds)
    out << f.subject_id << ',' << cell(f.stress, false) << ',' << cell(f.stress, true) << ','
        << cell(f.effort, false) << ',' << cell(f.effort, true) << ',' << f.windows.size() << '\n';
}

// ---- inferential statistics and state-space aggregates ----

namespace detail {

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json ttest_json(const std::function<TTest()> &f) {
  try {
    const auto r = f();
    return {{"t", num(r.t)}, {"df", r.df}, {"p", num(r.p)}, {"mean", r.mean}, {"sd", r.sd}};
  } catch (const Error &e) {
    return {{"undefined", e.what()}};
  }
}

// Per-subject condition means of U or O; NaN where a condition is missing.
inline std::map<std::string, std::array<double, 3>>
condition_means(const std::vector<FoldResult> &folds, bool use_U) {
  std::map<std::string, std::array<double, 3>> out;
  for (const auto &f : folds) {
    const auto s = condition_centroids(f);
    std::array<double, 3> row{NAN, NAN, NAN};
    for (std::size_t c = 0; c < 3; ++c)
      if (s.centroids[c]) row[c] = use_U ? s.centroids[c]->mean.U : s.centroids[c]->mean.O;
    out[f.subject_id] = row;
  }
  return out;
}

inline json axis_stats(const std::vector<FoldResult> &folds, bool use_U) {
  const auto means = condition_means(folds, use_U);
  std::vector<std::vector<double>> complete;
  std::vector<std::string> excluded;
  for (const auto &[id, row] : means) {
    if (std::isfinite(row[0]) && std::isfinite(row[1]) && std::isfinite(row[2]))
      complete.push_back({row[0], row[1], row[2]});
    else
      excluded.push_back(id);
  }
  json j;
  j["complete_subjects"] = complete.size();
  j["excluded_subjects"] = excluded;
  try {
    const auto a = rm_anova_oneway(complete);
    j["rm_anova"] = {{"F", num(a.f)}, {"df1", a.df1}, {"df2", a.df2}, {"p", a.p},
                     {"partial_eta_sq", a.partial_eta_sq}};
  } catch (const Error &e) {
    j["rm_anova"] = {{"undefined", e.what()}};
  }
  const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {0, 2}, {1, 2}};
  // Complete-case contrasts use only subjects with all three conditions;
  // full-sample contrasts use every subject that has both conditions.
  for (const char *which : {"pairwise_complete_cases", "pairwise_full_sample"}) {
    const bool full = std::string(which) == "pairwise_full_sample";
    json arr = json::array();
    for (auto [a, b] : pairs) {
      std::vector<double> xa, xb;
      for (const auto &[id, row] : means) {
        const bool both = std::isfinite(row[a]) && std::isfinite(row[b]);
        const bool all3 = std::isfinite(row[0]) && std::isfinite(row[1]) && std::isfinite(row[2]);
        if (full ? both : all3) {
          xa.push_back(row[a]);
          xb.push_back(row[b]);
        }
      }
      auto t = ttest_json([&] { return paired_t(xb, xa); });
      t["contrast"] = std::string(to_string(kAllConditions[b])) + "-" +
                      std::string(to_string(kAllConditions[a]));
      t["n"] = xa.size();
      if (t.contains("p") && !t["p"].is_null())
        t["p_bonferroni"] = std::min(1.0, 3.0 * t["p"].get<double>());
      arr.push_back(t);
    }
    j[which] = arr;
  }
  return j;
}

} // namespace detail

struct TrajectoryDistribution {
  std::map<Trajectory, std::size_t> counts;
  std::size_t subjects = 0; // including those without a pattern
  std::size_t missing = 0;
  std::size_t theory_consistent() const {
    auto get = [&](Trajectory t) { return counts.count(t) ? counts.at(t) : 0; };
    return get(Trajectory::Monotonic) + get(Trajectory::Rising);
  }
};

inline TrajectoryDistribution
trajectory_distribution(const std::vector<std::optional<Trajectory>> &patterns) {
  TrajectoryDistribution d;
  for (auto t : kAllTrajectories) d.counts[t] = 0;
  d.subjects = patterns.size();
  for (const auto &p : patterns) {
    if (p) ++d.counts[*p];
    else ++d.missing;
  }
  return d;
}

inline std::vector<std::optional<Trajectory>> fold_patterns(const std::vector<FoldResult> &folds) {
  std::vector<std::optional<Trajectory>> p;
  for (const auto &f : folds) p.push_back(condition_centroids(f).pattern);
  return p;
}

inline json head_json(const std::vector<FoldResult> &folds, Head h) {
  const auto s = summarize(folds, h);
  const auto v = head_values(folds, h);
  json j = {{"n_defined", s.n},
            {"mean_ba", detail::num(s.mean)},
            {"sd_ba", detail::num(s.sd)},
            {"median_ba", detail::num(s.median)},
            {"min_ba", detail::num(s.min)},
            {"max_ba", detail::num(s.max)},
            {"mean_macro_f1", detail::num(s.mean_f1)},
            {"mean_recall_low", detail::num(s.mean_class_recall[0])},
            {"mean_recall_high", detail::num(s.mean_class_recall[1])}};
  j["one_sample_t_vs_0.5"] = detail::ttest_json([&] { return one_sample_t(v, 0.5); });
  try {
    j["cohens_d_vs_0.5"] = cohens_d(v, 0.5);
  } catch (const Error &e) {
    j["cohens_d_vs_0.5"] = {{"undefined", e.what()}};
  }
  return j;
}

inline json build_stats(const std::vector<FoldResult> &folds, ingest::LabelScheme scheme_used) {
  json j;
  j["n_folds"] = folds.size();
  j["label_scheme"] = to_string(scheme_used);
  j["stress"] = head_json(folds, Head::Stress);
  j["effort"] = head_json(folds, Head::Effort);
  j["anova"] = {{"U", detail::axis_stats(folds, true)}, {"O", detail::axis_stats(folds, false)}};

  json per_subject = json::object();
  for (const auto &f : folds) {
    const auto s = condition_centroids(f);
    json c = json::object();
    for (std::size_t k = 0; k < 3; ++k)
      if (s.centroids[k])
        c[std::string(to_string(kAllConditions[k]))] = {
            {"U", s.centroids[k]->mean.U}, {"O", s.centroids[k]->mean.O},
            {"U_sd", s.centroids[k]->sd.U}, {"O_sd", s.centroids[k]->sd.O},
            {"windows", s.centroids[k]->windows}};
    per_subject[f.subject_id] = {
        {"centroids", c},
        {"delta_U", s.delta_U ? json(*s.delta_U) : json(nullptr)},
        {"delta_O", s.delta_O ? json(*s.delta_O) : json(nullptr)},
        {"pattern", s.pattern ? json(to_string(*s.pattern)) : json(nullptr)}};
  }
  const auto dist = trajectory_distribution(fold_patterns(folds));
  json counts = json::object();
  for (const auto &[t, n] : dist.counts) counts[to_string(t)] = n;
  j["trajectories"] = {{"per_subject", per_subject},
                       {"counts", counts},
                       {"missing", dist.missing},
                       {"theory_consistent", dist.theory_consistent()}};

  json quad = json::object();
  for (const char *scope : {"all", "c1", "c2", "c3"}) {
    std::map<std::string, std::size_t> q;
    for (auto k : kAllQuadrants) q[to_string(k)] = 0;
    std::size_t total = 0;
    for (const auto &f : folds)
      for (const auto &w : f.windows) {
        if (std::string(scope) != "all" && std::string(to_string(w.condition)) != scope) continue;
        ++q[to_string(map_state(w.U, w.O).quadrant)];
        ++total;
      }
    q["total"] = total;
    quad[scope] = q;
  }
  j["quadrants"] = quad;

  // Sensitivity: the same predictions scored with c2 relabelled low-stress.
  std::vector<FoldResult> relabelled;
  for (const auto &f : folds) relabelled.push_back(rescore(f, ingest::LabelScheme::C2StressLow));
  j["sensitivity_c2_stress_low"] = {
      {"stress_mean_ba", detail::num(summarize(relabelled, Head::Stress).mean)},
      {"effort_mean_ba", detail::num(summarize(relabelled, Head::Effort).mean)}};
  return j;
}

// ---- human-readable report ----

inline std::string fmt3(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string render_distribution(const TrajectoryDistribution &d) {
  std::ostringstream o;
  o << "Trajectory patterns (n = " << d.subjects << ")\n";
  auto pct = [&](std::size_t k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.0f%%",
                  d.subjects ? 100.0 * static_cast<double>(k) / static_cast<double>(d.subjects) : 0.0);
    return std::string(buf);
  };
  for (auto t : kAllTrajectories) {
    char line[96];
    std::snprintf(line, sizeof line, "  %-14s %3zu  %5s\n", to_string(t).c_str(), d.counts.at(t),
                  pct(d.counts.at(t)).c_str());
    o << line;
  }
  char line[96];
  std::snprintf(line, sizeof line, "  %-14s %3zu\n", "missing", d.missing);
  o << line;
  o << "  theory-consistent (monotonic + rising): " << d.theory_consistent() << "/" << d.subjects
    << " (" << pct(d.theory_consistent()) << ")\n";
  return o.str();
}

inline std::string render_report(const std::vector<FoldResult> &folds) {
  std::ostringstream o;
  o << "Summary over " << folds.size() << " fold(s)\n";
  o << "  head     n   mean_BA  sd_BA   median  min     max     macroF1\n";
  for (Head h : {Head::Stress, Head::Effort}) {
    const auto s = summarize(folds, h);
    char line[160];
    std::snprintf(line, sizeof line, "  %-7s %3zu  %-7s  %-6s  %-6s  %-6s  %-6s  %-6s\n",
                  h == Head::Stress ? "stress" : "effort", s.n, fmt3(s.mean).c_str(),
                  fmt3(s.sd).c_str(), fmt3(s.median).c_str(), fmt3(s.min).c_str(),
                  fmt3(s.max).c_str(), fmt3(s.mean_f1).c_str());
    o << line;
  }

  struct Row {
    std::string id;
    double bs, fs, be, fe, avg;
  };
  std::vector<Row> rows;
  for (const auto &f : folds) {
    Row r{f.subject_id, NAN, NAN, NAN, NAN, NAN};
    if (f.stress) r.bs = f.stress->balanced_accuracy, r.fs = f.stress->macro_f1;
    if (f.effort) r.be = f.effort->balanced_accuracy, r.fe = f.effort->macro_f1;
    double sum = 0.0;
    int k = 0;
    for (double v : {r.bs, r.be})
      if (std::isfinite(v)) sum += v, ++k;
    r.avg = k ? sum / k : NAN;
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row &a, const Row &b) {
    const double x = std::isfinite(a.avg) ? a.avg : -1.0, y = std::isfinite(b.avg) ? b.avg : -1.0;
    return x > y;
  });
  o << "\nPer-subject results (sorted by average BA)\n";
  o << "  subject    BA_stress F1_stress BA_effort F1_effort avg_BA\n";
  for (const auto &r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-10s %-9s %-9s %-9s %-9s %-6s\n", r.id.c_str(),
                  fmt3(r.bs).c_str(), fmt3(r.fs).c_str(), fmt3(r.be).c_str(), fmt3(r.fe).c_str(),
                  fmt3(r.avg).c_str());
    o << line;
  }

  o << "\nPer-class recall (mean over folds)\n";
  o << "  head     recall_low recall_high BA\n";
  for (Head h : {Head::Stress, Head::Effort}) {
    const auto s = summarize(folds, h);
    const double ba = 0.5 * (s.mean_class_recall[0] + s.mean_class_recall[1]);
    char line[128];
    std::snprintf(line, sizeof line, "  %-7s  %-10s %-11s %s\n", h == Head::Stress ? "stress" : "effort",
                  fmt3(s.mean_class_recall[0]).c_str(), fmt3(s.mean_class_recall[1]).c_str(),
                  fmt3(ba).c_str());
    o << line;
  }
  o << '\n' << render_distribution(trajectory_distribution(fold_patterns(folds)));
  return o.str();
}

} // namespace capstate::eval
