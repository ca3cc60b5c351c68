#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "capstate/eval/loso.hpp"
#include "capstate/eval/report.hpp"
#include "capstate/ingest/loader.hpp"
#include "capstate/pipeline/config.hpp"
#include "capstate/pipeline/featurize.hpp"
#include "capstate/pipeline/manifest.hpp"
#include "capstate/pipeline/synth.hpp"
#include "capstate/pipeline/windows_io.hpp"

namespace capstate::pipeline {

// Output layout under output_root:
//   manifest.json
//   windows/windows_<subject>.csv
//   results/fold_<subject>.csv, history_<subject>.csv, summary.csv, stats.json
//   results/report.txt and report tables
inline fs::path windows_dir(const PipelineConfig &c) { return c.output_root / "windows"; }
inline fs::path results_dir(const PipelineConfig &c) { return c.output_root / "results"; }

struct SessionPaths {
  std::string subject;
  Condition condition;
  fs::path ecg, eda; // relative to data_root
};

// sessions.csv when present, otherwise every <subject>/ecg_<c>.csv with its
// matching EDA file.
inline std::vector<SessionPaths> discover_sessions(const fs::path &root) {
  if (!fs::is_directory(root)) throw DataError("data root does not exist", root.string());
  std::vector<SessionPaths> out;
  if (fs::exists(root / "sessions.csv")) {
    for (const auto &s : ingest::read_sessions(root))
      out.push_back({s.subject_id, s.condition, s.ecg_file, s.eda_file});
    return out;
  }
  std::vector<fs::path> dirs;
  for (const auto &e : fs::directory_iterator(root))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto &d : dirs) {
    const auto subject = d.filename().string();
    for (auto c : kAllConditions) {
      const auto ecg = ingest::default_ecg_path(subject, c);
      const auto eda = ingest::default_eda_path(subject, c);
      if (fs::exists(root / ecg) && fs::exists(root / eda)) out.push_back({subject, c, ecg, eda});
    }
  }
  if (out.empty()) throw DataError("no recordings found", root.string());
  return out;
}

inline std::vector<fs::path> cmd_preprocess(const PipelineConfig &cfg) {
  cfg.validate();
  StageRecord rec;
  rec.started_utc = utc_now();
  const auto sessions = discover_sessions(cfg.data_root);
  std::map<std::string, std::vector<ingest::WindowedSample>> by_subject;
  std::vector<fs::path> inputs;
  for (const auto &s : sessions) {
    const auto r = ingest::load_recording(cfg.data_root, s.subject, s.condition);
    inputs.push_back(cfg.data_root / s.ecg);
    inputs.push_back(cfg.data_root / s.eda);
    std::vector<ingest::WindowedSample> w;
    try {
      w = featurize_recording(r, cfg.featurize);
    } catch (const Error &) {
      eval::rethrow_with_context("subject " + s.subject + " condition " +
                                 std::string(to_string(s.condition)) + " [" +
                                 (cfg.data_root / s.ecg).string() + "]");
    }
    auto &dst = by_subject[s.subject];
    dst.insert(dst.end(), w.begin(), w.end());
  }
  std::vector<fs::path> outputs;
  for (const auto &[subject, w] : by_subject) {
    const auto f = windows_file(windows_dir(cfg), subject);
    write_windows_csv(f, w);
    outputs.push_back(f);
  }
  rec.inputs = digest_files(cfg.data_root, inputs);
  rec.outputs = digest_files(cfg.output_root, outputs);
  rec.finished_utc = utc_now();
  record_stage(cfg.output_root, cfg, "preprocess", std::move(rec));
  return outputs;
}

inline eval::Dataset read_windowed_dataset(const fs::path &dir) {
  if (!fs::is_directory(dir)) throw DataError("missing windowed dataset", dir.string());
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("windows_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no windows_<subject>.csv files", dir.string());
  eval::Dataset d;
  for (const auto &f : files) {
    auto w = read_windows_csv(f);
    if (w.empty()) throw DataError("window file has no rows", f.string());
    const auto id = w.front().subject_id;
    for (auto &s : w) {
      if (s.subject_id != id) throw DataError("mixed subjects", f.string());
      d[id].push_back(std::move(s));
    }
  }
  return d;
}

struct EvaluateOutput {
  eval::LosoRun run;
  std::vector<fs::path> files;
};

inline EvaluateOutput cmd_evaluate(const PipelineConfig &cfg) {
  cfg.validate();
  StageRecord rec;
  rec.started_utc = utc_now();
  const auto dataset = read_windowed_dataset(windows_dir(cfg));
  std::vector<fs::path> inputs;
  for (const auto &[id, w] : dataset) inputs.push_back(windows_file(windows_dir(cfg), id));
  const auto out_dir = results_dir(cfg);
  fs::create_directories(out_dir);
  // Stale fold files from an earlier run with other subjects would leak into
  // the report.
  for (const auto &e : fs::directory_iterator(out_dir)) {
    const auto n = e.path().filename().string();
    if (n.rfind("fold_", 0) == 0 || n.rfind("history_", 0) == 0) fs::remove(e.path());
  }
  eval::LosoOptions opts;
  opts.parallel_folds = cfg.parallel_folds;
  opts.on_fold = [&](const eval::FoldModel &m, const eval::FoldResult &r) {
    eval::write_fold_csv(eval::fold_file(out_dir, r.subject_id), r);
    m.history.write_csv(out_dir / ("history_" + r.subject_id + ".csv"));
  };
  EvaluateOutput out;
  out.run = eval::run_loso(dataset, cfg.loso(), opts);
  for (const auto &f : out.run.folds) {
    out.files.push_back(eval::fold_file(out_dir, f.subject_id));
    out.files.push_back(out_dir / ("history_" + f.subject_id + ".csv"));
  }
  eval::write_summary_csv(out_dir / "summary.csv", out.run.folds);
  {
    auto stats = eval::build_stats(out.run.folds, cfg.sensitivity_scheme);
    json folds = json::object();
    for (const auto &m : out.run.models)
      folds[m.held_out] = {{"train_subjects", m.train_subjects},
                           {"inner_validation_subjects", m.val_subjects},
                           {"best_epoch", m.history.best_epoch},
                           {"epochs_run", m.history.epochs.size()},
                           {"log_transform_flags", m.log_transform.flags},
                           {"params_digest", m.params_digest}};
    stats["folds"] = folds;
    std::ofstream s(out_dir / "stats.json");
    if (!s) throw DataError("cannot write stats", (out_dir / "stats.json").string());
    s << stats.dump(2) << '\n';
  }
  out.files.push_back(out_dir / "summary.csv");
  out.files.push_back(out_dir / "stats.json");
  rec.inputs = digest_files(cfg.output_root, inputs);
  rec.outputs = digest_files(cfg.output_root, out.files);
  rec.finished_utc = utc_now();
  record_stage(cfg.output_root, cfg, "evaluate", std::move(rec));
  return out;
}

// Report from the fold files alone.
inline std::string cmd_report(const fs::path &dir) {
  const auto folds = eval::read_fold_dir(dir);
  const auto text = eval::render_report(folds);
  {
    std::ofstream o(dir / "report.txt");
    if (!o) throw DataError("cannot write report", (dir / "report.txt").string());
    o << text;
  }
  {
    std::ofstream o(dir / "report_summary.csv");
    o << "head,n,mean_ba,sd_ba,median_ba,min_ba,max_ba,mean_macro_f1,mean_recall_low,mean_recall_high\n";
    for (auto h : {eval::Head::Stress, eval::Head::Effort}) {
      const auto s = eval::summarize(folds, h);
      auto f = [](double v) { return std::isfinite(v) ? csv::format_double(v) : std::string("NA"); };
      o << (h == eval::Head::Stress ? "stress" : "effort") << ',' << s.n << ',' << f(s.mean) << ','
        << f(s.sd) << ',' << f(s.median) << ',' << f(s.min) << ',' << f(s.max) << ','
        << f(s.mean_f1) << ',' << f(s.mean_class_recall[0]) << ',' << f(s.mean_class_recall[1])
        << '\n';
    }
  }
  {
    std::ofstream o(dir / "report_trajectories.csv");
    o << "subject,pattern\n";
    for (const auto &f : folds) {
      const auto p = eval::condition_centroids(f).pattern;
      o << f.subject_id << ',' << (p ? eval::to_string(*p) : "NA") << '\n';
    }
  }
  return text;
}

inline std::vector<fs::path> cmd_synth(const fs::path &out, const SynthStudySpec &spec) {
  const auto recs = generate_study(spec);
  std::vector<ingest::SessionEntry> sessions;
  std::vector<fs::path> files;
  for (const auto &r : recs) {
    ingest::write_recording(out, r);
    const auto ecg = ingest::default_ecg_path(r.subject_id, r.condition);
    const auto eda = ingest::default_eda_path(r.subject_id, r.condition);
    sessions.push_back({r.subject_id, r.condition, ecg, eda});
    files.push_back(out / ecg);
    files.push_back(out / eda);
  }
  ingest::write_sessions(out, sessions);
  files.push_back(out / "sessions.csv");
  return files;
}

} // namespace capstate::pipeline
