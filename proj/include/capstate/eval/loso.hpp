#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "capstate/cardiac/normalize.hpp"
#include "capstate/core/digest.hpp"
#include "capstate/core/error.hpp"
#include "capstate/core/random.hpp"
#include "capstate/eda/log_transform.hpp"
#include "capstate/eval/metrics.hpp"
#include "capstate/eval/state_space.hpp"
#include "capstate/ingest/labels.hpp"
#include "capstate/ingest/sample.hpp"
#include "capstate/model/checkpoint.hpp"
#include "capstate/model/train.hpp"

namespace capstate::eval {

using ingest::WindowedSample;
using Dataset = std::map<std::string, std::vector<WindowedSample>>;

enum class NormalizationMode { SelfPerSubject, TrainFoldStats };

inline std::string to_string(NormalizationMode m) {
  return m == NormalizationMode::SelfPerSubject ? "self_per_subject" : "train_fold_stats";
}

inline NormalizationMode parse_normalization_mode(const std::string &s) {
  if (s == "self_per_subject") return NormalizationMode::SelfPerSubject;
  if (s == "train_fold_stats") return NormalizationMode::TrainFoldStats;
  throw ParameterError("unknown normalization mode '" + s + "'");
}

inline std::string to_string(ingest::LabelScheme s) {
  return s == ingest::LabelScheme::Primary ? "primary" : "c2_stress_low";
}

inline ingest::LabelScheme parse_label_scheme(const std::string &s) {
  if (s == "primary") return ingest::LabelScheme::Primary;
  if (s == "c2_stress_low") return ingest::LabelScheme::C2StressLow;
  throw ParameterError("unknown sensitivity scheme '" + s + "'");
}

struct LosoConfig {
  model::ArchConfig arch;
  model::TrainConfig train;
  NormalizationMode normalization = NormalizationMode::SelfPerSubject;
  ingest::LabelScheme label_scheme = ingest::LabelScheme::Primary;
  std::size_t inner_val_subjects = 3;
};

// Location/scale for one normalization group: per-dimension for the two
// feature vectors, one scalar pair per input series (dim 0 IBI, dim 1 EDA).
struct FeatureStats {
  cardiac::ZScoreStats hrv, eda, series;
  friend bool operator==(const FeatureStats &, const FeatureStats &) = default;
};

// Expects the EDA features already log-transformed.
inline FeatureStats fit_feature_stats(const std::vector<const WindowedSample *> &rows) {
  std::vector<std::array<double, ingest::kHrvDims>> h;
  std::vector<std::array<double, ingest::kEdaDims>> e;
  for (const auto *s : rows) {
    h.push_back(s->f_hrv);
    e.push_back(s->f_eda);
  }
  FeatureStats st;
  st.hrv = cardiac::fit_zscore(h, ingest::kHrvDims);
  st.eda = cardiac::fit_zscore(e, ingest::kEdaDims);
  st.series = {{0.0, 0.0}, {0.0, 0.0}};
  for (int ch = 0; ch < 2; ++ch) {
    double sum = 0.0, n = 0.0;
    for (const auto *s : rows)
      for (double v : ch == 0 ? s->x_ibi : s->x_eda) {
        sum += v;
        n += 1.0;
      }
    const double m = sum / n;
    double ss = 0.0;
    for (const auto *s : rows)
      for (double v : ch == 0 ? s->x_ibi : s->x_eda) ss += (v - m) * (v - m);
    st.series.mean[ch] = m;
    st.series.sd[ch] = std::sqrt(ss / n);
  }
  return st;
}

inline void apply_feature_stats(const FeatureStats &st, WindowedSample &s) {
  st.hrv.apply(s.f_hrv);
  st.eda.apply(s.f_eda);
  auto z = [&](std::vector<double> &x, int ch) {
    const double sd = std::max(st.series.sd[ch], cardiac::kSdFloor);
    for (auto &v : x) v = (v - st.series.mean[ch]) / sd;
  };
  z(s.x_ibi, 0);
  z(s.x_eda, 1);
}

inline std::vector<WindowedSample> relabel(std::vector<WindowedSample> v,
                                           ingest::LabelScheme scheme) {
  for (auto &s : v) s.labels = ingest::relabel_for_sensitivity(s.condition, s.labels, scheme);
  return v;
}

// Everything fitted for one fold. Built from the training pool alone: the
// held-out subject's windows are not an input.
struct FoldModel {
  std::string held_out;
  std::vector<std::string> train_subjects, val_subjects;
  eda::LogTransform log_transform; // over the EDA feature dimensions
  // SelfPerSubject: one entry per pool subject. TrainFoldStats: one pooled
  // entry under the key "pool".
  std::map<std::string, FeatureStats> pool_stats;
  model::ModelParams params;
  model::TrainHistory history;
  std::string params_digest;
};

struct WindowPrediction {
  Condition condition = Condition::C1;
  double window_start_s = 0.0;
  double U = 0.0, O = 0.0;
  int stress_label = 0;
  int effort_label = -1; // -1 when undefined
  int mask = 0;
  friend bool operator==(const WindowPrediction &, const WindowPrediction &) = default;
};

struct FoldResult {
  std::string subject_id;
  std::vector<WindowPrediction> windows;
  std::optional<ClassMetrics> stress, effort; // empty when undefined
  std::string stress_undefined, effort_undefined;
  FeatureStats held_out_stats; // what was applied to the held-out windows
};

// Stress over all windows, effort over mask = 1 windows only.
inline void score_fold(FoldResult &r) {
  std::vector<int> ps, ts, pe, te;
  for (const auto &w : r.windows) {
    ps.push_back(decide(w.O));
    ts.push_back(w.stress_label);
    if (w.mask) {
      pe.push_back(decide(w.U));
      te.push_back(w.effort_label);
    }
  }
  r.stress.reset();
  r.effort.reset();
  r.stress_undefined.clear();
  r.effort_undefined.clear();
  try {
    if (ts.empty()) throw UndefinedMetric("no windows");
    r.stress = classification_metrics(ps, ts);
  } catch (const UndefinedMetric &e) {
    r.stress_undefined = e.what();
  }
  try {
    if (te.empty()) throw UndefinedMetric("no effort-valid windows");
    r.effort = classification_metrics(pe, te);
  } catch (const UndefinedMetric &e) {
    r.effort_undefined = e.what();
  }
}

// Sensitivity harness: relabel stored predictions and recompute metrics.
// Only stress labels change, so effort metrics are untouched by design.
inline FoldResult rescore(FoldResult r, ingest::LabelScheme scheme) {
  for (auto &w : r.windows) {
    LabelPair l{static_cast<StressLabel>(w.stress_label),
                w.effort_label < 0 ? EffortLabel::Undefined
                                   : static_cast<EffortLabel>(w.effort_label),
                w.mask};
    l = ingest::relabel_for_sensitivity(w.condition, l, scheme);
    w.stress_label = static_cast<int>(l.stress);
  }
  score_fold(r);
  return r;
}

namespace detail {

inline std::vector<const WindowedSample *> pointers(const std::vector<WindowedSample> &v) {
  std::vector<const WindowedSample *> p;
  for (const auto &s : v) p.push_back(&s);
  return p;
}

inline std::vector<WindowedSample> transformed(const std::vector<WindowedSample> &v,
                                               const eda::LogTransform &t) {
  auto out = v;
  for (auto &s : out) t.apply(s.f_eda);
  return out;
}

inline std::uint64_t fold_seed(std::uint64_t seed, const std::string &subject) {
  return Rng(seed).substream("fold:" + subject).next_u64();
}

} // namespace detail

inline std::vector<std::string>
choose_inner_validation(const std::vector<std::string> &pool, const std::string &held_out,
                        std::size_t wanted, std::uint64_t seed) {
  if (pool.size() < 2) throw DataError("LOSO: need at least 2 subjects in the training pool");
  // At most a third of the pool, at least one subject.
  const std::size_t n = std::max<std::size_t>(1, std::min(wanted, pool.size() / 3));
  auto order = pool;
  auto rng = Rng(seed).substream("inner_val:" + held_out);
  rng.shuffle(order);
  order.resize(n);
  std::sort(order.begin(), order.end());
  return order;
}

// Fits log-transform flags, normalization, and the network on `pool`, which
// must not contain `held_out`.
inline FoldModel fit_fold(const Dataset &pool, const std::string &held_out,
                          const LosoConfig &cfg, const model::TrainOptions &opts = {}) {
  if (pool.count(held_out)) throw ParameterError("fit_fold: pool contains the held-out subject");
  FoldModel fm;
  fm.held_out = held_out;
  std::vector<std::string> ids;
  for (const auto &[id, w] : pool) ids.push_back(id);
  fm.val_subjects = choose_inner_validation(ids, held_out, cfg.inner_val_subjects, cfg.train.seed);
  for (const auto &id : ids)
    if (!std::binary_search(fm.val_subjects.begin(), fm.val_subjects.end(), id))
      fm.train_subjects.push_back(id);

  std::vector<std::array<double, ingest::kEdaDims>> eda_rows;
  for (const auto &[id, w] : pool)
    for (const auto &s : w) eda_rows.push_back(s.f_eda);
  fm.log_transform = eda::fit_log_transform(eda_rows, ingest::kEdaDims);

  Dataset ready;
  for (const auto &[id, w] : pool) ready[id] = detail::transformed(relabel(w, cfg.label_scheme), fm.log_transform);
  if (cfg.normalization == NormalizationMode::SelfPerSubject) {
    for (auto &[id, w] : ready) {
      const auto st = fit_feature_stats(detail::pointers(w));
      for (auto &s : w) apply_feature_stats(st, s);
      fm.pool_stats.emplace(id, st);
    }
  } else {
    std::vector<const WindowedSample *> all;
    for (const auto &[id, w] : ready)
      for (const auto &s : w) all.push_back(&s);
    const auto st = fit_feature_stats(all);
    for (auto &[id, w] : ready)
      for (auto &s : w) apply_feature_stats(st, s);
    fm.pool_stats.emplace("pool", st);
  }

  std::vector<WindowedSample> train, val;
  for (const auto &id : fm.train_subjects) train.insert(train.end(), ready[id].begin(), ready[id].end());
  for (const auto &id : fm.val_subjects) val.insert(val.end(), ready[id].begin(), ready[id].end());
  auto tcfg = cfg.train;
  tcfg.seed = detail::fold_seed(cfg.train.seed, held_out);
  auto res = model::train_fold(train, val, cfg.arch, tcfg, opts);
  fm.params = std::move(res.params);
  fm.history = std::move(res.history);
  fm.params_digest = hex_digest(model::params_to_json(fm.params).dump());
  return fm;
}

inline FoldResult evaluate_held_out(const FoldModel &fm, const std::vector<WindowedSample> &raw,
                                    const LosoConfig &cfg) {
  if (raw.empty()) throw DataError("held-out subject '" + fm.held_out + "' has no windows");
  FoldResult r;
  r.subject_id = fm.held_out;
  auto w = detail::transformed(relabel(raw, cfg.label_scheme), fm.log_transform);
  r.held_out_stats = cfg.normalization == NormalizationMode::SelfPerSubject
                         ? fit_feature_stats(detail::pointers(w))
                         : fm.pool_stats.at("pool");
  for (auto &s : w) apply_feature_stats(r.held_out_stats, s);
  const auto out = model::predict(fm.params, cfg.arch, w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto &l = w[i].labels;
    r.windows.push_back({w[i].condition, w[i].window_start_s, out.U[i], out.O[i],
                         static_cast<int>(l.stress),
                         l.effort == EffortLabel::Undefined ? -1 : static_cast<int>(l.effort),
                         l.mask});
  }
  score_fold(r);
  return r;
}

inline Dataset without(const Dataset &d, const std::string &subject) {
  Dataset pool = d;
  pool.erase(subject);
  return pool;
}

inline void validate_dataset(const Dataset &d) {
  if (d.size() < 3) throw DataError("LOSO: need at least 3 subjects");
  for (const auto &[id, w] : d) {
    bool seen[3] = {false, false, false};
    for (const auto &s : w) seen[index_of(s.condition)] = true;
    if (seen[0] + seen[1] + seen[2] < 2)
      throw DataError("LOSO: subject '" + id + "' has windows from fewer than 2 conditions");
  }
}

struct LosoOptions {
  std::size_t parallel_folds = 1;
  // Invoked from worker threads as each fold completes.
  std::function<void(const FoldModel &, const FoldResult &)> on_fold;
};

[[noreturn]] inline void rethrow_with_context(const std::string &ctx) {
  try {
    throw;
  } catch (const NumericalError &e) {
    throw NumericalError(ctx + ": " + e.what(), e.residual());
  } catch (const ParameterError &e) {
    throw ParameterError(ctx + ": " + e.what());
  } catch (const Error &e) {
    throw DataError(ctx + ": " + e.what());
  }
}

struct LosoRun {
  std::vector<FoldModel> models;
  std::vector<FoldResult> folds; // in subject order
};

inline LosoRun run_loso(const Dataset &dataset, const LosoConfig &cfg,
                        const LosoOptions &opts = {}) {
  validate_dataset(dataset);
  cfg.arch.validate();
  cfg.train.validate();
  std::vector<std::string> ids;
  for (const auto &[id, w] : dataset) ids.push_back(id);
  LosoRun run;
  run.models.resize(ids.size());
  run.folds.resize(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      try {
        try {
          run.models[i] = fit_fold(without(dataset, ids[i]), ids[i], cfg);
          run.folds[i] = evaluate_held_out(run.models[i], dataset.at(ids[i]), cfg);
          if (opts.on_fold) opts.on_fold(run.models[i], run.folds[i]);
        } catch (const Error &) {
          rethrow_with_context("fold " + ids[i]);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(opts.parallel_folds, 1, ids.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
  return run;
}

inline std::vector<StatePrediction> state_predictions(const FoldResult &r) {
  std::vector<StatePrediction> p;
  for (const auto &w : r.windows) p.push_back({w.condition, w.U, w.O});
  return p;
}

inline TrajectorySummary condition_centroids(const FoldResult &r) {
  return condition_centroids(r.subject_id, state_predictions(r));
}

} // namespace capstate::eval
