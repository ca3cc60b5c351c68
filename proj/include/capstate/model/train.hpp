#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <vector>

#include "capstate/core/csv.hpp"
#include "capstate/eval/metrics.hpp"
#include "capstate/model/adamw.hpp"
#include "capstate/model/network.hpp"

namespace capstate::model {

// Stops once `patience` consecutive post-warmup epochs fail to beat the best
// metric. Epochs inside the warmup never count as stale.
class EarlyStopping {
public:
  explicit EarlyStopping(EarlyStopConfig cfg) : cfg_(cfg) {}

  // Returns true when `metric` is a new best.
  bool update(std::size_t epoch, double metric) {
    if (metric > best_) {
      best_ = metric;
      best_epoch_ = epoch;
      stale_ = 0;
      return true;
    }
    if (epoch > cfg_.warmup) ++stale_;
    return false;
  }
  bool should_stop() const { return stale_ >= cfg_.patience; }
  double best() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }

private:
  EarlyStopConfig cfg_;
  double best_ = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
};

// Multiplies the learning rate by `factor` after `patience` epochs without a
// new best, then starts counting again.
class PlateauScheduler {
public:
  explicit PlateauScheduler(PlateauConfig cfg) : cfg_(cfg) {}

  double step(double metric, double lr) {
    if (metric > best_) {
      best_ = metric;
      stale_ = 0;
      return lr;
    }
    if (++stale_ >= cfg_.patience) {
      stale_ = 0;
      return std::max(cfg_.min_lr, lr * cfg_.factor);
    }
    return lr;
  }

private:
  PlateauConfig cfg_;
  double best_ = -std::numeric_limits<double>::infinity();
  std::size_t stale_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_ba_stress = 0.0; // NaN when undefined for the validation set
  double val_ba_effort = 0.0;
  double val_metric = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
  bool early_stopped = false;

  void write_csv(const std::filesystem::path &file) const {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file);
    if (!out) throw DataError("cannot write history", file.string());
    out << "epoch,train_loss,val_ba_stress,val_ba_effort,lr\n";
    for (const auto &e : epochs)
      out << e.epoch << ',' << csv::format_double(e.train_loss) << ','
          << csv::format_double(e.val_ba_stress) << ',' << csv::format_double(e.val_ba_effort) << ','
          << csv::format_double(e.lr) << '\n';
  }
};

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

// Inference over any number of samples in fixed-size chunks.
inline ForwardOutput predict(const ModelParams &params, const ArchConfig &arch,
                             const std::vector<ingest::WindowedSample> &samples,
                             std::size_t chunk = 256) {
  ForwardOutput out;
  for (std::size_t lo = 0; lo < samples.size(); lo += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = lo; i < std::min(samples.size(), lo + chunk); ++i) idx.push_back(i);
    const auto part = forward(params, arch, make_batch(samples, idx), Mode::Infer);
    out.p_stress.insert(out.p_stress.end(), part.p_stress.begin(), part.p_stress.end());
    out.p_effort.insert(out.p_effort.end(), part.p_effort.begin(), part.p_effort.end());
    out.U.insert(out.U.end(), part.U.begin(), part.U.end());
    out.O.insert(out.O.end(), part.O.begin(), part.O.end());
  }
  return out;
}

// Multitask loss of the whole set, dropout off.
inline LossTerms evaluate_loss(const ModelParams &params, const ArchConfig &arch,
                               const TrainConfig &cfg,
                               const std::vector<ingest::WindowedSample> &samples) {
  const auto out = predict(params, arch, samples);
  const auto b = make_batch(samples);
  return masked_multitask_loss(out.p_stress, out.p_effort, b.y_stress, b.y_effort, b.mask, cfg);
}

struct ValidationScore {
  double ba_stress = std::numeric_limits<double>::quiet_NaN();
  double ba_effort = std::numeric_limits<double>::quiet_NaN();
  double metric = 0.0; // mean of the defined heads
};

// Balanced accuracy of both heads; effort over mask = 1 windows only.
inline ValidationScore validation_score(const ForwardOutput &out, const Batch &labels) {
  ValidationScore s;
  std::vector<int> ps, ts, pe, te;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ps.push_back(eval::decide(out.O[i]));
    ts.push_back(labels.y_stress[i]);
    if (labels.mask[i]) {
      pe.push_back(eval::decide(out.U[i]));
      te.push_back(labels.y_effort[i]);
    }
  }
  int defined = 0;
  double sum = 0.0;
  try {
    s.ba_stress = eval::classification_metrics(ps, ts).balanced_accuracy;
    sum += s.ba_stress;
    ++defined;
  } catch (const UndefinedMetric &) {
  }
  if (!te.empty()) try {
      s.ba_effort = eval::classification_metrics(pe, te).balanced_accuracy;
      sum += s.ba_effort;
      ++defined;
    } catch (const UndefinedMetric &) {
    }
  if (defined == 0)
    throw UndefinedMetric("validation balanced accuracy undefined on both heads");
  s.metric = sum / defined;
  return s;
}

struct TrainOptions {
  // Called after each epoch; return false to abort training early.
  std::function<bool(const EpochRecord &)> on_epoch;
};

inline TrainResult train_fold(const std::vector<ingest::WindowedSample> &train,
                              const std::vector<ingest::WindowedSample> &val,
                              const ArchConfig &arch, const TrainConfig &cfg,
                              const TrainOptions &opts = {}) {
  arch.validate();
  cfg.validate();
  if (train.empty()) throw DataError("train_fold: empty training set");
  if (val.empty()) throw DataError("train_fold: empty validation set");
  const Batch val_batch = make_batch(val);
  {
    // Fails fast if neither head has both classes in validation.
    ForwardOutput dummy;
    dummy.U.assign(val.size(), 0.0);
    dummy.O.assign(val.size(), 0.0);
    validation_score(dummy, val_batch);
  }

  const Rng root(cfg.seed);
  TrainResult result;
  result.params = init_params(arch, root.substream("init").next_u64());
  ModelParams best = result.params;
  AdamWState opt;
  EarlyStopping stopper(cfg.early_stop);
  PlateauScheduler plateau(cfg.plateau);
  double lr = cfg.lr;

  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto shuffle_rng = root.substream("shuffle", epoch);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size, ++batch_index) {
      const std::vector<std::size_t> idx(
          order.begin() + static_cast<std::ptrdiff_t>(lo),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), lo + cfg.batch_size)));
      const auto drop_seed =
          root.substream("dropout", epoch * 1000003 + batch_index).next_u64();
      auto g = compute_gradients(result.params, arch, cfg, make_batch(train, idx), Mode::Train,
                                 drop_seed);
      loss_sum += g.loss.total * static_cast<double>(idx.size());
      adamw_step(result.params, g.grads, opt, lr, cfg.weight_decay, cfg.grad_clip_norm);
    }
    const auto score = validation_score(predict(result.params, arch, val), val_batch);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(train.size()), score.ba_stress,
                    score.ba_effort, score.metric, lr};
    result.history.epochs.push_back(rec);
    if (stopper.update(epoch, score.metric)) best = result.params;
    lr = plateau.step(score.metric, lr);
    if (opts.on_epoch && !opts.on_epoch(rec)) break;
    if (stopper.should_stop()) {
      result.history.early_stopped = true;
      break;
    }
  }
  result.history.best_epoch = stopper.best_epoch();
  result.history.best_metric = stopper.best();
  result.params = std::move(best);
  return result;
}

} // namespace capstate::model
