#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "compaug/core.hpp"

namespace compaug::toy {

struct Target {
  bool object = false;
  int class_id = 0;
  std::array<double, 4> box{};
};

struct Sample {
  std::vector<double> features;
  Target target;
};

/// Linear detection head: features -> [objectness | class logits | box].
/// Parameters are stored row-major, one row of (feature_dim weights, bias)
/// per output.
class ToyModel {
 public:
  ToyModel(int feature_dim, int num_classes);
  ToyModel(int feature_dim, int num_classes, std::vector<double> params);

  int feature_dim() const noexcept { return feature_dim_; }
  int num_classes() const noexcept { return num_classes_; }
  int output_dim() const noexcept { return 1 + num_classes_ + 4; }
  std::size_t row_stride() const noexcept { return static_cast<std::size_t>(feature_dim_) + 1; }
  bool is_bias(std::size_t param_index) const noexcept {
    return param_index % row_stride() == static_cast<std::size_t>(feature_dim_);
  }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  std::vector<double> forward(std::span<const double> features) const;

  friend bool operator==(const ToyModel&, const ToyModel&) = default;

 private:
  int feature_dim_;
  int num_classes_;
  std::vector<double> params_;
};

/// Objectness BCE + classification CE + box MSE, unweighted.
struct LossBreakdown {
  double l_obj = 0.0;
  double l_cls = 0.0;
  double l_bbox = 0.0;
  double total = 0.0;
};

/// Objectness logits are clamped to [-30, 30]. Class and box terms only
/// apply when the target holds an object.
LossBreakdown loss_total(std::span<const double> output, const Target& target, int num_classes);
/// d(loss_total.total)/d(output).
std::vector<double> loss_output_grad(std::span<const double> output, const Target& target,
                                     int num_classes);

double mean_loss(const ToyModel& model, std::span<const Sample> batch);
/// Gradient of the batch-mean loss with respect to the model parameters.
std::vector<double> grad(const ToyModel& model, std::span<const Sample> batch);

enum class OptimizerKind { PlainGD, AdamW };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::AdamW;
  double lr = 0.001667;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0005;  // weight matrices
  double bias_decay = 0.0;       // bias terms
};

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

struct StepResult {
  std::vector<double> params;
  OptimizerState state;
};

/// PlainGD: w - lr * g. AdamW: bias-corrected moments with decoupled
/// decay, `decay[i]` being the coefficient of parameter i.
StepResult optimizer_step(std::span<const double> params, std::span<const double> gradient,
                          std::span<const double> decay, const OptimizerState& state,
                          const OptimizerConfig& config);

/// Per-parameter decay coefficients for the two parameter groups.
std::vector<double> decay_coefficients(const ToyModel& model, const OptimizerConfig& config);

/// Tracks the best validation loss. update() returns true on the first epoch
/// whose run of non-improving epochs (strict <) reaches `patience`.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);

  bool update(double val_loss);
  int best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }
  int epochs_seen() const noexcept { return epoch_; }
  int stale_epochs() const noexcept { return stale_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int stale_ = 0;
  double best_loss_ = 0.0;
};

struct TrainConfig {
  int epochs = 500;
  int patience = 10;
  int batch_size = 16;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

struct TrainResult {
  ToyModel model;  // snapshot from best_epoch
  TrainHistory history;
};

TrainResult train_loop(std::span<const Sample> train, std::span<const Sample> val,
                       const ToyModel& initial, const TrainConfig& config);

ToyModel init_model(int feature_dim, int num_classes, std::uint64_t seed, double scale = 0.1);

struct ToyProblem {
  std::vector<Sample> train;
  std::vector<Sample> val;
};

/// Gaussian features labelled by a hidden random linear teacher plus noise.
/// The first `val_fraction` share of samples goes to validation.
ToyProblem make_toy_problem(int samples, int feature_dim, int num_classes, std::uint64_t seed,
                            double val_fraction = 0.2, double noise = 0.3);

/// `epoch,train_loss,val_loss` rows.
std::string format_history_csv(const TrainHistory& history);

}  // namespace compaug::toy
