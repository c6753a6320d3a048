#include "compaug/toytrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace compaug::toy {

namespace {

constexpr double kLogitClamp = 30.0;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_output(std::span<const double> output, int num_classes) {
  if (output.size() != static_cast<std::size_t>(1 + num_classes + 4)) {
    throw Error(ErrorCode::InvalidArgument, "model output has wrong arity");
  }
}

}  // namespace

ToyModel::ToyModel(int feature_dim, int num_classes)
    : ToyModel(feature_dim, num_classes,
               std::vector<double>(static_cast<std::size_t>(1 + num_classes + 4) *
                                       (static_cast<std::size_t>(std::max(feature_dim, 0)) + 1),
                                   0.0)) {}

ToyModel::ToyModel(int feature_dim, int num_classes, std::vector<double> params)
    : feature_dim_(feature_dim), num_classes_(num_classes), params_(std::move(params)) {
  if (feature_dim < 1 || num_classes < 1) {
    throw Error(ErrorCode::InvalidArgument, "toy model needs feature_dim >= 1 and num_classes >= 1");
  }
  if (params_.size() != static_cast<std::size_t>(output_dim()) * row_stride()) {
    throw Error(ErrorCode::InvalidArgument, "parameter vector has wrong length");
  }
  for (double p : params_) {
    if (!std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "non-finite model parameter");
  }
}

std::vector<double> ToyModel::forward(std::span<const double> features) const {
  if (features.size() != static_cast<std::size_t>(feature_dim_)) {
    throw Error(ErrorCode::InvalidArgument, "feature vector has wrong length");
  }
  std::vector<double> out(static_cast<std::size_t>(output_dim()));
  for (std::size_t o = 0; o < out.size(); ++o) {
    const double* row = params_.data() + o * row_stride();
    double acc = row[feature_dim_];
    for (std::size_t i = 0; i < features.size(); ++i) acc += row[i] * features[i];
    out[o] = acc;
  }
  return out;
}

LossBreakdown loss_total(std::span<const double> output, const Target& target, int num_classes) {
  check_output(output, num_classes);
  LossBreakdown l;
  const double z = std::clamp(output[0], -kLogitClamp, kLogitClamp);
  const double t = target.object ? 1.0 : 0.0;
  // Stable BCE with logits: max(z,0) - z t + log(1 + e^-|z|).
  l.l_obj = std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
  if (target.object) {
    if (target.class_id < 0 || target.class_id >= num_classes) {
      throw Error(ErrorCode::ClassOutOfRange, "target class out of range");
    }
    const auto logits = output.subspan(1, static_cast<std::size_t>(num_classes));
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    l.l_cls = mx + std::log(sum) - logits[static_cast<std::size_t>(target.class_id)];
    const auto box = output.subspan(1 + static_cast<std::size_t>(num_classes), 4);
    for (std::size_t i = 0; i < 4; ++i) {
      const double d = box[i] - target.box[i];
      l.l_bbox += d * d;
    }
    l.l_bbox /= 4.0;
  }
  l.total = l.l_obj + l.l_cls + l.l_bbox;
  return l;
}

std::vector<double> loss_output_grad(std::span<const double> output, const Target& target,
                                     int num_classes) {
  check_output(output, num_classes);
  std::vector<double> g(output.size(), 0.0);
  const double t = target.object ? 1.0 : 0.0;
  if (std::abs(output[0]) < kLogitClamp) g[0] = sigmoid(output[0]) - t;
  if (target.object) {
    const auto logits = output.subspan(1, static_cast<std::size_t>(num_classes));
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      g[1 + k] = std::exp(logits[k] - mx) / sum - (static_cast<int>(k) == target.class_id ? 1.0 : 0.0);
    }
    const std::size_t b0 = 1 + static_cast<std::size_t>(num_classes);
    for (std::size_t i = 0; i < 4; ++i) g[b0 + i] = 2.0 * (output[b0 + i] - target.box[i]) / 4.0;
  }
  return g;
}

double mean_loss(const ToyModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw Error(ErrorCode::EmptySplit, "cannot average loss over an empty batch");
  double sum = 0.0;
  for (const auto& s : batch) sum += loss_total(model.forward(s.features), s.target, model.num_classes()).total;
  return sum / static_cast<double>(batch.size());
}

std::vector<double> grad(const ToyModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw Error(ErrorCode::EmptySplit, "cannot differentiate an empty batch");
  std::vector<double> g(model.params().size(), 0.0);
  const std::size_t stride = model.row_stride();
  const std::size_t d = static_cast<std::size_t>(model.feature_dim());
  for (const auto& s : batch) {
    const auto dout = loss_output_grad(model.forward(s.features), s.target, model.num_classes());
    for (std::size_t o = 0; o < dout.size(); ++o) {
      double* row = g.data() + o * stride;
      for (std::size_t i = 0; i < d; ++i) row[i] += dout[o] * s.features[i];
      row[d] += dout[o];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& v : g) v *= inv;
  return g;
}

StepResult optimizer_step(std::span<const double> params, std::span<const double> gradient,
                          std::span<const double> decay, const OptimizerState& state,
                          const OptimizerConfig& config) {
  if (gradient.size() != params.size()) {
    throw Error(ErrorCode::InvalidArgument, "gradient and parameter shapes differ");
  }
  StepResult r{{params.begin(), params.end()}, state};
  if (config.kind == OptimizerKind::PlainGD) {
    for (std::size_t i = 0; i < params.size(); ++i) r.params[i] -= config.lr * gradient[i];
    ++r.state.step;
    return r;
  }
  if (!decay.empty() && decay.size() != params.size()) {
    throw Error(ErrorCode::InvalidArgument, "decay coefficients and parameter shapes differ");
  }
  auto& st = r.state;
  st.m.resize(params.size(), 0.0);
  st.v.resize(params.size(), 0.0);
  ++st.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradient[i];
    st.m[i] = config.beta1 * st.m[i] + (1.0 - config.beta1) * g;
    st.v[i] = config.beta2 * st.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = st.m[i] / bc1;
    const double v_hat = st.v[i] / bc2;
    const double wd = decay.empty() ? 0.0 : decay[i];
    r.params[i] -= config.lr * (m_hat / (std::sqrt(v_hat) + config.eps) + wd * params[i]);
  }
  return r;
}

std::vector<double> decay_coefficients(const ToyModel& model, const OptimizerConfig& config) {
  std::vector<double> d(model.params().size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = model.is_bias(i) ? config.bias_decay : config.weight_decay;
  return d;
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
  if (patience < 1) throw Error(ErrorCode::InvalidArgument, "patience must be >= 1");
}

bool EarlyStopping::update(double val_loss) {
  ++epoch_;
  if (epoch_ == 1 || val_loss < best_loss_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch_;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

TrainResult train_loop(std::span<const Sample> train, std::span<const Sample> val,
                       const ToyModel& initial, const TrainConfig& config) {
  if (train.empty() || val.empty()) throw Error(ErrorCode::EmptySplit, "training and validation splits must be non-empty");
  if (config.epochs < 1 || config.batch_size < 1 || !(config.optimizer.lr > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "epochs, batch size and learning rate must be positive");
  }
  EarlyStopping stopper(config.patience);
  ToyModel model = initial;
  ToyModel best = initial;
  OptimizerState state;
  const auto decay = decay_coefficients(model, config.optimizer);
  TrainResult result{initial, {}};

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Sample> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) {
      RngStream rng = derive_stream(config.seed, static_cast<std::uint64_t>(epoch));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
      }
    }
    double train_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      train_sum += mean_loss(model, batch) * static_cast<double>(batch.size());
      auto step = optimizer_step(model.params(), grad(model, batch), decay, state, config.optimizer);
      std::copy(step.params.begin(), step.params.end(), model.params().begin());
      state = std::move(step.state);
    }
    const double val_loss = mean_loss(model, val);
    result.history.epochs.push_back({epoch, train_sum / static_cast<double>(train.size()), val_loss});
    const bool stop = stopper.update(val_loss);
    if (stopper.best_epoch() == epoch) best = model;
    if (stop) {
      result.history.stopped_early = true;
      break;
    }
  }
  result.model = best;
  result.history.best_epoch = stopper.best_epoch();
  result.history.best_val_loss = stopper.best_loss();
  return result;
}

ToyModel init_model(int feature_dim, int num_classes, std::uint64_t seed, double scale) {
  ToyModel model(feature_dim, num_classes);
  RngStream rng = derive_stream(seed, 0xC0FFEEULL);
  for (double& p : model.params()) p = scale * rng.normal();
  return model;
}

ToyProblem make_toy_problem(int samples, int feature_dim, int num_classes, std::uint64_t seed,
                            double val_fraction, double noise) {
  if (samples < 2) throw Error(ErrorCode::InvalidArgument, "need at least two samples");
  const ToyModel teacher = init_model(feature_dim, num_classes, seed ^ 0x7EAC4E5ULL, 1.0);
  ToyProblem p;
  const int n_val = std::clamp(static_cast<int>(std::lround(samples * val_fraction)), 1, samples - 1);
  for (int i = 0; i < samples; ++i) {
    RngStream rng = derive_stream(seed, static_cast<std::uint64_t>(i));
    Sample s;
    s.features.resize(static_cast<std::size_t>(feature_dim));
    for (double& f : s.features) f = rng.normal();
    const auto out = teacher.forward(s.features);
    s.target.object = out[0] + noise * rng.normal() > 0.0;
    const auto cls = out.begin() + 1;
    s.target.class_id = static_cast<int>(std::max_element(cls, cls + num_classes) - cls);
    for (std::size_t b = 0; b < 4; ++b) {
      const double v = 1.0 / (1.0 + std::exp(-out[1 + static_cast<std::size_t>(num_classes) + b]));
      s.target.box[b] = std::clamp(v + 0.05 * noise * rng.normal(), 0.0, 1.0);
    }
    (i < n_val ? p.val : p.train).push_back(std::move(s));
  }
  return p;
}

std::string format_history_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,val_loss\n";
  char buf[128];
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", e.epoch, e.train_loss, e.val_loss);
    out += buf;
  }
  return out;
}

}  // namespace compaug::toy
