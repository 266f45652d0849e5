#include "floodcast/nn/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "floodcast/errors.hpp"
#include "floodcast/nn/loss.hpp"

namespace floodcast {

Adam::Adam(const AdamConfig& cfg, const std::vector<const Tensor*>& params) : cfg_(cfg) {
  for (const Tensor* p : params) {
    m_.emplace_back(p->shape(), 0.0);
    v_.emplace_back(p->shape(), 0.0);
  }
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw ContractError("Adam: parameter count changed");
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i]->data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    if (g.size() != p.size() || m.size() != p.size()) throw ContractError("Adam: shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      p[k] -= cfg_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.epsilon);
    }
  }
}

double TrainReport::mean_epoch_seconds() const {
  if (epochs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : epochs) s += e.seconds;
  return s / static_cast<double>(epochs.size());
}

LossAccuracy evaluate_loss(const ModelParams& params, const ModelConfig& cfg, const Dataset& data,
                           std::size_t batch_size) {
  if (data.empty()) throw ConfigError("cannot evaluate on an empty dataset");
  const auto scores = predict_scores(params, cfg, data, batch_size);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double p = scores[i];
    loss += data[i].label ? -cfg.loss_weight * std::log(std::max(p, kLogClamp)) : -std::log(std::max(1.0 - p, kLogClamp));
    correct += static_cast<std::size_t>((p > 0.5 ? 1 : 0) == data[i].label);
  }
  const double n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

TrainResult train(const ModelConfig& cfg, const Dataset& train_set, const Dataset& val_set,
                  const TrainOptions& options) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (val_set.empty()) throw ConfigError("validation set is empty");
  const Shape sample_shape{cfg.num_variables, cfg.window};
  for (const auto* set : {&train_set, &val_set})
    for (const auto& s : *set) {
      if (s.features.shape() != sample_shape) {
        throw DimensionError("sample shape " + shape_string(s.features.shape()) + " does not match configured " +
                             shape_string(sample_shape));
      }
      if (s.label != 0 && s.label != 1) throw ContractError("labels must be 0 or 1");
    }

  const RngState root(cfg.seed);
  ModelParams params;
  if (options.initial) {
    params = *options.initial;
    check_params(cfg, params);
  } else {
    RngState init_rng = root.split(1);
    params = init_model(cfg, init_rng);
    if (options.fit_scaler) params.scaler = InputScaler::fit(train_set);
  }

  Adam adam(cfg.optimizer, parameter_tensors(static_cast<const ModelParams&>(params)));
  TrainResult result{params, {}};
  double best_loss = std::numeric_limits<double>::infinity();
  double reference_loss = best_loss;  // last improvement larger than the min delta
  std::size_t waited = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t e = 0; e < cfg.max_epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t epoch = options.epoch_offset + e + 1;
    RngState shuffle_rng = root.split(2).split(epoch);
    RngState dropout_rng = root.split(3).split(epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const auto labels = batch_labels(train_set, idx);

      Tape tape;
      ModelVars vars = bind_parameters(tape, params, true);
      Var probs = forward(vars, params, cfg, tape.constant(stack_batch(train_set, idx), "batch"), Mode::Train,
                          dropout_rng);
      Var loss = weighted_cross_entropy(probs, labels, cfg.loss_weight);
      const double lv = loss.value().item();
      if (!std::isfinite(lv)) {
        throw DivergenceError(static_cast<int>(epoch), static_cast<int>(batch_no + 1), "loss is " + std::to_string(lv));
      }
      tape.backward(loss);

      std::vector<const Tensor*> grads;
      for (const Var& v : flat_vars(vars)) grads.push_back(&tape.grad(v.id()));
      for (const Tensor* g : grads) {
        if (!g->all_finite()) {
          throw DivergenceError(static_cast<int>(epoch), static_cast<int>(batch_no + 1), "non-finite gradient");
        }
      }
      adam.step(parameter_tensors(params), grads);
      if (params.fastgrnn && cfg.sparsity.active()) *params.fastgrnn = project_sparse(*params.fastgrnn, cfg.sparsity);

      loss_sum += lv * static_cast<double>(idx.size());
      const Tensor& P = probs.value();
      for (std::size_t b = 0; b < idx.size(); ++b) correct += static_cast<std::size_t>((P.at(b, 1) > 0.5) == (labels[b] == 1));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    const auto val = evaluate_loss(params, cfg, val_set);
    rec.val_loss = val.loss;
    rec.val_accuracy = val.accuracy;
    if (!std::isfinite(rec.val_loss)) throw DivergenceError(static_cast<int>(epoch), 0, "validation loss not finite");
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.report.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    // Any improvement updates the snapshot; only a significant one resets patience.
    if (rec.val_loss < best_loss) {
      best_loss = rec.val_loss;
      result.params = params;
      result.report.best_epoch = epoch;
    }
    if (rec.val_loss < reference_loss - kEarlyStopMinDelta) {
      reference_loss = rec.val_loss;
      waited = 0;
    } else if (++waited >= cfg.patience) {
      break;
    }
  }
  result.report.stopped_epoch = result.report.epochs.back().epoch;
  result.report.best_val_loss = best_loss;
  return result;
}

}  // namespace floodcast
