#include "drnn/train.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>

#include "drnn/atomic_file.hpp"

namespace drnn {

void TrainConfig::validate() const {
  if (order < 0 || order > kMaxDosOrder)
    throw std::invalid_argument("order must be 0, 1 or 2, got " + std::to_string(order));
  if (state_dim == 0) throw std::invalid_argument("state_dim must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (clip_threshold && !(*clip_threshold > 0.0))
    throw std::invalid_argument("clip_threshold must be positive when set");
  if (!(init_scale > 0.0)) throw std::invalid_argument("init_scale must be positive");
}

CellParams sgd_step(const CellParams& params, const GradientSet& grads, double lr,
                    std::optional<double> clip_threshold) {
  if (!grads.congruent_with(params)) throw DimensionError("sgd_step: gradient/parameter shape mismatch");
  double scale = 1.0;
  if (clip_threshold) {
    const double norm = grads.global_norm();
    if (norm > *clip_threshold) scale = *clip_threshold / norm;
  }
  CellParams out = params;
  auto dst = out.tensors();
  const auto src = grads.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    for (std::size_t j = 0; j < dst[i].values.size(); ++j) {
      const double g = scale == 1.0 ? src[i].values[j] : src[i].values[j] * scale;
      dst[i].values[j] -= lr * g;
    }
  }
  return out;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  SeededGenerator init_rng(config.seed);
  auto initial = CellParams::random(config.order, dataset.feature_dim, config.state_dim,
                                    dataset.num_classes, init_rng, config.init_scale);
  return train_from(std::move(initial), dataset, config, on_epoch);
}

TrainResult train_from(CellParams initial, const Dataset& dataset, const TrainConfig& config,
                       const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  dataset.validate();
  initial.validate();
  if (initial.input_dim != dataset.feature_dim)
    throw_dimension_error("train: model input_dim vs dataset feature_dim", initial.input_dim,
                          dataset.feature_dim);
  if (initial.output_dim != dataset.num_classes)
    throw_dimension_error("train: model output_dim vs dataset classes", initial.output_dim,
                          dataset.num_classes);

  TrainResult result{std::move(initial), {}, 0};
  // Separate stream from initialization so the order does not depend on it.
  SeededGenerator shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t idx : order) {
      const auto& seq = dataset.sequences[idx];
      const auto fwd = forward_sequence(seq.frames, result.params);
      total += sequence_loss(fwd.outputs, seq.labels, config.loss);
      const auto grads =
          backward(fwd.traces, seq.labels, config.loss, result.params, config.truncation);
      result.params =
          sgd_step(result.params, grads, config.learning_rate, config.clip_threshold);
      ++result.updates;
    }
    const double mean = total / static_cast<double>(dataset.size());
    result.epoch_losses.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

ClassIndex argmax(const Vector& v) {
  if (v.empty()) throw std::invalid_argument("argmax of empty vector");
  ClassIndex best = 0;
  for (std::size_t c = 1; c < v.size(); ++c)
    if (v[c] > v[best]) best = c;
  return best;
}

Evaluation evaluate(const CellParams& params, const Dataset& dataset, LossMode mode) {
  if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
  if (params.input_dim != dataset.feature_dim)
    throw_dimension_error("evaluate: model input_dim vs dataset feature_dim", params.input_dim,
                          dataset.feature_dim);
  if (params.output_dim != dataset.num_classes)
    throw_dimension_error("evaluate: model output_dim vs dataset classes", params.output_dim,
                          dataset.num_classes);
  const std::size_t k = dataset.num_classes;
  Evaluation ev;
  ev.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (const auto& seq : dataset.sequences) {
    const auto fwd = forward_sequence(seq.frames, params);
    auto record = [&](ClassIndex truth, const Vector& z) {
      // softmax is monotone, so the argmax of the logits is the prediction.
      ++ev.confusion.at(truth).at(argmax(z));
      ++ev.total;
    };
    if (mode == LossMode::PerFrameCumulative && seq.frame_level()) {
      const auto& labels = std::get<std::vector<ClassIndex>>(seq.labels);
      for (std::size_t t = 0; t < fwd.outputs.size(); ++t) record(labels.at(t), fwd.outputs[t]);
    } else {
      record(final_label(seq.labels), fwd.outputs.back());
    }
  }
  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) correct += ev.confusion[c][c];
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(ev.total);
  return ev;
}

void save_loss_curve(const std::vector<double>& losses, const std::filesystem::path& path) {
  write_atomically(path, std::ios::binary, [&](std::ostream& out) {
    for (std::size_t e = 0; e < losses.size(); ++e)
      out << (e + 1) << '\t' << format_double(losses[e]) << '\n';
  });
}

}  // namespace drnn
