#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "drnn/backward.hpp"
#include "drnn/dataset.hpp"

namespace drnn {

struct TrainConfig {
  int order = 1;
  std::size_t state_dim = 64;
  LossMode loss = LossMode::SequenceFinal;
  double learning_rate = 0.0001;
  int epochs = 50;
  std::optional<double> clip_threshold = 5.0;
  std::uint64_t seed = 1;
  Truncation truncation = Truncation::Truncated;
  double init_scale = kDefaultInitScale;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// theta - lr * grad, after rescaling grad to `clip_threshold` when its
/// global L2 norm exceeds it.
CellParams sgd_step(const CellParams& params, const GradientSet& grads, double lr,
                    std::optional<double> clip_threshold);

struct TrainResult {
  CellParams params;
  std::vector<double> epoch_losses;  // mean training loss per epoch
  std::size_t updates = 0;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Per-sequence SGD over a seeded shuffle each epoch. The recorded loss of
/// a sequence is the loss before its own update.
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Continues training from existing parameters.
TrainResult train_from(CellParams initial, const Dataset& dataset, const TrainConfig& config,
                       const EpochCallback& on_epoch = {});

struct Evaluation {
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::size_t total = 0;
};

/// Final-frame argmax for SequenceFinal, every frame for PerFrameCumulative.
/// Ties go to the lowest class index.
Evaluation evaluate(const CellParams& params, const Dataset& dataset, LossMode mode);

ClassIndex argmax(const Vector& v);

/// "epoch<TAB>mean_loss" per line, 17 significant digits.
void save_loss_curve(const std::vector<double>& losses, const std::filesystem::path& path);

}  // namespace drnn
