#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "drnn/dataset.hpp"

namespace drnn {

struct SpikeConfig {
  std::size_t num_sequences = 200;
  std::size_t frames = 20;
  std::size_t dim = 16;
  std::size_t classes = 4;
  double spike_magnitude = 5.0;
  double noise_sigma = 0.1;
  std::uint64_t seed = 1;
  std::size_t subjects = 10;

  void validate() const;
};

inline constexpr std::size_t kSpikeHoldFrames = 2;

struct SpikeDataset {
  Dataset data;
  std::vector<std::size_t> spike_frames;  // zero-based onset per sequence
  std::vector<Vector> directions;         // one per class, norm = spike_magnitude
};

/// Gaussian noise frames plus one class-specific spike held for two frames
/// at a uniformly random onset. Classes cycle through the sequences so the
/// set is balanced; subjects cycle in blocks of `classes`.
SpikeDataset synth_spike_dataset(const SpikeConfig& config);

/// "sequence_id<TAB>onset" per line, onset 1-based.
void save_spike_frames(const SpikeDataset& synth, const std::filesystem::path& path);

}  // namespace drnn
