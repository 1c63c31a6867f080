#include "drnn/synth.hpp"

#include <ostream>
#include <random>
#include <stdexcept>

#include "drnn/atomic_file.hpp"

namespace drnn {

void SpikeConfig::validate() const {
  if (num_sequences == 0) throw std::invalid_argument("synth: --synth-n must be positive");
  if (frames < 4) throw std::invalid_argument("synth: --synth-t must be at least 4");
  if (dim == 0) throw std::invalid_argument("synth: --synth-d must be positive");
  if (classes < 2) throw std::invalid_argument("synth: --synth-k must be at least 2");
  if (!(spike_magnitude > 0.0)) throw std::invalid_argument("synth: --spike-mag must be positive");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("synth: --noise-sigma must be non-negative");
  if (subjects == 0) throw std::invalid_argument("synth: subject count must be positive");
}

SpikeDataset synth_spike_dataset(const SpikeConfig& config) {
  config.validate();
  SeededGenerator rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SpikeDataset out;
  for (std::size_t c = 0; c < config.classes; ++c) {
    Vector u(config.dim);
    double norm = 0.0;
    while (norm == 0.0) {
      for (double& v : u) v = gauss(rng);
      norm = norm2(u);
    }
    out.directions.push_back((config.spike_magnitude / norm) * u);
  }

  std::uniform_int_distribution<std::size_t> onset(0, config.frames - kSpikeHoldFrames);
  out.data.num_classes = config.classes;
  out.data.feature_dim = config.dim;
  for (std::size_t s = 0; s < config.num_sequences; ++s) {
    const ClassIndex label = s % config.classes;
    const std::size_t t_star = onset(rng);
    LabeledSequence seq;
    seq.sequence_id = "s" + std::to_string(s);
    seq.subject_id = static_cast<int>((s / config.classes) % config.subjects);
    seq.labels = label;
    for (std::size_t t = 0; t < config.frames; ++t) {
      Vector x(config.dim);
      if (config.noise_sigma > 0.0)
        for (double& v : x) v = config.noise_sigma * gauss(rng);
      if (t >= t_star && t < t_star + kSpikeHoldFrames) add_scaled(x, out.directions[label], 1.0);
      seq.frames.push_back(std::move(x));
    }
    out.data.sequences.push_back(std::move(seq));
    out.spike_frames.push_back(t_star);
  }
  return out;
}

void save_spike_frames(const SpikeDataset& synth, const std::filesystem::path& path) {
  write_atomically(path, std::ios::binary, [&](std::ostream& out) {
    for (std::size_t s = 0; s < synth.spike_frames.size(); ++s)
      out << synth.data.sequences[s].sequence_id << '\t' << (synth.spike_frames[s] + 1) << '\n';
  });
}

}  // namespace drnn
