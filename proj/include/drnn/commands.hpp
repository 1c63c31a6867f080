#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "drnn/gradcheck.hpp"
#include "drnn/loss.hpp"
#include "drnn/synth.hpp"
#include "drnn/train.hpp"

namespace drnn {

enum class Command { Train, Eval, Gradcheck, Synth, DosTrace };

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  Command command = Command::Train;
  std::optional<std::filesystem::path> model_path;
  std::optional<std::filesystem::path> data_path;
  std::optional<std::filesystem::path> out_path;
  int order = 1;
  std::size_t state_dim = 64;
  LossMode loss = LossMode::SequenceFinal;
  double learning_rate = 0.0001;
  int epochs = 50;
  std::uint64_t seed = 1;
  std::optional<double> pca_energy;
  std::optional<double> split_fraction;
  std::optional<std::uint64_t> split_seed;
  int trials = 1;
  std::optional<std::string> sequence_id;
  SpikeConfig synth;

  /// Throws UsageError naming the first missing or invalid field.
  void validate() const;

  TrainConfig train_config() const;
};

// Sidecar paths derived from the primary output.
std::filesystem::path pca_sidecar(const std::filesystem::path& model_path);
std::filesystem::path default_loss_curve(const std::filesystem::path& model_path);
std::filesystem::path spikes_sidecar(const std::filesystem::path& data_path);
std::filesystem::path trial_confusion_path(const std::filesystem::path& out, int trial);

/// Row = true class, column = predicted class, both 1-based in the header.
void write_confusion_csv(std::ostream& out, const std::vector<std::vector<double>>& confusion);

/// Row-normalized matrix (rows without samples stay zero).
std::vector<std::vector<double>> row_normalized(const Evaluation& ev);

/// Validates and dispatches. Returns the process exit status; diagnostics
/// go to `err`, reports to `out`.
int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

int cmd_train(const RunConfig& config, std::ostream& out);
int cmd_eval(const RunConfig& config, std::ostream& out);
int cmd_gradcheck(const RunConfig& config, std::ostream& out);
int cmd_synth(const RunConfig& config, std::ostream& out);
int cmd_dos_trace(const RunConfig& config, std::ostream& out);

/// Per-check table used by cmd_gradcheck; exit 0 iff every row passed.
int report_gradcheck(const std::vector<GradcheckCase>& cases, std::ostream& out);

}  // namespace drnn
