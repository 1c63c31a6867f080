// drnn: train, evaluate and inspect differential recurrent networks.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "drnn/commands.hpp"

namespace {

struct Flags {
  std::string model, data, out, sequence_id;
  std::string loss = "final";
  double pca_energy = 0.0;
  double split_fraction = 0.0;
  std::uint64_t split_seed = 0;
};

void add_common(CLI::App* cmd, drnn::RunConfig& cfg, Flags& flags) {
  cmd->add_option("--data", flags.data, "Dataset file (DRNNSEQ)");
  cmd->add_option("--model", flags.model, "Model parameter file");
  cmd->add_option("--out", flags.out, "Output path");
  cmd->add_option("--order", cfg.order, "Highest DoS order (0, 1 or 2)")
      ->check(CLI::IsMember({0, 1, 2}));
  cmd->add_option("--state-dim", cfg.state_dim, "Memory cell state units");
  cmd->add_option("--loss", flags.loss, "Loss mode")
      ->check(CLI::IsMember({"final", "cumulative"}));
  cmd->add_option("--lr", cfg.learning_rate, "SGD learning rate");
  cmd->add_option("--epochs", cfg.epochs, "Training epochs");
  cmd->add_option("--seed", cfg.seed, "Random seed");
  cmd->add_option("--pca-energy", flags.pca_energy, "Fit PCA keeping this variance fraction");
  cmd->add_option("--split-fraction", flags.split_fraction, "Fraction of subjects used for training");
  cmd->add_option("--split-seed", flags.split_seed, "Seed of the subject split");
  cmd->add_option("--trials", cfg.trials, "Repeated split-train-eval trials");
  cmd->add_option("--sequence-id", flags.sequence_id, "Sequence to trace");
  cmd->add_option("--synth-n", cfg.synth.num_sequences, "Synthetic: number of sequences");
  cmd->add_option("--synth-t", cfg.synth.frames, "Synthetic: frames per sequence");
  cmd->add_option("--synth-d", cfg.synth.dim, "Synthetic: feature dimension");
  cmd->add_option("--synth-k", cfg.synth.classes, "Synthetic: number of classes");
  cmd->add_option("--spike-mag", cfg.synth.spike_magnitude, "Synthetic: spike norm");
  cmd->add_option("--noise-sigma", cfg.synth.noise_sigma, "Synthetic: noise standard deviation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential recurrent neural network toolkit"};
  app.require_subcommand(1);

  drnn::RunConfig cfg;
  Flags flags;
  const std::map<std::string, drnn::Command> commands = {
      {"train", drnn::Command::Train},         {"eval", drnn::Command::Eval},
      {"gradcheck", drnn::Command::Gradcheck}, {"synth", drnn::Command::Synth},
      {"dos-trace", drnn::Command::DosTrace},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, _] : commands) {
    subs[name] = app.add_subcommand(name);
    add_common(subs[name], cfg, flags);
  }
  subs["train"]->description("Train a model and write parameters plus the loss curve");
  subs["eval"]->description("Accuracy and confusion matrix, optionally over repeated subject splits");
  subs["gradcheck"]->description("Compare analytic gradients with finite differences");
  subs["synth"]->description("Generate a synthetic spike dataset");
  subs["dos-trace"]->description("Per-frame norms of the first and second state derivatives");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    cfg.command = commands.at(name);
    if (sub->count("--data")) cfg.data_path = flags.data;
    if (sub->count("--model")) cfg.model_path = flags.model;
    if (sub->count("--out")) cfg.out_path = flags.out;
    if (sub->count("--sequence-id")) cfg.sequence_id = flags.sequence_id;
    if (sub->count("--pca-energy")) cfg.pca_energy = flags.pca_energy;
    if (sub->count("--split-fraction")) cfg.split_fraction = flags.split_fraction;
    if (sub->count("--split-seed")) cfg.split_seed = flags.split_seed;
    cfg.loss = flags.loss == "cumulative" ? drnn::LossMode::PerFrameCumulative
                                          : drnn::LossMode::SequenceFinal;
  }
  return drnn::run_command(cfg, std::cout, std::cerr);
}
