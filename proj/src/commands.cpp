#include "drnn/commands.hpp"

#include <chrono>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "drnn/atomic_file.hpp"
#include "drnn/params_io.hpp"
#include "drnn/pca.hpp"

namespace drnn {

namespace {

void require(bool present, const char* flag, const char* command) {
  if (!present) throw UsageError(std::string(command) + ": missing required " + flag);
}

const char* command_name(Command c) {
  switch (c) {
    case Command::Train: return "train";
    case Command::Eval: return "eval";
    case Command::Gradcheck: return "gradcheck";
    case Command::Synth: return "synth";
    case Command::DosTrace: return "dos-trace";
  }
  return "?";
}

std::uint64_t split_seed_of(const RunConfig& c) { return c.split_seed.value_or(c.seed); }

Dataset load_valid_dataset(const std::filesystem::path& path) {
  Dataset ds = load_dataset(path);
  ds.validate();
  if (ds.empty()) throw std::invalid_argument("dataset " + path.string() + " has no sequences");
  return ds;
}

struct TrainedModel {
  CellParams params;
  std::optional<PcaModel> pca;
  std::vector<double> losses;
};

// Fits PCA on the training frames only (when requested) and trains.
TrainedModel fit_model(const Dataset& train_set, const RunConfig& config, std::uint64_t seed) {
  TrainedModel model{CellParams{}, std::nullopt, {}};
  const Dataset* data = &train_set;
  Dataset reduced;
  if (config.pca_energy) {
    model.pca = pca_fit(stack_frames(train_set), *config.pca_energy);
    reduced = pca_transform_dataset(*model.pca, train_set);
    data = &reduced;
  }
  TrainConfig tc = config.train_config();
  tc.seed = seed;
  auto result = train(*data, tc);
  model.params = std::move(result.params);
  model.losses = std::move(result.epoch_losses);
  return model;
}

// Applies the model's PCA sidecar, if any, and checks dimensions.
Dataset prepare_for_model(const Dataset& data, const CellParams& params,
                          const std::optional<PcaModel>& pca) {
  Dataset ds = pca ? pca_transform_dataset(*pca, data) : data;
  if (ds.feature_dim != params.input_dim)
    throw DimensionError("model expects input dimension " + std::to_string(params.input_dim) +
                         ", dataset provides " + std::to_string(ds.feature_dim));
  if (ds.num_classes != params.output_dim)
    throw DimensionError("model has " + std::to_string(params.output_dim) +
                         " classes, dataset has " + std::to_string(ds.num_classes));
  return ds;
}

std::optional<PcaModel> load_pca_if_present(const std::filesystem::path& model_path) {
  const auto path = pca_sidecar(model_path);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return load_pca(path);
}

std::vector<std::vector<double>> as_doubles(const Evaluation& ev) {
  std::vector<std::vector<double>> out;
  for (const auto& row : ev.confusion) out.emplace_back(row.begin(), row.end());
  return out;
}

}  // namespace

void RunConfig::validate() const {
  const char* name = command_name(command);
  switch (command) {
    case Command::Train:
      require(data_path.has_value(), "--data", name);
      require(model_path.has_value(), "--model", name);
      break;
    case Command::Eval:
      require(data_path.has_value(), "--data", name);
      require(out_path.has_value(), "--out", name);
      if (trials > 1)
        require(split_fraction.has_value(), "--split-fraction (needed when --trials > 1)", name);
      else
        require(model_path.has_value(), "--model (needed unless --trials > 1)", name);
      break;
    case Command::Gradcheck:
      break;
    case Command::Synth:
      require(out_path.has_value(), "--out", name);
      try {
        synth.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      break;
    case Command::DosTrace:
      require(model_path.has_value(), "--model", name);
      require(data_path.has_value(), "--data", name);
      require(sequence_id.has_value(), "--sequence-id", name);
      require(out_path.has_value(), "--out", name);
      break;
  }
  if (order < 0 || order > kMaxDosOrder) throw UsageError("--order must be 0, 1 or 2");
  if (state_dim == 0) throw UsageError("--state-dim must be positive");
  if (!(learning_rate > 0.0)) throw UsageError("--lr must be positive");
  if (epochs < 1) throw UsageError("--epochs must be at least 1");
  if (trials < 1) throw UsageError("--trials must be at least 1");
  if (pca_energy && !(*pca_energy > 0.0 && *pca_energy <= 1.0))
    throw UsageError("--pca-energy must lie in (0, 1]");
  if (split_fraction && !(*split_fraction > 0.0 && *split_fraction < 1.0))
    throw UsageError("--split-fraction must lie in (0, 1)");
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.order = order;
  tc.state_dim = state_dim;
  tc.loss = loss;
  tc.learning_rate = learning_rate;
  tc.epochs = epochs;
  tc.seed = seed;
  return tc;
}

std::filesystem::path pca_sidecar(const std::filesystem::path& model_path) {
  auto p = model_path;
  p += ".pca";
  return p;
}

std::filesystem::path default_loss_curve(const std::filesystem::path& model_path) {
  auto p = model_path;
  p += ".loss.tsv";
  return p;
}

std::filesystem::path spikes_sidecar(const std::filesystem::path& data_path) {
  auto p = data_path;
  p += ".spikes";
  return p;
}

std::filesystem::path trial_confusion_path(const std::filesystem::path& out, int trial) {
  auto p = out;
  p += ".trial" + std::to_string(trial) + ".csv";
  return p;
}

void write_confusion_csv(std::ostream& out, const std::vector<std::vector<double>>& confusion) {
  out << "true\\pred";
  for (std::size_t c = 0; c < confusion.size(); ++c) out << ',' << (c + 1);
  out << '\n';
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    out << (r + 1);
    for (double v : confusion[r]) out << ',' << format_double(v);
    out << '\n';
  }
}

std::vector<std::vector<double>> row_normalized(const Evaluation& ev) {
  auto m = as_doubles(ev);
  for (auto& row : m) {
    double total = 0.0;
    for (double v : row) total += v;
    if (total > 0.0)
      for (double& v : row) v /= total;
  }
  return m;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  Dataset data = load_valid_dataset(*config.data_path);
  if (config.split_fraction)
    data = split_by_subject(data, *config.split_fraction, split_seed_of(config)).first;

  const TrainedModel model = fit_model(data, config, config.seed);
  const auto loss_path = config.out_path.value_or(default_loss_curve(*config.model_path));

  save_params(model.params, *config.model_path);
  save_loss_curve(model.losses, loss_path);
  const auto sidecar = pca_sidecar(*config.model_path);
  if (model.pca) {
    save_pca(*model.pca, sidecar);
  } else if (std::filesystem::exists(sidecar)) {
    std::filesystem::remove(sidecar);
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "epochs=" << model.losses.size() << " final_loss=" << format_double(model.losses.back())
      << " time_s=" << std::fixed << std::setprecision(3) << elapsed << std::defaultfloat << '\n';
  return 0;
}

int cmd_eval(const RunConfig& config, std::ostream& out) {
  const Dataset data = load_valid_dataset(*config.data_path);
  const auto& out_path = *config.out_path;

  if (config.trials > 1) {
    std::vector<Evaluation> runs;
    for (int trial = 0; trial < config.trials; ++trial) {
      const auto [train_set, test_set] =
          split_by_subject(data, *config.split_fraction, split_seed_of(config) + trial);
      const TrainedModel model = fit_model(train_set, config, config.seed + trial);
      const Dataset prepared = prepare_for_model(test_set, model.params, model.pca);
      runs.push_back(evaluate(model.params, prepared, config.loss));
    }
    const std::size_t k = data.num_classes;
    std::vector<std::vector<double>> mean(k, std::vector<double>(k, 0.0));
    double mean_accuracy = 0.0;
    for (const auto& ev : runs) {
      const auto norm = row_normalized(ev);
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c) mean[r][c] += norm[r][c] / config.trials;
      mean_accuracy += ev.accuracy / config.trials;
    }
    for (int trial = 0; trial < config.trials; ++trial) {
      write_atomically(trial_confusion_path(out_path, trial + 1), std::ios::binary,
                       [&](std::ostream& f) { write_confusion_csv(f, as_doubles(runs[trial])); });
    }
    write_atomically(out_path, std::ios::binary,
                     [&](std::ostream& f) { write_confusion_csv(f, mean); });
    for (int trial = 0; trial < config.trials; ++trial)
      out << "trial=" << (trial + 1) << " accuracy=" << format_double(runs[trial].accuracy) << '\n';
    out << "trials=" << config.trials << " mean_accuracy=" << format_double(mean_accuracy) << '\n';
    return 0;
  }

  const CellParams params = load_params(*config.model_path);
  const auto pca = load_pca_if_present(*config.model_path);
  Dataset eval_set = data;
  if (config.split_fraction)
    eval_set = split_by_subject(data, *config.split_fraction, split_seed_of(config)).second;
  const Dataset prepared = prepare_for_model(eval_set, params, pca);
  const Evaluation ev = evaluate(params, prepared, config.loss);
  write_atomically(out_path, std::ios::binary,
                   [&](std::ostream& f) { write_confusion_csv(f, as_doubles(ev)); });
  out << "accuracy=" << format_double(ev.accuracy) << " sequences=" << prepared.size() << '\n';
  return 0;
}

int report_gradcheck(const std::vector<GradcheckCase>& cases, std::ostream& out) {
  bool all = true;
  out << "order\ttruncation\tloss\tmax_rel_error\tresult\n";
  for (const auto& c : cases) {
    out << c.order << '\t' << to_string(c.truncation) << '\t' << to_string(c.mode) << '\t'
        << std::scientific << std::setprecision(3) << c.max_rel_error << std::defaultfloat
        << '\t' << (c.passed ? "PASS" : "FAIL") << '\n';
    all = all && c.passed;
  }
  out << (all ? "gradcheck: all checks passed" : "gradcheck: FAILED") << '\n';
  return all ? 0 : 1;
}

int cmd_gradcheck(const RunConfig& config, std::ostream& out) {
  GradcheckOptions options;
  options.seed = config.seed;
  return report_gradcheck(run_gradcheck(options), out);
}

int cmd_synth(const RunConfig& config, std::ostream& out) {
  SpikeConfig sc = config.synth;
  sc.seed = config.seed;
  const auto synth = synth_spike_dataset(sc);
  save_dataset(synth.data, *config.out_path);
  save_spike_frames(synth, spikes_sidecar(*config.out_path));
  out << "sequences=" << synth.data.size() << " classes=" << synth.data.num_classes
      << " dim=" << synth.data.feature_dim << '\n';
  return 0;
}

int cmd_dos_trace(const RunConfig& config, std::ostream& out) {
  const CellParams params = load_params(*config.model_path);
  const auto pca = load_pca_if_present(*config.model_path);
  const Dataset data = load_valid_dataset(*config.data_path);
  const LabeledSequence* seq = data.find(*config.sequence_id);
  if (seq == nullptr) throw std::invalid_argument("unknown sequence id '" + *config.sequence_id + "'");

  Dataset single = data.subset({static_cast<std::size_t>(seq - data.sequences.data())});
  single = prepare_for_model(single, params, pca);
  const auto fwd = forward_sequence(single.sequences.front().frames, params);

  write_atomically(*config.out_path, std::ios::binary, [&](std::ostream& f) {
    for (std::size_t t = 0; t < fwd.traces.size(); ++t)
      f << (t + 1) << '\t' << format_double(norm2(fwd.traces[t].v)) << '\t'
        << format_double(norm2(fwd.traces[t].a)) << '\n';
  });
  out << "frames=" << fwd.traces.size() << '\n';
  return 0;
}

int run_command(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  try {
    switch (config.command) {
      case Command::Train: return cmd_train(config, out);
      case Command::Eval: return cmd_eval(config, out);
      case Command::Gradcheck: return cmd_gradcheck(config, out);
      case Command::Synth: return cmd_synth(config, out);
      case Command::DosTrace: return cmd_dos_trace(config, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace drnn
