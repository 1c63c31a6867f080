#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "drnn/loss.hpp"
#include "drnn/numeric.hpp"
#include "drnn/params_io.hpp"

namespace drnn {

struct LabeledSequence {
  std::vector<Vector> frames;  // T frames of dimension D
  Labels labels;
  int subject_id = 0;
  std::string sequence_id;

  std::size_t length() const { return frames.size(); }
  bool frame_level() const { return std::holds_alternative<std::vector<ClassIndex>>(labels); }

  bool operator==(const LabeledSequence&) const = default;
};

struct Dataset {
  std::vector<LabeledSequence> sequences;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;

  bool empty() const { return sequences.empty(); }
  std::size_t size() const { return sequences.size(); }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  const LabeledSequence* find(const std::string& sequence_id) const;

  /// Same metadata, subset of sequences.
  Dataset subset(const std::vector<std::size_t>& indices) const;

  bool operator==(const Dataset&) const = default;
};

/// Text format:
///
///   DRNNSEQ 1
///   classes <k> dim <D> sequences <S>
///   seq <id> subject <s> frames <T> label <c>          (or labels <c_1> ... <c_T>)
///   <T lines of D floats>
///
/// Labels are 1-based in the file. Floats carry 17 significant digits.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Shortest-exact decimal with 17 significant digits.
std::string format_double(double v);
/// Parses a full token as a double; throws FormatError otherwise.
double parse_double(const std::string& token);

/// Random partition of the distinct subjects; every sequence follows its
/// subject. round(train_fraction * subjects) subjects train, clamped so
/// both sides are non-empty.
std::pair<Dataset, Dataset> split_by_subject(const Dataset& dataset, double train_fraction,
                                             std::uint64_t seed);

/// Distinct subject ids, ascending.
std::vector<int> subjects_of(const Dataset& dataset);

}  // namespace drnn
