#include "drnn/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "drnn/atomic_file.hpp"

namespace drnn {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw FormatError("malformed number '" + token + "'");
  return v;
}

void Dataset::validate() const {
  if (num_classes < 2) throw std::invalid_argument("dataset needs at least 2 classes");
  if (feature_dim == 0) throw std::invalid_argument("dataset feature dimension must be positive");
  for (const auto& seq : sequences) {
    if (seq.sequence_id.empty() ||
        std::any_of(seq.sequence_id.begin(), seq.sequence_id.end(),
                    [](unsigned char ch) { return std::isspace(ch) != 0; }))
      throw std::invalid_argument("sequence id '" + seq.sequence_id +
                                  "' must be non-empty and contain no whitespace");
    if (seq.frames.empty())
      throw std::invalid_argument("sequence '" + seq.sequence_id + "' has no frames");
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      if (seq.frames[t].size() != feature_dim) {
        std::ostringstream msg;
        msg << "sequence '" << seq.sequence_id << "' frame " << t << " has dimension "
            << seq.frames[t].size() << ", expected " << feature_dim;
        throw DimensionError(msg.str());
      }
    }
    auto check = [&](ClassIndex c) {
      if (c >= num_classes)
        throw LabelError("sequence '" + seq.sequence_id + "' label " + std::to_string(c + 1) +
                         " exceeds class count " + std::to_string(num_classes));
    };
    if (const auto* c = std::get_if<ClassIndex>(&seq.labels)) {
      check(*c);
    } else {
      const auto& per_frame = std::get<std::vector<ClassIndex>>(seq.labels);
      if (per_frame.size() != seq.frames.size())
        throw LabelError("sequence '" + seq.sequence_id + "' has " +
                         std::to_string(per_frame.size()) + " frame labels for " +
                         std::to_string(seq.frames.size()) + " frames");
      for (ClassIndex c : per_frame) check(c);
    }
  }
}

const LabeledSequence* Dataset::find(const std::string& sequence_id) const {
  for (const auto& seq : sequences)
    if (seq.sequence_id == sequence_id) return &seq;
  return nullptr;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.feature_dim = feature_dim;
  out.sequences.reserve(indices.size());
  for (std::size_t i : indices) out.sequences.push_back(sequences.at(i));
  return out;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  dataset.validate();
  out << "DRNNSEQ 1\n";
  out << "classes " << dataset.num_classes << " dim " << dataset.feature_dim << " sequences "
      << dataset.sequences.size() << '\n';
  for (const auto& seq : dataset.sequences) {
    out << "seq " << seq.sequence_id << " subject " << seq.subject_id << " frames "
        << seq.frames.size();
    if (const auto* c = std::get_if<ClassIndex>(&seq.labels)) {
      out << " label " << (*c + 1);
    } else {
      out << " labels";
      for (ClassIndex c : std::get<std::vector<ClassIndex>>(seq.labels)) out << ' ' << (c + 1);
    }
    out << '\n';
    for (const auto& frame : seq.frames) {
      for (std::size_t j = 0; j < frame.size(); ++j) {
        if (j > 0) out << ' ';
        out << format_double(frame[j]);
      }
      out << '\n';
    }
  }
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line split on whitespace; throws naming `section` at end of input.
  std::vector<std::string> next(const std::string& section) {
    std::string line;
    if (!std::getline(in_, line))
      throw FormatError("unexpected end of file: missing " + section + " (after line " +
                        std::to_string(line_no_) + ")");
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    for (std::string tok; ss >> tok;) tokens.push_back(std::move(tok));
    return tokens;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("line " + std::to_string(line_no_) + ": " + what);
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

long long parse_int(const LineReader& r, const std::string& token, const char* field) {
  long long v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    r.fail(std::string("malformed ") + field + " '" + token + "'");
  return v;
}

std::size_t parse_count(const LineReader& r, const std::string& token, const char* field) {
  const long long v = parse_int(r, token, field);
  if (v < 0) r.fail(std::string(field) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

void expect_keyword(const LineReader& r, const std::vector<std::string>& tokens, std::size_t at,
                    const char* keyword) {
  if (tokens.size() <= at || tokens[at] != keyword)
    r.fail(std::string("expected '") + keyword + "'");
}

ClassIndex parse_label(const LineReader& r, const std::string& token, std::size_t k) {
  const long long c = parse_int(r, token, "label");
  if (c < 1 || static_cast<std::size_t>(c) > k)
    r.fail("label " + token + " out of range 1.." + std::to_string(k));
  return static_cast<ClassIndex>(c - 1);
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  LineReader r(in);
  auto magic = r.next("header");
  if (magic.size() != 2 || magic[0] != "DRNNSEQ") r.fail("not a DRNNSEQ dataset file");
  if (magic[1] != "1") r.fail("unsupported dataset version " + magic[1]);

  auto dims = r.next("dimension line");
  if (dims.size() != 6) r.fail("expected 'classes <k> dim <D> sequences <S>'");
  expect_keyword(r, dims, 0, "classes");
  expect_keyword(r, dims, 2, "dim");
  expect_keyword(r, dims, 4, "sequences");
  Dataset ds;
  ds.num_classes = parse_count(r, dims[1], "class count");
  ds.feature_dim = parse_count(r, dims[3], "dimension");
  const std::size_t count = parse_count(r, dims[5], "sequence count");
  if (ds.num_classes < 2) r.fail("need at least 2 classes");
  if (ds.feature_dim == 0) r.fail("dimension must be positive");

  for (std::size_t s = 0; s < count; ++s) {
    auto head = r.next("header of sequence " + std::to_string(s + 1) + " of " +
                       std::to_string(count));
    if (head.size() < 8) r.fail("expected 'seq <id> subject <s> frames <T> label(s) ...'");
    expect_keyword(r, head, 0, "seq");
    expect_keyword(r, head, 2, "subject");
    expect_keyword(r, head, 4, "frames");
    LabeledSequence seq;
    seq.sequence_id = head[1];
    seq.subject_id = static_cast<int>(parse_int(r, head[3], "subject id"));
    const std::size_t frames = parse_count(r, head[5], "frame count");
    if (frames == 0) r.fail("sequence '" + seq.sequence_id + "' has no frames");
    if (head[6] == "label") {
      if (head.size() != 8) r.fail("sequence label takes exactly one class");
      seq.labels = parse_label(r, head[7], ds.num_classes);
    } else if (head[6] == "labels") {
      if (head.size() != 7 + frames)
        r.fail("expected " + std::to_string(frames) + " frame labels, got " +
               std::to_string(head.size() - 7));
      std::vector<ClassIndex> per_frame;
      for (std::size_t t = 0; t < frames; ++t)
        per_frame.push_back(parse_label(r, head[7 + t], ds.num_classes));
      seq.labels = std::move(per_frame);
    } else {
      r.fail("expected 'label' or 'labels'");
    }
    for (std::size_t t = 0; t < frames; ++t) {
      auto tokens = r.next("frame " + std::to_string(t + 1) + " of sequence '" +
                           seq.sequence_id + "'");
      if (tokens.size() != ds.feature_dim)
        r.fail("frame has " + std::to_string(tokens.size()) + " values, expected " +
               std::to_string(ds.feature_dim));
      Vector frame(ds.feature_dim);
      for (std::size_t j = 0; j < tokens.size(); ++j) {
        try {
          frame[j] = parse_double(tokens[j]);
        } catch (const FormatError& e) {
          r.fail(e.what());
        }
      }
      seq.frames.push_back(std::move(frame));
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_atomically(path, std::ios::binary, [&](std::ostream& out) { write_dataset(out, dataset); });
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file " + path.string());
  try {
    return read_dataset(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<int> subjects_of(const Dataset& dataset) {
  std::set<int> ids;
  for (const auto& seq : dataset.sequences) ids.insert(seq.subject_id);
  return {ids.begin(), ids.end()};
}

std::pair<Dataset, Dataset> split_by_subject(const Dataset& dataset, double train_fraction,
                                             std::uint64_t seed) {
  auto subjects = subjects_of(dataset);
  if (subjects.size() < 2)
    throw std::invalid_argument("split_by_subject needs at least 2 distinct subjects, got " +
                                std::to_string(subjects.size()));
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split fraction must lie in (0, 1)");

  SeededGenerator rng(seed);
  std::shuffle(subjects.begin(), subjects.end(), rng);
  const auto total = static_cast<long long>(subjects.size());
  const long long n_train =
      std::clamp(std::llround(train_fraction * static_cast<double>(total)), 1LL, total - 1);
  const std::set<int> train_subjects(subjects.begin(), subjects.begin() + n_train);

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < dataset.sequences.size(); ++i) {
    if (train_subjects.contains(dataset.sequences[i].subject_id))
      train_idx.push_back(i);
    else
      test_idx.push_back(i);
  }
  return {dataset.subset(train_idx), dataset.subset(test_idx)};
}

}  // namespace drnn
