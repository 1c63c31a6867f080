#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "drnn/numeric.hpp"

namespace drnn {

/// Zero-based class index. Files and reports use 1-based labels.
using ClassIndex = std::size_t;

/// One label for the whole sequence, or one label per frame.
using Labels = std::variant<ClassIndex, std::vector<ClassIndex>>;

enum class LossMode {
  SequenceFinal,       // loss at t = T only
  PerFrameCumulative,  // sum of per-frame losses
};

class LabelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// -log y[c].
double nll_loss(const Vector& y, ClassIndex c);

/// Softmax of each scored logit vector followed by nll_loss.
double sequence_loss(std::span<const Vector> logits, const Labels& labels, LossMode mode);

/// d loss / d logits for every frame (zero for unscored frames). Per scored
/// frame this is softmax(z) - onehot(c).
std::vector<Vector> logit_gradients(std::span<const Vector> logits, const Labels& labels,
                                    LossMode mode);

/// The label scored at the final frame.
ClassIndex final_label(const Labels& labels);

}  // namespace drnn
