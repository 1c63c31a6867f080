#include "drnn/loss.hpp"

#include <cmath>
#include <string>

namespace drnn {

namespace {

void check_class(ClassIndex c, std::size_t k) {
  if (c >= k)
    throw LabelError("class index " + std::to_string(c) + " out of range for " +
                     std::to_string(k) + " classes");
}

// Which frames are scored and with which label.
template <typename F>
void for_each_scored(std::span<const Vector> logits, const Labels& labels, LossMode mode,
                     F&& fn) {
  if (logits.empty()) throw std::invalid_argument("sequence loss: no frames");
  const std::size_t T = logits.size();
  if (mode == LossMode::SequenceFinal) {
    fn(T - 1, final_label(labels));
    return;
  }
  const auto* per_frame = std::get_if<std::vector<ClassIndex>>(&labels);
  if (per_frame == nullptr)
    throw LabelError("cumulative loss needs one label per frame, got a sequence label");
  if (per_frame->size() != T)
    throw LabelError("cumulative loss needs " + std::to_string(T) + " frame labels, got " +
                     std::to_string(per_frame->size()));
  for (std::size_t t = 0; t < T; ++t) fn(t, (*per_frame)[t]);
}

}  // namespace

ClassIndex final_label(const Labels& labels) {
  if (const auto* c = std::get_if<ClassIndex>(&labels)) return *c;
  const auto& per_frame = std::get<std::vector<ClassIndex>>(labels);
  if (per_frame.empty()) throw LabelError("empty frame label list");
  return per_frame.back();
}

double nll_loss(const Vector& y, ClassIndex c) {
  check_class(c, y.size());
  return -std::log(y[c]);
}

double sequence_loss(std::span<const Vector> logits, const Labels& labels, LossMode mode) {
  double total = 0.0;
  for_each_scored(logits, labels, mode,
                  [&](std::size_t t, ClassIndex c) { total += nll_loss(softmax(logits[t]), c); });
  return total;
}

std::vector<Vector> logit_gradients(std::span<const Vector> logits, const Labels& labels,
                                    LossMode mode) {
  std::vector<Vector> grads;
  grads.reserve(logits.size());
  for (const auto& z : logits) grads.emplace_back(z.size());
  for_each_scored(logits, labels, mode, [&](std::size_t t, ClassIndex c) {
    check_class(c, logits[t].size());
    Vector g = softmax(logits[t]);
    g[c] -= 1.0;
    grads[t] = std::move(g);
  });
  return grads;
}

}  // namespace drnn
