#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace scsampler {

/// Numerically stable in-place softmax.
void softmax_inplace(std::span<double> values);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Multinomial logistic head: logits = W x + b with W stored row-major
/// (C x d) followed by b in one flat parameter vector.
struct SoftmaxHead {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<double> params;

  SoftmaxHead() = default;
  SoftmaxHead(std::size_t num_classes, std::size_t dim)
      : num_classes(num_classes), dim(dim), params(num_classes * dim + num_classes) {}

  std::span<const double> weights() const { return {params.data(), num_classes * dim}; }
  std::span<const double> bias() const {
    return {params.data() + num_classes * dim, num_classes};
  }

  void probabilities(std::span<const float> x, std::span<double> out) const;

  /// Adds scale * d(-log p_label)/d(params) into grad and returns the loss.
  double accumulate_cross_entropy(std::span<const float> x, std::size_t label,
                                  double scale, std::span<double> grad) const;
};

}  // namespace scsampler
