#include "scsampler/softmax_head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scsampler/kernels.hpp"

namespace scsampler {

void softmax_inplace(std::span<double> values) {
  const double top = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (double& v : values) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : values) v /= total;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

void SoftmaxHead::probabilities(std::span<const float> x, std::span<double> out) const {
  kernels::gemv(weights(), x, bias(), out);
  softmax_inplace(out);
}

double SoftmaxHead::accumulate_cross_entropy(std::span<const float> x, std::size_t label,
                                             double scale, std::span<double> grad) const {
  std::vector<double> p(num_classes);
  kernels::gemv(weights(), x, bias(), p);
  // log-sum-exp on the raw logits keeps the loss finite for confident heads
  const double top = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double v : p) total += std::exp(v - top);
  const double loss = top + std::log(total) - p[label];
  softmax_inplace(p);

  double* grad_w = grad.data();
  double* grad_b = grad.data() + num_classes * dim;
  for (std::size_t k = 0; k < num_classes; ++k) {
    const double delta = scale * (p[k] - (k == label ? 1.0 : 0.0));
    kernels::axpy(delta, x, std::span<double>(grad_w + k * dim, dim));
    grad_b[k] += delta;
  }
  return loss;
}

}  // namespace scsampler
