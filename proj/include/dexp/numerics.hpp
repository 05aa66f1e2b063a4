#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "dexp/tensor.hpp"

namespace dexp {

// A = U * diag(S) * Vt with r = min(m, n); S descending, U columns and Vt
// rows orthonormal. One-sided Jacobi on columns; exactly-zero singular
// values get orthonormal completion columns in U. Column signs are
// canonicalized so the largest-magnitude entry of each right singular
// vector is positive.
struct SvdResult {
  Tensor u;   // m x r
  Tensor s;   // r, descending, non-negative
  Tensor vt;  // r x n
};
SvdResult svd(const Tensor& a);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Tensor m;
  Tensor v;
  std::int64_t t = 0;
  static AdamState zeros_like(const Tensor& params);
};

// Standard bias-corrected Adam update; throws NumericError naming `block`
// when the gradient is non-finite.
void adam_step_inplace(Tensor& params, const Tensor& grads, AdamState& state,
                       const AdamConfig& cfg, const char* block = "params");
std::pair<Tensor, AdamState> adam_step(Tensor params, const Tensor& grads,
                                       AdamState state, const AdamConfig& cfg);

// Central-difference gradient of a scalar function, coordinate by
// coordinate. The gradient oracle used throughout the test suites.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double h = 1e-5);

// Biased V-statistic squared maximum mean discrepancy with a Gaussian
// kernel exp(-|x - y|^2 / (2 bandwidth^2)). Rows of x and y are samples.
// Arguments are ordered canonically internally so the value is exactly
// symmetric; the result is clamped at zero against roundoff.
double mmd2(const Tensor& x, const Tensor& y, double bandwidth);

}  // namespace dexp
