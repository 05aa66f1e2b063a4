#pragma once

#include <cstdint>

#include "dexp/rng.hpp"
#include "dexp/scene.hpp"
#include "dexp/tensor.hpp"

namespace dexp {

// Fixed three-layer architecture: tanh on both hidden layers, linear output
// reshaped to a K x 2 cloud. The first layer is the unique input to the
// latent factorization.
struct Architecture {
  std::size_t latent_dim = 16;
  std::size_t hidden = 64;
  std::size_t points = 32;
  std::size_t output_dim() const { return 2 * points; }
  bool operator==(const Architecture&) const = default;
};

struct GeneratorParams {
  Tensor w1, b1;  // hidden x latent, hidden
  Tensor w2, b2;  // hidden x hidden, hidden
  Tensor w3, b3;  // 2K x hidden, 2K

  // Seeded init: weights Gaussian with documented scales (the first layer
  // starts near zero so input directions the data never uses stay quiet),
  // biases zero. Draw order is w1, w2, w3.
  static GeneratorParams init(const Architecture& arch, Rng& rng);
  static GeneratorParams zeros(const Architecture& arch);
};

// Gradients mirror the parameter layout.
using GeneratorGrads = GeneratorParams;

GeneratorGrads zeros_like(const GeneratorParams& p);
void accumulate(GeneratorGrads& into, const GeneratorGrads& g,
                double scale = 1.0);
void scale_grads(GeneratorGrads& g, double scale);
bool grads_finite(const GeneratorGrads& g);

// x = w3 tanh(w2 tanh(w1 z + b1) + b2) + b3, reshaped K x 2.
PointCloud forward(const Architecture& arch, const GeneratorParams& p,
                   const Tensor& z);

struct BackwardResult {
  GeneratorGrads grads;
  Tensor z_grad;
};

// Exact vector-Jacobian products for the fixed architecture. grad_output is
// K x 2 (or flat 2K).
BackwardResult backward(const Architecture& arch, const GeneratorParams& p,
                        const Tensor& z, const Tensor& grad_output);

// Immutable deep copy of the source generator.
struct FrozenGenerator {
  Architecture arch;
  GeneratorParams params;
};

FrozenGenerator clone_frozen(const Architecture& arch,
                             const GeneratorParams& p);

// FNV-1a over the IEEE-754 bytes of all parameters in declaration order.
std::uint64_t checksum(const GeneratorParams& p);

// Mean squared coordinate difference between two clouds; the cloud-space
// squared distance used by reconstruction-style losses.
double cloud_mse(const PointCloud& a, const PointCloud& b);

struct InvertOptions {
  std::size_t steps = 500;
  double lr = 0.05;
};

// Gradient-descent inversion: Adam from z = 0 on cloud_mse(G(z), target),
// fixed step count, returns the best-seen z. Fully deterministic.
Tensor invert(const Architecture& arch, const GeneratorParams& p,
              const PointCloud& target, const InvertOptions& opt = {});

}  // namespace dexp
