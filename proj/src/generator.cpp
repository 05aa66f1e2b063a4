#include "dexp/generator.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "dexp/error.hpp"
#include "dexp/numerics.hpp"

namespace dexp {

GeneratorParams GeneratorParams::init(const Architecture& arch, Rng& rng) {
  const std::size_t d = arch.latent_dim, h = arch.hidden,
                    o = arch.output_dim();
  GeneratorParams p = zeros(arch);
  const double s1 = 0.003;
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  const double s3 = 1.0 / std::sqrt(static_cast<double>(h));
  p.w1 = rng.normal_tensor({h, d}) * s1;
  p.w2 = rng.normal_tensor({h, h}) * s2;
  p.w3 = rng.normal_tensor({o, h}) * s3;
  return p;
}

GeneratorParams GeneratorParams::zeros(const Architecture& arch) {
  const std::size_t d = arch.latent_dim, h = arch.hidden,
                    o = arch.output_dim();
  GeneratorParams p;
  p.w1 = Tensor({h, d});
  p.b1 = Tensor({h});
  p.w2 = Tensor({h, h});
  p.b2 = Tensor({h});
  p.w3 = Tensor({o, h});
  p.b3 = Tensor({o});
  return p;
}

GeneratorGrads zeros_like(const GeneratorParams& p) {
  GeneratorGrads g;
  g.w1 = Tensor::zeros(p.w1.shape());
  g.b1 = Tensor::zeros(p.b1.shape());
  g.w2 = Tensor::zeros(p.w2.shape());
  g.b2 = Tensor::zeros(p.b2.shape());
  g.w3 = Tensor::zeros(p.w3.shape());
  g.b3 = Tensor::zeros(p.b3.shape());
  return g;
}

void accumulate(GeneratorGrads& into, const GeneratorGrads& g, double scale) {
  into.w1 += g.w1 * scale;
  into.b1 += g.b1 * scale;
  into.w2 += g.w2 * scale;
  into.b2 += g.b2 * scale;
  into.w3 += g.w3 * scale;
  into.b3 += g.b3 * scale;
}

void scale_grads(GeneratorGrads& g, double scale) {
  g.w1 *= scale;
  g.b1 *= scale;
  g.w2 *= scale;
  g.b2 *= scale;
  g.w3 *= scale;
  g.b3 *= scale;
}

bool grads_finite(const GeneratorGrads& g) {
  return all_finite(g.w1) && all_finite(g.b1) && all_finite(g.w2) &&
         all_finite(g.b2) && all_finite(g.w3) && all_finite(g.b3);
}

namespace {

void check_latent(const Architecture& arch, const Tensor& z) {
  if (z.rank() != 1 || z.size() != arch.latent_dim) {
    throw std::invalid_argument("generator: latent length " +
                                std::to_string(z.size()) + ", expected " +
                                std::to_string(arch.latent_dim));
  }
  if (!all_finite(z)) throw NumericError("generator: non-finite latent");
}

struct Activations {
  Tensor h1, h2, out;
};

Activations run_forward(const Architecture& arch, const GeneratorParams& p,
                        const Tensor& z) {
  check_latent(arch, z);
  Activations a;
  a.h1 = matvec(p.w1, z) + p.b1;
  for (std::size_t i = 0; i < a.h1.size(); ++i) a.h1[i] = std::tanh(a.h1[i]);
  a.h2 = matvec(p.w2, a.h1) + p.b2;
  for (std::size_t i = 0; i < a.h2.size(); ++i) a.h2[i] = std::tanh(a.h2[i]);
  a.out = matvec(p.w3, a.h2) + p.b3;
  return a;
}

}  // namespace

PointCloud forward(const Architecture& arch, const GeneratorParams& p,
                   const Tensor& z) {
  Activations a = run_forward(arch, p, z);
  return PointCloud(a.out.reshaped({arch.points, 2}));
}

BackwardResult backward(const Architecture& arch, const GeneratorParams& p,
                        const Tensor& z, const Tensor& grad_output) {
  if (grad_output.size() != arch.output_dim()) {
    throw std::invalid_argument("backward: grad_output length");
  }
  const Activations a = run_forward(arch, p, z);
  const std::size_t d = arch.latent_dim, h = arch.hidden,
                    o = arch.output_dim();

  BackwardResult r;
  r.grads = zeros_like(p);

  // Output layer.
  for (std::size_t i = 0; i < o; ++i) {
    const double g = grad_output[i];
    r.grads.b3[i] = g;
    if (g == 0.0) continue;
    for (std::size_t j = 0; j < h; ++j) r.grads.w3(i, j) = g * a.h2[j];
  }
  Tensor dh2({h});
  for (std::size_t j = 0; j < h; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < o; ++i) s += p.w3(i, j) * grad_output[i];
    dh2[j] = s;
  }
  // Second hidden layer.
  Tensor da2({h});
  for (std::size_t j = 0; j < h; ++j) {
    da2[j] = dh2[j] * (1.0 - a.h2[j] * a.h2[j]);
  }
  for (std::size_t i = 0; i < h; ++i) {
    const double g = da2[i];
    r.grads.b2[i] = g;
    if (g == 0.0) continue;
    for (std::size_t j = 0; j < h; ++j) r.grads.w2(i, j) = g * a.h1[j];
  }
  Tensor dh1({h});
  for (std::size_t j = 0; j < h; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < h; ++i) s += p.w2(i, j) * da2[i];
    dh1[j] = s;
  }
  // First hidden layer.
  Tensor da1({h});
  for (std::size_t j = 0; j < h; ++j) {
    da1[j] = dh1[j] * (1.0 - a.h1[j] * a.h1[j]);
  }
  for (std::size_t i = 0; i < h; ++i) {
    const double g = da1[i];
    r.grads.b1[i] = g;
    if (g == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) r.grads.w1(i, j) = g * z[j];
  }
  r.z_grad = Tensor({d});
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < h; ++i) s += p.w1(i, j) * da1[i];
    r.z_grad[j] = s;
  }
  return r;
}

FrozenGenerator clone_frozen(const Architecture& arch,
                             const GeneratorParams& p) {
  return FrozenGenerator{arch, p};
}

std::uint64_t checksum(const GeneratorParams& p) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto feed = [&hash](const Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double value = t[i];
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(double));
      std::memcpy(&bits, &value, sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        hash ^= (bits >> (8 * b)) & 0xffULL;
        hash *= 0x100000001b3ULL;
      }
    }
  };
  feed(p.w1);
  feed(p.b1);
  feed(p.w2);
  feed(p.b2);
  feed(p.w3);
  feed(p.b3);
  return hash;
}

double cloud_mse(const PointCloud& a, const PointCloud& b) {
  if (!a.points.same_shape(b.points)) {
    throw std::invalid_argument("cloud_mse: size mismatch");
  }
  const std::size_t n = a.points.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a.points[i] - b.points[i];
    s += d * d;
  }
  return s / static_cast<double>(n);
}

Tensor invert(const Architecture& arch, const GeneratorParams& p,
              const PointCloud& target, const InvertOptions& opt) {
  if (opt.steps < 1) throw std::invalid_argument("invert: steps must be >= 1");
  if (target.size() != arch.points) {
    throw std::invalid_argument("invert: target size mismatch");
  }
  Tensor z({arch.latent_dim});
  Tensor best_z = z;
  double best_loss = cloud_mse(forward(arch, p, z), target);

  AdamConfig cfg;
  cfg.lr = opt.lr;
  AdamState state = AdamState::zeros_like(z);
  const double inv_n = 1.0 / static_cast<double>(target.points.size());
  for (std::size_t it = 0; it < opt.steps; ++it) {
    const PointCloud out = forward(arch, p, z);
    Tensor grad_out({arch.points, 2});
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
      grad_out[i] = 2.0 * (out.points[i] - target.points[i]) * inv_n;
    }
    const BackwardResult back = backward(arch, p, z, grad_out);
    adam_step_inplace(z, back.z_grad, state, cfg, "z");
    const double loss = cloud_mse(forward(arch, p, z), target);
    if (!std::isfinite(loss)) {
      throw NumericError("invert: diverged at iteration " +
                         std::to_string(it));
    }
    if (loss < best_loss) {
      best_loss = loss;
      best_z = z;
    }
  }
  return best_z;
}

}  // namespace dexp
