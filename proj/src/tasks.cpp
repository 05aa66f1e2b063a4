#include "dexp/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dexp/error.hpp"

namespace dexp {
namespace {

constexpr double kCosEps = 1e-8;    // directional-loss norm guard
constexpr double kNormEps = 1e-12;  // smoothing of unsquared cloud norms

Tensor flat_grad_from_cloud(const Tensor& cloud_grad) {
  return cloud_grad.reshaped({cloud_grad.size()});
}

}  // namespace

SourceBranchMode parse_source_branch_mode(const std::string& name) {
  if (name == "base-subspace") return SourceBranchMode::base_subspace;
  if (name == "frozen-copy") return SourceBranchMode::frozen_copy;
  throw ConfigError("unknown source branch mode: " + name);
}

const char* to_string(SourceBranchMode mode) {
  return mode == SourceBranchMode::base_subspace ? "base-subspace"
                                                 : "frozen-copy";
}

const char* to_string(TaskKind kind) {
  return kind == TaskKind::directional ? "directional" : "fewshot";
}

double cosine_error(const Tensor& u, const Tensor& v) {
  const double nu = std::sqrt(sqnorm(u) + kCosEps * kCosEps);
  const double nv = std::sqrt(sqnorm(v) + kCosEps * kCosEps);
  return 1.0 - dot(u, v) / ((nu + kCosEps) * (nv + kCosEps));
}

double LossReport::term(const std::string& name) const {
  for (const auto& [key, value] : terms) {
    if (key == name) return value;
  }
  throw std::invalid_argument("loss report: no term named " + name);
}

LossReport loss_src(const Architecture& arch, const GeneratorParams& params,
                    const Tensor& z_batch, const Tensor& factor_map,
                    const FactorVector& offset) {
  if (z_batch.rank() != 2 || z_batch.cols() != arch.latent_dim) {
    throw std::invalid_argument("loss_src: z_batch shape");
  }
  if (factor_map.rank() != 2 || factor_map.rows() != 4 ||
      factor_map.cols() != arch.latent_dim) {
    throw std::invalid_argument("loss_src: factor map shape");
  }
  const std::size_t batch = z_batch.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const double inv_coords = 1.0 / static_cast<double>(arch.output_dim());

  LossReport report;
  report.grads = zeros_like(params);
  for (std::size_t b = 0; b < batch; ++b) {
    const Tensor z = z_batch.row(b);
    const Tensor th = matvec(factor_map, z);
    FactorVector f;
    f.r = offset.r + th[0];
    f.cx = offset.cx + th[1];
    f.cy = offset.cy + th[2];
    f.ecc = offset.ecc + th[3];
    const PointCloud target = render(DomainKind::ellipse, f, arch.points);
    const PointCloud out = forward(arch, params, z);

    double value = 0.0;
    Tensor grad_out({arch.points, 2});
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
      const double d = out.points[i] - target.points[i];
      value += d * d * inv_coords;
      grad_out[i] = 2.0 * d * inv_coords * inv_batch;
    }
    report.value += value * inv_batch;
    const BackwardResult back =
        backward(arch, params, z, flat_grad_from_cloud(grad_out));
    accumulate(report.grads, back.grads);
  }
  report.terms = {{"src", report.value}};
  return report;
}

LossReport loss_recon_replay(const Architecture& arch,
                             const GeneratorParams& params,
                             const FrozenGenerator& frozen,
                             const EmbeddingSpace& space,
                             const Tensor& z_batch, const LossWeights& w) {
  std::vector<PointCloud> refs;
  refs.reserve(z_batch.rows());
  for (std::size_t b = 0; b < z_batch.rows(); ++b) {
    refs.push_back(forward(frozen.arch, frozen.params, z_batch.row(b)));
  }
  return loss_recon_replay(arch, params, space, z_batch, refs, w);
}

LossReport loss_recon_replay(const Architecture& arch,
                             const GeneratorParams& params,
                             const EmbeddingSpace& space,
                             const Tensor& z_batch,
                             const std::vector<PointCloud>& refs,
                             const LossWeights& w) {
  const std::size_t batch = z_batch.rows();
  if (refs.size() != batch) {
    throw std::invalid_argument("loss_recon_replay: reference count");
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);

  LossReport report;
  report.grads = zeros_like(params);
  double lpips_total = 0.0, l2_total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const Tensor z = z_batch.row(b);
    const PointCloud out = forward(arch, params, z);
    const PointCloud& ref = refs[b];

    // Perceptual stand-in: squared distance in the frozen embedding space.
    const Tensor e_out = space.embed(out);
    const Tensor e_ref = space.embed(ref);
    const Tensor de = e_out - e_ref;
    lpips_total += sqnorm(de) * inv_batch;
    Tensor cloud_grad = space.embed_vjp(out, de * 2.0);
    cloud_grad *= w.lambda_lpips * inv_batch;

    // Smoothed Euclidean cloud distance; exactly zero at equality.
    const Tensor diff = out.points - ref.points;
    const double root = std::sqrt(sqnorm(diff) + kNormEps * kNormEps);
    l2_total += (root - kNormEps) * inv_batch;
    cloud_grad += diff * (w.lambda_l2 * inv_batch / root);

    const BackwardResult back =
        backward(arch, params, z, flat_grad_from_cloud(cloud_grad));
    accumulate(report.grads, back.grads);
  }
  report.value = w.lambda_lpips * lpips_total + w.lambda_l2 * l2_total;
  report.terms = {{"recon", report.value},
                  {"recon_lpips", lpips_total},
                  {"recon_l2", l2_total}};
  return report;
}

LossReport loss_directional(const Architecture& arch,
                            const GeneratorParams& params,
                            const EmbeddingSpace& space,
                            const SourceProvider& source,
                            const Tensor& z_batch,
                            const AdaptationTask& task) {
  if (task.kind != TaskKind::directional) {
    throw std::invalid_argument("loss_directional: wrong task kind");
  }
  const Tensor dt = task.anchor_target - task.anchor_source;
  if (norm(dt) < kCosEps) {
    throw NumericError("loss_directional: degenerate anchor pair");
  }
  const double nt = std::sqrt(sqnorm(dt) + kCosEps * kCosEps);
  const std::size_t batch = z_batch.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);

  LossReport report;
  report.grads = zeros_like(params);
  for (std::size_t b = 0; b < batch; ++b) {
    const Tensor z = z_batch.row(b);
    const PointCloud out = forward(arch, params, z);
    const Tensor e_out = space.embed(out);
    const Tensor e_src = space.embed(source(z));
    const Tensor di = e_out - e_src;

    const double ni = std::sqrt(sqnorm(di) + kCosEps * kCosEps);
    const double denom = (ni + kCosEps) * (nt + kCosEps);
    const double align = dot(di, dt);
    report.value += (1.0 - align / denom) * inv_batch;

    // d(1 - cos)/d di = -dt/denom + align * di / (ni * (ni+eps)^2 * (nt+eps))
    Tensor ddi = dt * (-1.0 / denom);
    ddi += di * (align / (ni * (ni + kCosEps) * (ni + kCosEps) *
                          (nt + kCosEps)));
    const Tensor cloud_grad = space.embed_vjp(out, ddi * inv_batch);
    const BackwardResult back =
        backward(arch, params, z, flat_grad_from_cloud(cloud_grad));
    accumulate(report.grads, back.grads);
  }
  report.terms = {{"dir_" + task.domain_id, report.value}};
  return report;
}

LossReport loss_fewshot(const Architecture& arch,
                        const GeneratorParams& params,
                        const EmbeddingSpace& space,
                        const std::vector<FewshotReference>& references) {
  if (references.empty()) {
    throw std::invalid_argument("loss_fewshot: empty reference set");
  }
  const double inv_m = 1.0 / static_cast<double>(references.size());

  LossReport report;
  report.grads = zeros_like(params);
  for (const FewshotReference& ref : references) {
    const PointCloud out = forward(arch, params, ref.z);
    const Tensor e_out = space.embed(out);
    const Tensor e_ref = space.embed(ref.x);
    const Tensor de = e_out - e_ref;
    Tensor cloud_grad = space.embed_vjp(out, de * (2.0 * inv_m));

    const Tensor diff = out.points - ref.x.points;
    const double root = std::sqrt(sqnorm(diff) + kNormEps * kNormEps);
    cloud_grad += diff * (inv_m / root);

    report.value += (sqnorm(de) + root - kNormEps) * inv_m;
    const BackwardResult back =
        backward(arch, params, ref.z, flat_grad_from_cloud(cloud_grad));
    accumulate(report.grads, back.grads);
  }
  report.terms = {{"fewshot", report.value}};
  return report;
}

std::vector<FewshotReference> project_references(
    const std::vector<FewshotReference>& refs, const LatentBasis& basis,
    const SubspaceRegistry& registry, const std::string& domain_id) {
  std::vector<FewshotReference> out;
  out.reserve(refs.size());
  for (const FewshotReference& ref : refs) {
    out.push_back(
        {project_repurposed(ref.z, basis, registry, domain_id), ref.x});
  }
  return out;
}

LossReport loss_expand(const Architecture& arch, const GeneratorParams& params,
                       const EmbeddingSpace& space,
                       const FrozenGenerator& frozen, const LatentBasis& basis,
                       const SubspaceRegistry& registry,
                       const std::vector<AdaptationTask>& tasks, Rng& rng,
                       std::size_t batch) {
  LossReport report;
  report.grads = zeros_like(params);

  // All tasks contribute each call; above 16 tasks a uniform random subset
  // keeps the cost bounded, scaled to preserve the expectation.
  constexpr std::size_t kMaxActive = 16;
  std::vector<std::size_t> active(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) active[i] = i;
  double scale = 1.0;
  if (tasks.size() > kMaxActive) {
    for (std::size_t i = 0; i < kMaxActive; ++i) {
      const std::size_t j = i + rng.uniform_index(active.size() - i);
      std::swap(active[i], active[j]);
    }
    active.resize(kMaxActive);
    std::sort(active.begin(), active.end());
    scale = static_cast<double>(tasks.size()) /
            static_cast<double>(kMaxActive);
  }

  for (std::size_t idx : active) {
    const AdaptationTask& task = tasks[idx];
    if (!registry.has(task.domain_id)) {
      throw std::invalid_argument("loss_expand: task not registered: " +
                                  task.domain_id);
    }
    LossReport part;
    if (task.kind == TaskKind::directional) {
      Tensor zs({batch, arch.latent_dim});
      for (std::size_t b = 0; b < batch; ++b) {
        Tensor z({arch.latent_dim});
        for (std::size_t i = 0; i < z.size(); ++i) {
          z[i] = basis.mean[i] + rng.normal();
        }
        zs.set_row(b, project_repurposed(z, basis, registry, task.domain_id));
      }
      SourceProvider source;
      if (task.mode == SourceBranchMode::base_subspace) {
        source = [&](const Tensor& z) {
          return forward(arch, params, project_base(z, basis, registry));
        };
      } else {
        source = [&](const Tensor& z) {
          return forward(frozen.arch, frozen.params, z);
        };
      }
      part = loss_directional(arch, params, space, source, zs, task);
    } else {
      const std::vector<FewshotReference> refs = project_references(
          task.references, basis, registry, task.domain_id);
      part = loss_fewshot(arch, params, space, refs);
      part.terms = {{"fewshot_" + task.domain_id, part.value}};
    }
    report.value += part.value * scale;
    accumulate(report.grads, part.grads, scale);
    for (const auto& [name, value] : part.terms) {
      report.terms.emplace_back(name, value);
    }
  }
  return report;
}

LossReport loss_reg(const Architecture& arch, const GeneratorParams& params,
                    const EmbeddingSpace& space, const FrozenGenerator& frozen,
                    const LatentBasis& basis, const SubspaceRegistry& registry,
                    Rng& rng, std::size_t batch, const Tensor& factor_map,
                    const FactorVector& offset, const LossWeights& w) {
  Tensor zs({batch, arch.latent_dim});
  for (std::size_t b = 0; b < batch; ++b) {
    Tensor z({arch.latent_dim});
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] = basis.mean[i] + rng.normal();
    }
    zs.set_row(b, project_base(z, basis, registry));
  }
  LossReport src = loss_src(arch, params, zs, factor_map, offset);
  LossReport recon = loss_recon_replay(arch, params, frozen, space, zs, w);

  LossReport report;
  report.value = w.lambda_src * src.value + recon.value;
  report.grads = zeros_like(params);
  accumulate(report.grads, src.grads, w.lambda_src);
  accumulate(report.grads, recon.grads);
  report.terms = {{"reg", report.value}, {"src", src.value}};
  for (const auto& [name, value] : recon.terms) {
    report.terms.emplace_back(name, value);
  }
  return report;
}

LossReport loss_full(const Architecture& arch, const GeneratorParams& params,
                     const EmbeddingSpace& space, const FrozenGenerator& frozen,
                     const LatentBasis& basis, const SubspaceRegistry& registry,
                     const std::vector<AdaptationTask>& tasks, Rng& rng,
                     std::size_t batch, const Tensor& factor_map,
                     const FactorVector& offset, const LossWeights& w) {
  LossReport expand = loss_expand(arch, params, space, frozen, basis, registry,
                                  tasks, rng, batch);
  LossReport reg = loss_reg(arch, params, space, frozen, basis, registry, rng,
                            batch, factor_map, offset, w);
  LossReport report;
  report.value = expand.value + reg.value;
  report.grads = zeros_like(params);
  accumulate(report.grads, expand.grads);
  accumulate(report.grads, reg.grads);
  report.terms = {{"full", report.value}, {"expand", expand.value}};
  for (const auto& [name, value] : expand.terms) {
    report.terms.emplace_back(name, value);
  }
  for (const auto& [name, value] : reg.terms) {
    report.terms.emplace_back(name, value);
  }
  return report;
}

}  // namespace dexp
