#include "dexp/eval.hpp"

#include <cmath>
#include <stdexcept>

#include "dexp/error.hpp"
#include "dexp/numerics.hpp"
#include "dexp/parallel.hpp"

namespace dexp {
namespace {

constexpr std::uint64_t kProbeStream = 20;
constexpr std::uint64_t kFidelityGenStream = 21;
constexpr std::uint64_t kFidelityDataStream = 22;

Tensor draw_probe_latents(const LatentBasis& basis, std::size_t n,
                          std::uint64_t seed) {
  Rng rng(seed, kProbeStream);
  const std::size_t d = basis.dim();
  Tensor zs({n, d});
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < d; ++i) {
      zs(j, i) = basis.mean[i] + rng.normal();
    }
  }
  return zs;
}

Tensor apply_subspace(const Tensor& z, const LatentBasis& basis,
                      const SubspaceRegistry& registry,
                      const SubspaceRef& subspace) {
  switch (subspace.kind) {
    case SubspaceRef::Kind::base:
      return project_base(z, basis, registry);
    case SubspaceRef::Kind::domain:
      return project_repurposed(z, basis, registry, subspace.domain_id);
    case SubspaceRef::Kind::raw:
      return z;
  }
  throw std::invalid_argument("domain_error: bad subspace");
}

}  // namespace

double domain_error(const Architecture& arch, const GeneratorParams& params,
                    const LatentBasis& basis, const SubspaceRegistry& registry,
                    const SubspaceRef& subspace, const Tensor& anchor,
                    const EmbeddingSpace& space, std::size_t n,
                    std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("domain_error: n >= 1");
  if (subspace.kind == SubspaceRef::Kind::domain &&
      !registry.has(subspace.domain_id)) {
    throw std::invalid_argument("domain_error: unknown subspace " +
                                subspace.domain_id);
  }
  const Tensor zs = draw_probe_latents(basis, n, seed);
  const auto errors = parallel_map(n, [&](std::size_t j) {
    const Tensor z = apply_subspace(zs.row(j), basis, registry, subspace);
    return cosine_error(space.embed(forward(arch, params, z)), anchor);
  });
  double total = 0.0;
  for (double e : errors) total += e;
  return total / static_cast<double>(n);
}

LeakageMatrix leakage_matrix(const Architecture& arch,
                             const GeneratorParams& params,
                             const LatentBasis& basis,
                             const SubspaceRegistry& registry,
                             const std::vector<AdaptationTask>& tasks,
                             const EmbeddingSpace& space, std::size_t n,
                             std::uint64_t seed) {
  LeakageMatrix m;
  m.n = n;
  m.seed = seed;
  m.subspaces.push_back("base");
  for (const AdaptationTask& task : tasks) {
    m.task_ids.push_back(task.domain_id);
    m.subspaces.push_back(task.domain_id);
  }
  m.values = Tensor({tasks.size(), tasks.size() + 1});
  for (std::size_t row = 0; row < tasks.size(); ++row) {
    const Tensor& anchor = tasks[row].anchor_target;
    if (anchor.size() == 0) {
      throw std::invalid_argument("leakage_matrix: task " +
                                  tasks[row].domain_id + " has no anchor");
    }
    for (std::size_t col = 0; col < m.subspaces.size(); ++col) {
      const SubspaceRef ref = col == 0 ? SubspaceRef::base()
                                       : SubspaceRef::domain(m.subspaces[col]);
      m.values(row, col) = domain_error(arch, params, basis, registry, ref,
                                        anchor, space, n, seed);
    }
  }
  return m;
}

std::vector<double> default_alpha_grid(double s) {
  std::vector<double> alphas;
  alphas.push_back(-0.5 * s);
  for (int i = 0; i <= 10; ++i) {
    alphas.push_back(s * static_cast<double>(i) / 10.0);
  }
  alphas.push_back(1.5 * s);
  return alphas;
}

std::vector<TraversalPoint> traversal_sweep(
    const Architecture& arch, const GeneratorParams& params,
    const LatentBasis& basis, const SubspaceRegistry& registry,
    const AdaptationTask& task, const std::vector<double>& alphas,
    const EmbeddingSpace& space, std::size_t n, std::uint64_t seed) {
  const std::size_t index = registry.index_of(task.domain_id);
  const Tensor zs = draw_probe_latents(basis, n, seed);
  std::vector<TraversalPoint> curve;
  curve.reserve(alphas.size());
  for (double alpha : alphas) {
    const auto errors = parallel_map(n, [&](std::size_t j) {
      const Tensor z =
          traverse(project_base(zs.row(j), basis, registry), basis, index,
                   alpha);
      return cosine_error(space.embed(forward(arch, params, z)),
                          task.anchor_target);
    });
    double total = 0.0;
    for (double e : errors) total += e;
    curve.push_back({alpha, total / static_cast<double>(n)});
  }
  return curve;
}

CompositionGrid composition_grid(const Architecture& arch,
                                 const GeneratorParams& params,
                                 const LatentBasis& basis,
                                 const SubspaceRegistry& registry,
                                 const AdaptationTask& task_i,
                                 const AdaptationTask& task_j,
                                 const std::vector<double>& alphas,
                                 const std::vector<double>& betas,
                                 const EmbeddingSpace& space, std::size_t n,
                                 std::uint64_t seed) {
  const std::size_t idx_i = registry.index_of(task_i.domain_id);
  const std::size_t idx_j = registry.index_of(task_j.domain_id);
  const Tensor zs = draw_probe_latents(basis, n, seed);

  CompositionGrid grid;
  grid.alphas = alphas;
  grid.betas = betas;
  grid.error_i = Tensor({alphas.size(), betas.size()});
  grid.error_j = Tensor({alphas.size(), betas.size()});
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    for (std::size_t b = 0; b < betas.size(); ++b) {
      double err_i = 0.0, err_j = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        const Tensor z =
            compose(project_base(zs.row(p), basis, registry), basis,
                    {{idx_i, alphas[a]}, {idx_j, betas[b]}});
        const Tensor e = space.embed(forward(arch, params, z));
        err_i += cosine_error(e, task_i.anchor_target);
        err_j += cosine_error(e, task_j.anchor_target);
      }
      grid.error_i(a, b) = err_i / static_cast<double>(n);
      grid.error_j(a, b) = err_j / static_cast<double>(n);
    }
  }
  return grid;
}

GeneratorParams interpolate_params(const GeneratorParams& a,
                                   const GeneratorParams& b, double t) {
  if (!a.w1.same_shape(b.w1) || !a.w2.same_shape(b.w2) ||
      !a.w3.same_shape(b.w3)) {
    throw std::invalid_argument("interpolate_params: architecture mismatch");
  }
  GeneratorParams out = a;
  auto lerp = [t](Tensor& dst, const Tensor& pa, const Tensor& pb) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = (1.0 - t) * pa[i] + t * pb[i];
    }
  };
  lerp(out.w1, a.w1, b.w1);
  lerp(out.b1, a.b1, b.b1);
  lerp(out.w2, a.w2, b.w2);
  lerp(out.b2, a.b2, b.b2);
  lerp(out.w3, a.w3, b.w3);
  lerp(out.b3, a.b3, b.b3);
  return out;
}

Tensor base_subspace_embeddings(const Architecture& arch,
                                const GeneratorParams& params,
                                const LatentBasis& basis,
                                const SubspaceRegistry& registry,
                                const EmbeddingSpace& space, std::size_t n,
                                std::uint64_t seed) {
  Rng rng(seed, kFidelityGenStream);
  const std::size_t d = basis.dim();
  Tensor out({n, space.dim()});
  for (std::size_t j = 0; j < n; ++j) {
    Tensor z({d});
    for (std::size_t i = 0; i < d; ++i) z[i] = basis.mean[i] + rng.normal();
    const Tensor e = space.embed(
        forward(arch, params, project_base(z, basis, registry)));
    out.set_row(j, e);
  }
  return out;
}

Tensor source_data_embeddings(const Tensor& factor_map,
                              const FactorVector& offset, std::size_t k_points,
                              const EmbeddingSpace& space, std::size_t n,
                              std::uint64_t seed) {
  Rng rng(seed, kFidelityDataStream);
  const std::size_t d = factor_map.cols();
  Tensor out({n, space.dim()});
  for (std::size_t j = 0; j < n; ++j) {
    Tensor z({d});
    for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
    const Tensor th = matvec(factor_map, z);
    FactorVector f;
    f.r = offset.r + th[0];
    f.cx = offset.cx + th[1];
    f.cy = offset.cy + th[2];
    f.ecc = offset.ecc + th[3];
    out.set_row(j, space.embed(render(DomainKind::ellipse, f, k_points)));
  }
  return out;
}

double source_fidelity(const Architecture& arch, const GeneratorParams& params,
                       const LatentBasis& basis,
                       const SubspaceRegistry& registry,
                       const Tensor& factor_map, const FactorVector& offset,
                       const EmbeddingSpace& space, std::size_t n,
                       double bandwidth, std::uint64_t seed) {
  const Tensor gen =
      base_subspace_embeddings(arch, params, basis, registry, space, n, seed);
  const Tensor data =
      source_data_embeddings(factor_map, offset, arch.points, space, n, seed);
  return mmd2(gen, data, bandwidth);
}

double alignment_error(const std::vector<PointCloud>& a,
                       const std::vector<PointCloud>& b,
                       const EmbeddingSpace& space) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("alignment_error: probe sets of unequal size");
  }
  if (a.empty()) throw std::invalid_argument("alignment_error: empty probe");
  const std::size_t e = space.dim();
  // Compare the centroid-relative feature block (everything past the raw
  // centroid), with the mean per-pair difference removed.
  const std::size_t lo = 2;
  std::vector<Tensor> diffs;
  diffs.reserve(a.size());
  Tensor mean({e - lo});
  for (std::size_t p = 0; p < a.size(); ++p) {
    const Tensor ea = space.embed(a[p]);
    const Tensor eb = space.embed(b[p]);
    Tensor diff({e - lo});
    for (std::size_t i = lo; i < e; ++i) diff[i - lo] = eb[i] - ea[i];
    mean += diff;
    diffs.push_back(std::move(diff));
  }
  mean *= 1.0 / static_cast<double>(a.size());
  double total = 0.0;
  for (const Tensor& diff : diffs) total += norm(diff - mean);
  return total / static_cast<double>(a.size());
}

}  // namespace dexp
