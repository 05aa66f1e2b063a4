#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dexp/generator.hpp"
#include "dexp/latent.hpp"
#include "dexp/tasks.hpp"

namespace dexp {

// Which affine subspace probe latents are projected onto. `raw` skips
// projection (dedicated baselines have no subspace structure).
struct SubspaceRef {
  enum class Kind { base, domain, raw };
  Kind kind = Kind::base;
  std::string domain_id;

  static SubspaceRef base() { return {Kind::base, {}}; }
  static SubspaceRef domain(std::string id) {
    return {Kind::domain, std::move(id)};
  }
  static SubspaceRef raw() { return {Kind::raw, {}}; }
};

// Mean over n probe latents of 1 - cos(embed(G(proj(z))), anchor); the
// CLIP-error analog. Deterministic in (seed, n).
double domain_error(const Architecture& arch, const GeneratorParams& params,
                    const LatentBasis& basis, const SubspaceRegistry& registry,
                    const SubspaceRef& subspace, const Tensor& anchor,
                    const EmbeddingSpace& space, std::size_t n,
                    std::uint64_t seed);

// Rows: task anchors. Columns: base subspace, then each task's subspace.
struct LeakageMatrix {
  std::vector<std::string> task_ids;
  std::vector<std::string> subspaces;
  Tensor values;  // N x (N + 1)
  std::size_t n = 0;
  std::uint64_t seed = 0;
};
LeakageMatrix leakage_matrix(const Architecture& arch,
                             const GeneratorParams& params,
                             const LatentBasis& basis,
                             const SubspaceRegistry& registry,
                             const std::vector<AdaptationTask>& tasks,
                             const EmbeddingSpace& space, std::size_t n,
                             std::uint64_t seed);

// Alpha grid 0..s in 11 steps plus the extrapolants -s/2 and 3s/2.
std::vector<double> default_alpha_grid(double s);

struct TraversalPoint {
  double alpha = 0.0;
  double error = 0.0;
};
// Domain error along base + alpha * v_i for each alpha; the endpoints
// reproduce the base- and repurposed-subspace metrics exactly.
std::vector<TraversalPoint> traversal_sweep(
    const Architecture& arch, const GeneratorParams& params,
    const LatentBasis& basis, const SubspaceRegistry& registry,
    const AdaptationTask& task, const std::vector<double>& alphas,
    const EmbeddingSpace& space, std::size_t n, std::uint64_t seed);

struct CompositionGrid {
  std::vector<double> alphas;  // task i steps
  std::vector<double> betas;   // task j steps
  Tensor error_i;              // |alphas| x |betas|
  Tensor error_j;
};
CompositionGrid composition_grid(const Architecture& arch,
                                 const GeneratorParams& params,
                                 const LatentBasis& basis,
                                 const SubspaceRegistry& registry,
                                 const AdaptationTask& task_i,
                                 const AdaptationTask& task_j,
                                 const std::vector<double>& alphas,
                                 const std::vector<double>& betas,
                                 const EmbeddingSpace& space, std::size_t n,
                                 std::uint64_t seed);

// Elementwise (1 - t) a + t b; architectures must match.
GeneratorParams interpolate_params(const GeneratorParams& a,
                                   const GeneratorParams& b, double t);

// Embeddings of n base-subspace generations (rows).
Tensor base_subspace_embeddings(const Architecture& arch,
                                const GeneratorParams& params,
                                const LatentBasis& basis,
                                const SubspaceRegistry& registry,
                                const EmbeddingSpace& space, std::size_t n,
                                std::uint64_t seed);
// Embeddings of n procedural source samples from the pretraining factor map.
Tensor source_data_embeddings(const Tensor& factor_map,
                              const FactorVector& offset, std::size_t k_points,
                              const EmbeddingSpace& space, std::size_t n,
                              std::uint64_t seed);

// Squared MMD between base-subspace generations and source data; the
// desk-scale stand-in for FID against the source dataset.
double source_fidelity(const Architecture& arch, const GeneratorParams& params,
                       const LatentBasis& basis,
                       const SubspaceRegistry& registry,
                       const Tensor& factor_map, const FactorVector& offset,
                       const EmbeddingSpace& space, std::size_t n,
                       double bandwidth, std::uint64_t seed);

// Mean residual distance between corresponding outputs in the
// centroid-relative embedding block after removing the mean shift between
// the two sets, so the intended domain change does not count as
// misalignment. Symmetric; zero for identical outputs.
double alignment_error(const std::vector<PointCloud>& a,
                       const std::vector<PointCloud>& b,
                       const EmbeddingSpace& space);

}  // namespace dexp
