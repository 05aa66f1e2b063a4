#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dexp/generator.hpp"
#include "dexp/latent.hpp"
#include "dexp/rng.hpp"
#include "dexp/scene.hpp"

namespace dexp {

enum class TaskKind { directional, fewshot };
enum class SourceBranchMode { base_subspace, frozen_copy };

SourceBranchMode parse_source_branch_mode(const std::string& name);
const char* to_string(SourceBranchMode mode);
const char* to_string(TaskKind kind);

struct FewshotReference {
  Tensor z;      // D
  PointCloud x;  // K x 2
};

// A domain's adaptation objective. Directional tasks carry the frozen
// source/target anchor pair and the source-branch mode; fewshot tasks carry
// their reference set.
struct AdaptationTask {
  std::string domain_id;
  TaskKind kind = TaskKind::directional;
  DomainKind target_kind = DomainKind::square;
  Tensor anchor_source;
  Tensor anchor_target;
  SourceBranchMode mode = SourceBranchMode::base_subspace;
  std::vector<FewshotReference> references;
};

struct LossReport {
  double value = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  GeneratorGrads grads;

  double term(const std::string& name) const;
};

// Gradient-blocked source branch for the directional loss: latent -> cloud.
using SourceProvider = std::function<PointCloud(const Tensor&)>;

// Weighting shared by the replay and regularization losses.
struct LossWeights {
  double lambda_lpips = 10.0;
  double lambda_l2 = 10.0;
  double lambda_src = 1.0;
};

// Mean over the batch of the mean squared coordinate error between G(z) and
// the oracle rendering of theta(z) = offset + factor_map * z.
LossReport loss_src(const Architecture& arch, const GeneratorParams& params,
                    const Tensor& z_batch, const Tensor& factor_map,
                    const FactorVector& offset);

// Replay alignment against the frozen source copy: weighted embedding
// squared distance (the perceptual stand-in) plus Euclidean cloud distance.
// The caller projects z_batch onto the base subspace first.
LossReport loss_recon_replay(const Architecture& arch,
                             const GeneratorParams& params,
                             const FrozenGenerator& frozen,
                             const EmbeddingSpace& space,
                             const Tensor& z_batch, const LossWeights& w);

// Same loss against explicit reference clouds, one per z_batch row. Used by
// the class-conditional baseline where the model latent is augmented but
// the replay target is the frozen generator on the plain latent.
LossReport loss_recon_replay(const Architecture& arch,
                             const GeneratorParams& params,
                             const EmbeddingSpace& space,
                             const Tensor& z_batch,
                             const std::vector<PointCloud>& refs,
                             const LossWeights& w);

// Directional adaptation loss: mean of 1 - cos(dI, dT) with dI the
// embedding change between G(z) and the source branch, dT the anchor
// difference. Norms are smoothed by eps = 1e-8 (inside the square root and
// added to the denominators), so dI = 0 gives exactly 1 with a finite
// gradient. The caller projects z_batch onto the task's subspace.
LossReport loss_directional(const Architecture& arch,
                            const GeneratorParams& params,
                            const EmbeddingSpace& space,
                            const SourceProvider& source,
                            const Tensor& z_batch, const AdaptationTask& task);

// Few-shot reconstruction loss over a reference set (embedding squared
// distance plus Euclidean cloud distance, averaged over references). The
// caller projects reference latents onto the task's subspace.
LossReport loss_fewshot(const Architecture& arch, const GeneratorParams& params,
                        const EmbeddingSpace& space,
                        const std::vector<FewshotReference>& references);

// Sum over tasks of the task loss on a fresh minibatch projected onto the
// task's subspace. For more than 16 tasks, a uniform random subset of 16 is
// used per call with the value scaled by N/16 to keep the expectation.
LossReport loss_expand(const Architecture& arch, const GeneratorParams& params,
                       const EmbeddingSpace& space,
                       const FrozenGenerator& frozen, const LatentBasis& basis,
                       const SubspaceRegistry& registry,
                       const std::vector<AdaptationTask>& tasks, Rng& rng,
                       std::size_t batch);

// Source-preservation objective on the base subspace:
// lambda_src * loss_src + replay alignment, over a fresh p_src minibatch.
LossReport loss_reg(const Architecture& arch, const GeneratorParams& params,
                    const EmbeddingSpace& space, const FrozenGenerator& frozen,
                    const LatentBasis& basis, const SubspaceRegistry& registry,
                    Rng& rng, std::size_t batch, const Tensor& factor_map,
                    const FactorVector& offset, const LossWeights& w);

// loss_expand + loss_reg, gradients summed. Batches are drawn from `rng` in
// that order.
LossReport loss_full(const Architecture& arch, const GeneratorParams& params,
                     const EmbeddingSpace& space, const FrozenGenerator& frozen,
                     const LatentBasis& basis, const SubspaceRegistry& registry,
                     const std::vector<AdaptationTask>& tasks, Rng& rng,
                     std::size_t batch, const Tensor& factor_map,
                     const FactorVector& offset, const LossWeights& w);

// Project the references of a fewshot task onto its repurposed subspace.
std::vector<FewshotReference> project_references(
    const std::vector<FewshotReference>& refs, const LatentBasis& basis,
    const SubspaceRegistry& registry, const std::string& domain_id);

// 1 - cos(u, v) under the smoothed-norm convention shared by the
// directional loss and the anchor-error metrics; always in [0, 2].
double cosine_error(const Tensor& u, const Tensor& v);

}  // namespace dexp
