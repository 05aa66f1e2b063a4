#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dexp/generator.hpp"
#include "dexp/latent.hpp"
#include "dexp/tasks.hpp"

namespace dexp {

// Column-oriented run log; `notes` carries free-form warnings.
struct MetricLog {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> notes;

  std::size_t column_index(const std::string& name) const;
  // Mean of the trailing `window` entries of a column.
  double terminal(const std::string& name, std::size_t window = 50) const;
};

struct PretrainConfig {
  std::size_t iterations = 4000;
  double lr = 1e-3;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  double target_loss = 1e-3;  // build gate for the toy source generator
};

// A pretrained source generator plus the factor map that defines its data.
// The rank-4 supervision leaves every remaining latent direction dormant.
struct SourceModel {
  Architecture arch;
  GeneratorParams params;
  Tensor factor_map;  // 4 x D, orthonormal rows
  FactorVector factor_offset;
  std::uint64_t seed = 0;
  double terminal_loss = 0.0;
};

struct PretrainResult {
  SourceModel model;
  MetricLog log;
};

// Adam on the source loss with z ~ N(0, I). Continues in whole-budget
// chunks up to 4x iterations if the terminal probe loss is still above
// target, then fails with "pretraining did not converge".
PretrainResult pretrain_source(const Architecture& arch,
                               const PretrainConfig& cfg);

struct ExpandConfig {
  std::size_t iterations = 0;  // 0: 3000 * max(1, N/5)
  double lr = 1e-3;
  std::size_t batch = 16;
  double s = 20.0;
  LossWeights weights;
  std::uint64_t seed = 0;
  DirectionPolicy policy = DirectionPolicy::last;
  std::vector<std::size_t> explicit_indices;
  SourceBranchMode nada_mode = SourceBranchMode::base_subspace;
  std::size_t log_interval = 50;
  std::size_t probe_n = 64;

  std::size_t effective_iterations(std::size_t n_tasks) const;
};

struct ExpandResult {
  GeneratorParams params;
  LatentBasis basis;          // frozen at expansion start
  SubspaceRegistry registry;
  FrozenGenerator frozen;     // untouched source copy
  std::vector<AdaptationTask> tasks;
  MetricLog log;     // per-iteration loss terms
  MetricLog probes;  // per-log-interval domain errors on a fixed probe set
};

// The expansion algorithm: factorize once, pick directions, freeze the
// source, then Adam on loss_expand + loss_reg with fresh batches.
ExpandResult expand(const SourceModel& source,
                    const std::vector<AdaptationTask>& tasks,
                    const ExpandConfig& cfg);

// Classic adaptation baseline: fine-tune on the task loss over unprojected
// latents, directional source branch fixed to the frozen copy.
struct AdaptResult {
  GeneratorParams params;
  MetricLog log;
};
AdaptResult adapt_dedicated(const SourceModel& source,
                            const AdaptationTask& task,
                            const ExpandConfig& cfg);

// Keep optimizing the source loss only; snapshots feed the
// source-preservation fluctuation band.
struct ContinueResult {
  GeneratorParams params;
  std::vector<GeneratorParams> snapshots;
  MetricLog log;
};
ContinueResult continue_training(const SourceModel& source,
                                 std::size_t iterations, double lr,
                                 std::size_t batch, std::uint64_t seed,
                                 std::size_t snapshots = 5);

// Class-conditional baseline: first layer widened to accept
// [z; onehot(N + 1)], new columns zero-initialized. Class 0 trains with the
// source loss plus replay, class i with its task loss on unprojected z.
struct ClassConditionalModel {
  Architecture arch;  // latent_dim = base_dim + classes
  GeneratorParams params;
  std::size_t base_dim = 0;
  std::size_t classes = 0;  // N + 1
  Tensor augment(const Tensor& z, std::size_t class_id) const;
};
struct ClassConditionalResult {
  ClassConditionalModel model;
  MetricLog log;
};
ClassConditionalResult train_class_conditional(
    const SourceModel& source, const std::vector<AdaptationTask>& tasks,
    const ExpandConfig& cfg);

}  // namespace dexp
