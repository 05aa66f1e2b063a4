#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "dexp/scene.hpp"
#include "dexp/tasks.hpp"
#include "dexp/trainer.hpp"

namespace dexp {

struct TaskConfig {
  std::string domain_id;
  TaskKind kind = TaskKind::directional;
  DomainKind target_kind = DomainKind::square;  // also the reference kind
  SourceBranchMode mode = SourceBranchMode::base_subspace;
  std::size_t references = 8;       // fewshot only
  std::uint64_t reference_seed = 7;  // fewshot only
};

struct EvalSettings {
  std::size_t probe_n = 256;
  double bandwidth = 4.0;
  std::size_t band_checkpoints = 5;
  std::size_t anchor_n = 256;
  std::uint64_t anchor_seed = 1234;
};

// The experiment document. Schema-validated before any compute; unknown
// keys are rejected with their path.
struct ExperimentConfig {
  Architecture arch;
  PretrainConfig pretrain;
  std::vector<TaskConfig> tasks;
  ExpandConfig expand;
  EvalSettings eval;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Materialize a task: anchors from the eval settings (source anchor is
// always the ellipse domain); fewshot reference sets are rendered from the
// factor prior and inverted against the source generator.
AdaptationTask build_task(const TaskConfig& task, const EvalSettings& eval,
                          const SourceModel& source);
std::vector<AdaptationTask> build_tasks(const ExperimentConfig& cfg,
                                        const SourceModel& source);

}  // namespace dexp
