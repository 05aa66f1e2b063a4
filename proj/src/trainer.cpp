#include "dexp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dexp/error.hpp"
#include "dexp/numerics.hpp"

namespace dexp {
namespace {

// Substream ids per purpose; fixed so every run is replayable.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kFactorStream = 1;
constexpr std::uint64_t kPretrainBatchStream = 2;
constexpr std::uint64_t kPretrainProbeStream = 3;
constexpr std::uint64_t kDormancyStream = 4;
constexpr std::uint64_t kExpandBatchStream = 5;
constexpr std::uint64_t kExpandProbeStream = 6;
constexpr std::uint64_t kContinueBatchStream = 7;
constexpr std::uint64_t kCcBatchStream = 8;
constexpr std::uint64_t kAdaptBatchStream = 10;

struct GeneratorAdam {
  AdamConfig cfg;
  AdamState w1, b1, w2, b2, w3, b3;

  GeneratorAdam(const GeneratorParams& p, double lr) {
    cfg.lr = lr;
    w1 = AdamState::zeros_like(p.w1);
    b1 = AdamState::zeros_like(p.b1);
    w2 = AdamState::zeros_like(p.w2);
    b2 = AdamState::zeros_like(p.b2);
    w3 = AdamState::zeros_like(p.w3);
    b3 = AdamState::zeros_like(p.b3);
  }

  void step(GeneratorParams& p, const GeneratorGrads& g) {
    adam_step_inplace(p.w1, g.w1, w1, cfg, "w1");
    adam_step_inplace(p.b1, g.b1, b1, cfg, "b1");
    adam_step_inplace(p.w2, g.w2, w2, cfg, "w2");
    adam_step_inplace(p.b2, g.b2, b2, cfg, "b2");
    adam_step_inplace(p.w3, g.w3, w3, cfg, "w3");
    adam_step_inplace(p.b3, g.b3, b3, cfg, "b3");
  }
};

// Modified Gram-Schmidt on rows, two passes.
void orthonormalize_rows(Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < i; ++k) {
        double proj = 0.0;
        for (std::size_t j = 0; j < n; ++j) proj += a(i, j) * a(k, j);
        for (std::size_t j = 0; j < n; ++j) a(i, j) -= proj * a(k, j);
      }
      double nrm = 0.0;
      for (std::size_t j = 0; j < n; ++j) nrm += a(i, j) * a(i, j);
      nrm = std::sqrt(nrm);
      if (nrm < 1e-12) throw NumericError("factor map rows degenerate");
      for (std::size_t j = 0; j < n; ++j) a(i, j) /= nrm;
    }
  }
}

const std::string& require_finite(const LossReport& r, const char* where,
                                  std::size_t iteration) {
  static const std::string ok;
  if (std::isfinite(r.value) && grads_finite(r.grads)) return ok;
  std::string term = "loss";
  for (const auto& [name, value] : r.terms) {
    if (!std::isfinite(value)) {
      term = name;
      break;
    }
  }
  throw NumericError(std::string(where) + ": non-finite " + term +
                     " at iteration " + std::to_string(iteration));
}

void append_report_row(MetricLog& log, std::size_t iteration,
                       const LossReport& r) {
  if (log.columns.empty()) {
    log.columns.push_back("iteration");
    for (const auto& [name, value] : r.terms) log.columns.push_back(name);
  }
  std::vector<double> row;
  row.reserve(log.columns.size());
  row.push_back(static_cast<double>(iteration));
  for (const auto& [name, value] : r.terms) row.push_back(value);
  log.rows.push_back(std::move(row));
}

}  // namespace

std::size_t MetricLog::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::invalid_argument("metric log: no column named " + name);
}

double MetricLog::terminal(const std::string& name, std::size_t window) const {
  if (rows.empty()) throw std::invalid_argument("metric log: empty");
  const std::size_t col = column_index(name);
  const std::size_t take = std::min(window, rows.size());
  double sum = 0.0;
  for (std::size_t i = rows.size() - take; i < rows.size(); ++i) {
    sum += rows[i][col];
  }
  return sum / static_cast<double>(take);
}

PretrainResult pretrain_source(const Architecture& arch,
                               const PretrainConfig& cfg) {
  if (cfg.iterations == 0) {
    throw std::invalid_argument("pretrain: iterations must be > 0");
  }
  Rng init_rng(cfg.seed, kInitStream);
  GeneratorParams params = GeneratorParams::init(arch, init_rng);

  Rng factor_rng(cfg.seed, kFactorStream);
  Tensor factor_map = factor_rng.normal_tensor({4, arch.latent_dim});
  orthonormalize_rows(factor_map);
  const FactorVector offset{1.0, 0.0, 0.0, 0.0};

  Rng batch_rng(cfg.seed, kPretrainBatchStream);
  GeneratorAdam opt(params, cfg.lr);
  MetricLog log;
  log.columns = {"iteration", "loss"};

  const std::size_t max_total = cfg.iterations * 4;
  double terminal = 0.0;
  std::size_t done = 0;
  for (;;) {
    const std::size_t until = std::min(done + cfg.iterations, max_total);
    for (; done < until; ++done) {
      const Tensor zs = batch_rng.normal_tensor({cfg.batch, arch.latent_dim});
      const LossReport r = loss_src(arch, params, zs, factor_map, offset);
      require_finite(r, "pretrain", done);
      opt.step(params, r.grads);
      log.rows.push_back({static_cast<double>(done), r.value});
    }
    Rng probe_rng(cfg.seed, kPretrainProbeStream);
    const Tensor probe = probe_rng.normal_tensor({256, arch.latent_dim});
    terminal = loss_src(arch, params, probe, factor_map, offset).value;
    if (terminal <= cfg.target_loss || done >= max_total) break;
  }
  if (terminal > cfg.target_loss) {
    throw NumericError("pretraining did not converge: terminal loss " +
                       std::to_string(terminal) + " after " +
                       std::to_string(done) + " iterations");
  }

  PretrainResult result;
  result.model = SourceModel{arch,   params, factor_map,
                             offset, cfg.seed, terminal};
  result.log = std::move(log);
  return result;
}

std::size_t ExpandConfig::effective_iterations(std::size_t n_tasks) const {
  if (iterations != 0) return iterations;
  const double scale =
      std::max(1.0, static_cast<double>(n_tasks) / 5.0);
  return static_cast<std::size_t>(std::llround(3000.0 * scale));
}

ExpandResult expand(const SourceModel& source,
                    const std::vector<AdaptationTask>& tasks,
                    const ExpandConfig& cfg) {
  const Architecture& arch = source.arch;
  const std::size_t d = arch.latent_dim;
  const std::size_t n = tasks.size();
  if (cfg.policy != DirectionPolicy::explicit_list && d >= 4 && n > d - 4) {
    throw std::invalid_argument(
        "expand: task count exceeds dormant capacity (D - 4)");
  }

  // Basis and registry are fixed at expansion start and never refreshed.
  const LatentBasis basis = factorize(source.params.w1, Tensor({d}));
  Rng dorm_rng(cfg.seed, kDormancyStream);
  const std::vector<double> scores =
      dormancy_scores(arch, source.params, basis, 256, 3.0, dorm_rng);
  const std::vector<std::size_t> indices =
      select_directions(basis, scores, n, cfg.policy, cfg.explicit_indices);

  SubspaceRegistry registry(cfg.s);
  for (std::size_t k = 0; k < n; ++k) {
    registry.assign(tasks[k].domain_id, indices[k]);
  }

  MetricLog log;
  if (cfg.policy == DirectionPolicy::explicit_list && !scores.empty()) {
    const double top = *std::max_element(scores.begin(), scores.end());
    for (std::size_t k = 0; k < n; ++k) {
      if (scores[indices[k]] > 0.1 * top) {
        log.notes.push_back("warning: direction " +
                            std::to_string(indices[k]) + " for task " +
                            tasks[k].domain_id +
                            " is not dormant; its semantics will be rewritten");
      }
    }
  }

  const FrozenGenerator frozen = clone_frozen(arch, source.params);
  GeneratorParams params = source.params;
  GeneratorAdam opt(params, cfg.lr);
  Rng rng(cfg.seed, kExpandBatchStream);
  const EmbeddingSpace& space = EmbeddingSpace::standard();

  // Fixed probe latents so probe curves are comparable across iterations.
  Rng probe_rng(cfg.seed, kExpandProbeStream);
  const Tensor probe_z = probe_rng.normal_tensor({cfg.probe_n, d});
  MetricLog probes;
  probes.columns.push_back("iteration");
  for (const AdaptationTask& task : tasks) {
    probes.columns.push_back("err_" + task.domain_id);
  }
  auto record_probe = [&](std::size_t iteration) {
    std::vector<double> row = {static_cast<double>(iteration)};
    for (const AdaptationTask& task : tasks) {
      double err = 0.0;
      if (task.anchor_target.size() > 0) {
        for (std::size_t i = 0; i < cfg.probe_n; ++i) {
          const Tensor z = project_repurposed(probe_z.row(i), basis, registry,
                                              task.domain_id);
          err += cosine_error(space.embed(forward(arch, params, z)),
                              task.anchor_target);
        }
        err /= static_cast<double>(cfg.probe_n);
      } else {
        err = loss_fewshot(arch, params, space,
                           project_references(task.references, basis, registry,
                                              task.domain_id))
                  .value;
      }
      row.push_back(err);
    }
    probes.rows.push_back(std::move(row));
  };

  const std::size_t iters = cfg.effective_iterations(n);
  for (std::size_t it = 0; it < iters; ++it) {
    const LossReport r =
        loss_full(arch, params, space, frozen, basis, registry, tasks, rng,
                  cfg.batch, source.factor_map, source.factor_offset,
                  cfg.weights);
    require_finite(r, "expand", it);
    opt.step(params, r.grads);
    append_report_row(log, it, r);
    if (it % cfg.log_interval == 0 || it + 1 == iters) record_probe(it);
  }

  ExpandResult result{std::move(params), basis,  registry, frozen,
                      tasks,             std::move(log), std::move(probes)};
  return result;
}

AdaptResult adapt_dedicated(const SourceModel& source,
                            const AdaptationTask& task,
                            const ExpandConfig& cfg) {
  const Architecture& arch = source.arch;
  const FrozenGenerator frozen = clone_frozen(arch, source.params);
  GeneratorParams params = source.params;
  GeneratorAdam opt(params, cfg.lr);
  Rng rng(cfg.seed, kAdaptBatchStream);
  const EmbeddingSpace& space = EmbeddingSpace::standard();

  // Classic adaptation: the source domain vanishes from the trained model,
  // so the directional source branch is always the frozen copy.
  const SourceProvider source_branch = [&](const Tensor& z) {
    return forward(frozen.arch, frozen.params, z);
  };

  MetricLog log;
  const std::size_t iters = cfg.effective_iterations(1);
  for (std::size_t it = 0; it < iters; ++it) {
    LossReport r;
    if (task.kind == TaskKind::directional) {
      const Tensor zs = rng.normal_tensor({cfg.batch, arch.latent_dim});
      r = loss_directional(arch, params, space, source_branch, zs, task);
    } else {
      r = loss_fewshot(arch, params, space, task.references);
    }
    require_finite(r, "adapt", it);
    opt.step(params, r.grads);
    if (log.columns.empty()) log.columns = {"iteration", "loss"};
    log.rows.push_back({static_cast<double>(it), r.value});
  }
  return AdaptResult{std::move(params), std::move(log)};
}

ContinueResult continue_training(const SourceModel& source,
                                 std::size_t iterations, double lr,
                                 std::size_t batch, std::uint64_t seed,
                                 std::size_t snapshots) {
  const Architecture& arch = source.arch;
  GeneratorParams params = source.params;
  GeneratorAdam opt(params, lr);
  Rng rng(seed, kContinueBatchStream);

  std::vector<std::size_t> points;
  for (std::size_t k = 1; k <= snapshots; ++k) {
    points.push_back(iterations * k / snapshots);
  }

  ContinueResult result;
  result.log.columns = {"iteration", "loss"};
  std::size_t next_point = 0;
  while (next_point < points.size() && points[next_point] == 0) {
    result.snapshots.push_back(params);
    ++next_point;
  }
  for (std::size_t it = 0; it < iterations; ++it) {
    const Tensor zs = rng.normal_tensor({batch, arch.latent_dim});
    const LossReport r =
        loss_src(arch, params, zs, source.factor_map, source.factor_offset);
    require_finite(r, "continue_training", it);
    opt.step(params, r.grads);
    result.log.rows.push_back({static_cast<double>(it), r.value});
    while (next_point < points.size() && points[next_point] == it + 1) {
      result.snapshots.push_back(params);
      ++next_point;
    }
  }
  result.params = std::move(params);
  return result;
}

Tensor ClassConditionalModel::augment(const Tensor& z,
                                      std::size_t class_id) const {
  if (z.size() != base_dim) {
    throw std::invalid_argument("augment: latent length");
  }
  if (class_id >= classes) {
    throw std::invalid_argument("augment: class id out of range");
  }
  Tensor out({base_dim + classes});
  for (std::size_t i = 0; i < base_dim; ++i) out[i] = z[i];
  out[base_dim + class_id] = 1.0;
  return out;
}

ClassConditionalResult train_class_conditional(
    const SourceModel& source, const std::vector<AdaptationTask>& tasks,
    const ExpandConfig& cfg) {
  const std::size_t d = source.arch.latent_dim;
  const std::size_t classes = tasks.size() + 1;

  ClassConditionalModel model;
  model.base_dim = d;
  model.classes = classes;
  model.arch = source.arch;
  model.arch.latent_dim = d + classes;
  // Widen the first layer; new columns start at zero so every class
  // reproduces the source generator bit-for-bit at init.
  model.params = GeneratorParams::zeros(model.arch);
  for (std::size_t i = 0; i < source.arch.hidden; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      model.params.w1(i, j) = source.params.w1(i, j);
    }
  }
  model.params.b1 = source.params.b1;
  model.params.w2 = source.params.w2;
  model.params.b2 = source.params.b2;
  model.params.w3 = source.params.w3;
  model.params.b3 = source.params.b3;

  Tensor factor_map_cc({4, d + classes});
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      factor_map_cc(i, j) = source.factor_map(i, j);
    }
  }

  const FrozenGenerator frozen = clone_frozen(source.arch, source.params);
  GeneratorAdam opt(model.params, cfg.lr);
  Rng rng(cfg.seed, kCcBatchStream);
  const EmbeddingSpace& space = EmbeddingSpace::standard();

  auto augment_batch = [&](const Tensor& zs, std::size_t class_id) {
    Tensor out({zs.rows(), d + classes});
    for (std::size_t b = 0; b < zs.rows(); ++b) {
      out.set_row(b, model.augment(zs.row(b), class_id));
    }
    return out;
  };

  MetricLog log;
  const std::size_t iters = cfg.effective_iterations(tasks.size());
  for (std::size_t it = 0; it < iters; ++it) {
    LossReport total;
    total.grads = zeros_like(model.params);

    // Class 0: source loss plus replay against the frozen source.
    const Tensor zs0 = rng.normal_tensor({cfg.batch, d});
    const Tensor aug0 = augment_batch(zs0, 0);
    const LossReport src = loss_src(model.arch, model.params, aug0,
                                    factor_map_cc, source.factor_offset);
    std::vector<PointCloud> refs;
    refs.reserve(cfg.batch);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      refs.push_back(forward(frozen.arch, frozen.params, zs0.row(b)));
    }
    const LossReport recon = loss_recon_replay(model.arch, model.params, space,
                                               aug0, refs, cfg.weights);
    total.value = cfg.weights.lambda_src * src.value + recon.value;
    accumulate(total.grads, src.grads, cfg.weights.lambda_src);
    accumulate(total.grads, recon.grads);
    total.terms = {{"src", src.value}, {"recon", recon.value}};

    // Class i: the task loss on unprojected latents.
    const SourceProvider source_branch = [&](const Tensor& aug) {
      Tensor z({d});
      for (std::size_t i = 0; i < d; ++i) z[i] = aug[i];
      return forward(frozen.arch, frozen.params, z);
    };
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      const AdaptationTask& task = tasks[k];
      LossReport part;
      if (task.kind == TaskKind::directional) {
        const Tensor zs = rng.normal_tensor({cfg.batch, d});
        const Tensor aug = augment_batch(zs, k + 1);
        part = loss_directional(model.arch, model.params, space, source_branch,
                                aug, task);
      } else {
        std::vector<FewshotReference> aug_refs;
        aug_refs.reserve(task.references.size());
        for (const FewshotReference& ref : task.references) {
          aug_refs.push_back({model.augment(ref.z, k + 1), ref.x});
        }
        part = loss_fewshot(model.arch, model.params, space, aug_refs);
        part.terms = {{"fewshot_" + task.domain_id, part.value}};
      }
      total.value += part.value;
      accumulate(total.grads, part.grads);
      for (const auto& [name, value] : part.terms) {
        total.terms.emplace_back(name, value);
      }
    }

    require_finite(total, "class_conditional", it);
    opt.step(model.params, total.grads);
    append_report_row(log, it, total);
  }

  return ClassConditionalResult{std::move(model), std::move(log)};
}

}  // namespace dexp
