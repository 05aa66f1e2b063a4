#include "dexp/config.hpp"

#include <fstream>
#include <set>

#include "dexp/error.hpp"

namespace dexp {
namespace {

using nlohmann::json;

constexpr std::uint64_t kReferenceFactorStream = 200;

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError("config: " + path + " must be an object");
}

void reject_unknown_keys(const json& j, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("config: unknown key '" + key + "' in " + path);
    }
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError("config: " + path + " must be a number");
  return j.get<double>();
}

std::size_t get_size(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ConfigError("config: " + path + " must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

std::uint64_t get_u64(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ConfigError("config: " + path + " must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError("config: " + path + " must be a string");
  return j.get<std::string>();
}

void parse_architecture(const json& j, Architecture& arch) {
  require_object(j, "architecture");
  reject_unknown_keys(j, "architecture", {"latent_dim", "hidden", "points"});
  if (j.contains("latent_dim")) {
    arch.latent_dim = get_size(j["latent_dim"], "architecture.latent_dim");
  }
  if (j.contains("hidden")) {
    arch.hidden = get_size(j["hidden"], "architecture.hidden");
  }
  if (j.contains("points")) {
    arch.points = get_size(j["points"], "architecture.points");
  }
  if (arch.latent_dim < 5 || arch.hidden < 1 || arch.points < 2) {
    throw ConfigError("config: architecture out of range");
  }
}

void parse_pretrain(const json& j, PretrainConfig& cfg) {
  require_object(j, "pretrain");
  reject_unknown_keys(j, "pretrain",
                      {"iterations", "lr", "batch", "target_loss"});
  if (j.contains("iterations")) {
    cfg.iterations = get_size(j["iterations"], "pretrain.iterations");
  }
  if (j.contains("lr")) cfg.lr = get_number(j["lr"], "pretrain.lr");
  if (j.contains("batch")) cfg.batch = get_size(j["batch"], "pretrain.batch");
  if (j.contains("target_loss")) {
    cfg.target_loss = get_number(j["target_loss"], "pretrain.target_loss");
  }
  if (cfg.iterations == 0 || cfg.batch == 0 || !(cfg.lr > 0.0)) {
    throw ConfigError("config: pretrain out of range");
  }
}

void parse_expand(const json& j, ExpandConfig& cfg) {
  require_object(j, "expand");
  reject_unknown_keys(j, "expand",
                      {"iterations", "lr", "batch", "s", "lambda_lpips",
                       "lambda_l2", "lambda_src", "policy", "explicit_indices",
                       "nada_mode", "log_interval", "probe_n"});
  if (j.contains("iterations")) {
    cfg.iterations = get_size(j["iterations"], "expand.iterations");
  }
  if (j.contains("lr")) cfg.lr = get_number(j["lr"], "expand.lr");
  if (j.contains("batch")) cfg.batch = get_size(j["batch"], "expand.batch");
  if (j.contains("s")) cfg.s = get_number(j["s"], "expand.s");
  if (j.contains("lambda_lpips")) {
    cfg.weights.lambda_lpips =
        get_number(j["lambda_lpips"], "expand.lambda_lpips");
  }
  if (j.contains("lambda_l2")) {
    cfg.weights.lambda_l2 = get_number(j["lambda_l2"], "expand.lambda_l2");
  }
  if (j.contains("lambda_src")) {
    cfg.weights.lambda_src = get_number(j["lambda_src"], "expand.lambda_src");
  }
  if (j.contains("policy")) {
    cfg.policy = parse_direction_policy(get_string(j["policy"], "expand.policy"));
  }
  if (j.contains("explicit_indices")) {
    if (!j["explicit_indices"].is_array()) {
      throw ConfigError("config: expand.explicit_indices must be an array");
    }
    cfg.explicit_indices.clear();
    for (const json& v : j["explicit_indices"]) {
      cfg.explicit_indices.push_back(get_size(v, "expand.explicit_indices[]"));
    }
  }
  if (j.contains("nada_mode")) {
    cfg.nada_mode =
        parse_source_branch_mode(get_string(j["nada_mode"], "expand.nada_mode"));
  }
  if (j.contains("log_interval")) {
    cfg.log_interval = get_size(j["log_interval"], "expand.log_interval");
  }
  if (j.contains("probe_n")) {
    cfg.probe_n = get_size(j["probe_n"], "expand.probe_n");
  }
  if (!(cfg.s > 0.0) || cfg.weights.lambda_lpips < 0.0 ||
      cfg.weights.lambda_l2 < 0.0 || cfg.weights.lambda_src < 0.0 ||
      cfg.batch == 0 || cfg.log_interval == 0 || cfg.probe_n == 0) {
    throw ConfigError("config: expand out of range");
  }
}

void parse_eval(const json& j, EvalSettings& cfg) {
  require_object(j, "eval");
  reject_unknown_keys(j, "eval",
                      {"probe_n", "bandwidth", "band_checkpoints", "anchor_n",
                       "anchor_seed"});
  if (j.contains("probe_n")) cfg.probe_n = get_size(j["probe_n"], "eval.probe_n");
  if (j.contains("bandwidth")) {
    cfg.bandwidth = get_number(j["bandwidth"], "eval.bandwidth");
  }
  if (j.contains("band_checkpoints")) {
    cfg.band_checkpoints =
        get_size(j["band_checkpoints"], "eval.band_checkpoints");
  }
  if (j.contains("anchor_n")) {
    cfg.anchor_n = get_size(j["anchor_n"], "eval.anchor_n");
  }
  if (j.contains("anchor_seed")) {
    cfg.anchor_seed = get_u64(j["anchor_seed"], "eval.anchor_seed");
  }
  if (cfg.probe_n == 0 || !(cfg.bandwidth > 0.0) || cfg.band_checkpoints == 0 ||
      cfg.anchor_n < 16) {
    throw ConfigError("config: eval out of range");
  }
}

TaskConfig parse_task(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown_keys(j, path,
                      {"domain_id", "kind", "target_kind", "mode",
                       "references", "reference_seed"});
  TaskConfig t;
  if (!j.contains("domain_id")) {
    throw ConfigError("config: " + path + " needs domain_id");
  }
  t.domain_id = get_string(j["domain_id"], path + ".domain_id");
  const std::string kind =
      j.contains("kind") ? get_string(j["kind"], path + ".kind") : "directional";
  if (kind == "directional") {
    t.kind = TaskKind::directional;
  } else if (kind == "fewshot") {
    t.kind = TaskKind::fewshot;
  } else {
    throw ConfigError("config: " + path + ".kind must be directional|fewshot");
  }
  if (!j.contains("target_kind")) {
    throw ConfigError("config: " + path + " needs target_kind");
  }
  t.target_kind =
      parse_domain_kind(get_string(j["target_kind"], path + ".target_kind"));
  if (j.contains("mode")) {
    t.mode = parse_source_branch_mode(get_string(j["mode"], path + ".mode"));
  }
  if (j.contains("references")) {
    t.references = get_size(j["references"], path + ".references");
    if (t.references == 0) {
      throw ConfigError("config: " + path + ".references must be >= 1");
    }
  }
  if (j.contains("reference_seed")) {
    t.reference_seed = get_u64(j["reference_seed"], path + ".reference_seed");
  }
  return t;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  require_object(j, "(root)");
  reject_unknown_keys(j, "(root)",
                      {"architecture", "pretrain", "tasks", "expand", "eval",
                       "output_dir", "seed"});
  ExperimentConfig cfg;
  if (j.contains("architecture")) parse_architecture(j["architecture"], cfg.arch);
  if (j.contains("pretrain")) parse_pretrain(j["pretrain"], cfg.pretrain);
  if (j.contains("expand")) parse_expand(j["expand"], cfg.expand);
  if (j.contains("eval")) parse_eval(j["eval"], cfg.eval);
  if (j.contains("output_dir")) {
    cfg.output_dir = get_string(j["output_dir"], "output_dir");
  }
  if (j.contains("seed")) cfg.seed = get_u64(j["seed"], "seed");
  cfg.pretrain.seed = cfg.seed;
  cfg.expand.seed = cfg.seed;
  if (j.contains("tasks")) {
    if (!j["tasks"].is_array()) {
      throw ConfigError("config: tasks must be an array");
    }
    std::set<std::string> seen;
    std::size_t i = 0;
    for (const json& jt : j["tasks"]) {
      TaskConfig t = parse_task(jt, "tasks[" + std::to_string(i) + "]");
      if (!seen.insert(t.domain_id).second) {
        throw ConfigError("config: duplicate task domain_id " + t.domain_id);
      }
      cfg.tasks.push_back(std::move(t));
      ++i;
    }
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    // nlohmann reports byte offsets; surface them as the diagnostic.
    throw ConfigError("config: invalid JSON in " + path.string() + ": " +
                      e.what());
  }
  return parse_experiment_config(j);
}

AdaptationTask build_task(const TaskConfig& task, const EvalSettings& eval,
                          const SourceModel& source) {
  const EmbeddingSpace& space = EmbeddingSpace::standard();
  AdaptationTask out;
  out.domain_id = task.domain_id;
  out.kind = task.kind;
  out.target_kind = task.target_kind;
  out.mode = task.mode;
  out.anchor_source = make_anchor(space, DomainKind::ellipse, eval.anchor_n,
                                  eval.anchor_seed, source.arch.points)
                          .value;
  out.anchor_target = make_anchor(space, task.target_kind, eval.anchor_n,
                                  eval.anchor_seed, source.arch.points)
                          .value;
  if (task.kind == TaskKind::fewshot) {
    Rng rng(task.reference_seed, kReferenceFactorStream);
    for (std::size_t m = 0; m < task.references; ++m) {
      const FactorVector f = sample_factor_prior(rng);
      FewshotReference ref;
      ref.x = render(task.target_kind, f, source.arch.points);
      ref.z = invert(source.arch, source.params, ref.x);
      out.references.push_back(std::move(ref));
    }
  }
  return out;
}

std::vector<AdaptationTask> build_tasks(const ExperimentConfig& cfg,
                                        const SourceModel& source) {
  std::vector<AdaptationTask> tasks;
  tasks.reserve(cfg.tasks.size());
  for (const TaskConfig& t : cfg.tasks) {
    AdaptationTask task = build_task(t, cfg.eval, source);
    task.mode = cfg.expand.nada_mode == SourceBranchMode::frozen_copy
                    ? SourceBranchMode::frozen_copy
                    : task.mode;
    tasks.push_back(std::move(task));
  }
  return tasks;
}

}  // namespace dexp
