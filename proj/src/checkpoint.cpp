#include "dexp/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "dexp/error.hpp"

namespace dexp {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'D', 'E', 'X', 'P'};
constexpr std::uint64_t kProbeStream = 40;
constexpr std::size_t kProbeCount = 3;

json tensor_to_json(const Tensor& t) {
  if (!all_finite(t)) {
    throw NumericError("checkpoint: refusing to store non-finite tensor");
  }
  json j;
  j["shape"] = t.shape();
  j["data"] = t.data();
  return j;
}

Tensor tensor_from_json(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    throw IoError(std::string("malformed checkpoint tensor: ") + what);
  }
  try {
    std::vector<std::size_t> shape =
        j.at("shape").get<std::vector<std::size_t>>();
    std::vector<double> data = j.at("data").get<std::vector<double>>();
    return Tensor(std::move(shape), std::move(data));
  } catch (const std::exception& e) {
    throw IoError(std::string("malformed checkpoint tensor ") + what + ": " +
                  e.what());
  }
}

json params_to_json(const GeneratorParams& p) {
  json j;
  j["w1"] = tensor_to_json(p.w1);
  j["b1"] = tensor_to_json(p.b1);
  j["w2"] = tensor_to_json(p.w2);
  j["b2"] = tensor_to_json(p.b2);
  j["w3"] = tensor_to_json(p.w3);
  j["b3"] = tensor_to_json(p.b3);
  return j;
}

GeneratorParams params_from_json(const json& j) {
  GeneratorParams p;
  p.w1 = tensor_from_json(j.at("w1"), "w1");
  p.b1 = tensor_from_json(j.at("b1"), "b1");
  p.w2 = tensor_from_json(j.at("w2"), "w2");
  p.b2 = tensor_from_json(j.at("b2"), "b2");
  p.w3 = tensor_from_json(j.at("w3"), "w3");
  p.b3 = tensor_from_json(j.at("b3"), "b3");
  return p;
}

json task_to_json(const AdaptationTask& t) {
  json j;
  j["domain_id"] = t.domain_id;
  j["kind"] = to_string(t.kind);
  j["target_kind"] = to_string(t.target_kind);
  j["mode"] = to_string(t.mode);
  j["anchor_source"] = t.anchor_source.data();
  j["anchor_target"] = t.anchor_target.data();
  json refs = json::array();
  for (const FewshotReference& r : t.references) {
    json jr;
    jr["z"] = tensor_to_json(r.z);
    jr["x"] = tensor_to_json(r.x.points);
    refs.push_back(std::move(jr));
  }
  j["references"] = std::move(refs);
  return j;
}

AdaptationTask task_from_json(const json& j) {
  AdaptationTask t;
  t.domain_id = j.at("domain_id").get<std::string>();
  t.kind = j.at("kind").get<std::string>() == "fewshot" ? TaskKind::fewshot
                                                        : TaskKind::directional;
  t.target_kind = parse_domain_kind(j.at("target_kind").get<std::string>());
  t.mode = parse_source_branch_mode(j.at("mode").get<std::string>());
  t.anchor_source =
      Tensor::from_vector(j.at("anchor_source").get<std::vector<double>>());
  t.anchor_target =
      Tensor::from_vector(j.at("anchor_target").get<std::vector<double>>());
  for (const json& jr : j.at("references")) {
    FewshotReference r;
    r.z = tensor_from_json(jr.at("z"), "reference z");
    r.x = PointCloud(tensor_from_json(jr.at("x"), "reference x"));
    t.references.push_back(std::move(r));
  }
  return t;
}

json probes_json(const Checkpoint& ck) {
  Rng rng(ck.seed, kProbeStream);
  json probes = json::array();
  for (std::size_t i = 0; i < kProbeCount; ++i) {
    const Tensor z = rng.normal_tensor({ck.arch.latent_dim});
    const PointCloud out = forward(ck.arch, ck.params, z);
    json p;
    p["z"] = z.data();
    p["out"] = out.points.data();
    probes.push_back(std::move(p));
  }
  return probes;
}

void verify_probes(const Checkpoint& ck, const json& probes) {
  for (const json& p : probes) {
    const Tensor z =
        Tensor::from_vector(p.at("z").get<std::vector<double>>());
    const std::vector<double> want = p.at("out").get<std::vector<double>>();
    const PointCloud out = forward(ck.arch, ck.params, z);
    if (want.size() != out.points.size()) {
      throw IoError("checkpoint probe mismatch: output length");
    }
    for (std::size_t i = 0; i < want.size(); ++i) {
      if (want[i] != out.points[i]) {
        throw IoError("checkpoint probe mismatch: stored outputs diverge");
      }
    }
  }
}

}  // namespace

MetricLog tail_of(const MetricLog& log, std::size_t keep) {
  MetricLog out;
  out.columns = log.columns;
  out.notes = log.notes;
  const std::size_t start = log.rows.size() > keep ? log.rows.size() - keep : 0;
  out.rows.assign(log.rows.begin() + static_cast<std::ptrdiff_t>(start),
                  log.rows.end());
  return out;
}

json checkpoint_to_json(const Checkpoint& ck) {
  json j;
  j["version"] = Checkpoint::kVersion;
  j["kind"] = ck.kind;
  j["architecture"] = {{"latent_dim", ck.arch.latent_dim},
                       {"hidden", ck.arch.hidden},
                       {"points", ck.arch.points}};
  j["params"] = params_to_json(ck.params);
  j["factor_map"] = tensor_to_json(ck.factor_map);
  j["factor_offset"] = {ck.factor_offset.r, ck.factor_offset.cx,
                        ck.factor_offset.cy, ck.factor_offset.ecc};
  j["seed"] = ck.seed;

  if (ck.basis) {
    j["basis"] = {{"v", tensor_to_json(ck.basis->v)},
                  {"s", tensor_to_json(ck.basis->s)},
                  {"mean", tensor_to_json(ck.basis->mean)}};
  } else {
    j["basis"] = nullptr;
  }
  if (ck.registry) {
    json assignments = json::array();
    for (const auto& [domain_id, index] : ck.registry->assignments()) {
      assignments.push_back({{"domain_id", domain_id}, {"index", index}});
    }
    j["registry"] = {{"s", ck.registry->shift()},
                     {"assignments", std::move(assignments)}};
  } else {
    j["registry"] = nullptr;
  }
  json tasks = json::array();
  for (const AdaptationTask& t : ck.tasks) tasks.push_back(task_to_json(t));
  j["tasks"] = std::move(tasks);
  j["source_params"] =
      ck.source_params ? params_to_json(*ck.source_params) : json(nullptr);
  j["cc"] = ck.cc ? json{{"base_dim", ck.cc->base_dim},
                         {"classes", ck.cc->classes}}
                  : json(nullptr);
  j["config_echo"] = ck.config_echo;
  j["metrics_tail"] = {{"columns", ck.metrics_tail.columns},
                       {"rows", ck.metrics_tail.rows},
                       {"notes", ck.metrics_tail.notes}};
  j["probes"] = probes_json(ck);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    Checkpoint ck;
    if (j.at("version").get<std::uint32_t>() != Checkpoint::kVersion) {
      throw IoError("unsupported checkpoint version");
    }
    ck.kind = j.at("kind").get<std::string>();
    const json& arch = j.at("architecture");
    ck.arch.latent_dim = arch.at("latent_dim").get<std::size_t>();
    ck.arch.hidden = arch.at("hidden").get<std::size_t>();
    ck.arch.points = arch.at("points").get<std::size_t>();
    ck.params = params_from_json(j.at("params"));
    ck.factor_map = tensor_from_json(j.at("factor_map"), "factor_map");
    const auto off = j.at("factor_offset").get<std::vector<double>>();
    if (off.size() != 4) throw IoError("malformed factor offset");
    ck.factor_offset = {off[0], off[1], off[2], off[3]};
    ck.seed = j.at("seed").get<std::uint64_t>();

    if (!j.at("basis").is_null()) {
      LatentBasis basis;
      basis.v = tensor_from_json(j.at("basis").at("v"), "basis v");
      basis.s = tensor_from_json(j.at("basis").at("s"), "basis s");
      basis.mean = tensor_from_json(j.at("basis").at("mean"), "basis mean");
      ck.basis = std::move(basis);
    }
    if (!j.at("registry").is_null()) {
      SubspaceRegistry registry(j.at("registry").at("s").get<double>());
      for (const json& a : j.at("registry").at("assignments")) {
        registry.assign(a.at("domain_id").get<std::string>(),
                        a.at("index").get<std::size_t>());
      }
      ck.registry = std::move(registry);
    }
    for (const json& jt : j.at("tasks")) {
      ck.tasks.push_back(task_from_json(jt));
    }
    if (!j.at("source_params").is_null()) {
      ck.source_params = params_from_json(j.at("source_params"));
    }
    if (!j.at("cc").is_null()) {
      ck.cc = CcInfo{j.at("cc").at("base_dim").get<std::size_t>(),
                     j.at("cc").at("classes").get<std::size_t>()};
    }
    ck.config_echo = j.at("config_echo");
    const json& tail = j.at("metrics_tail");
    ck.metrics_tail.columns = tail.at("columns").get<std::vector<std::string>>();
    ck.metrics_tail.rows =
        tail.at("rows").get<std::vector<std::vector<double>>>();
    ck.metrics_tail.notes = tail.at("notes").get<std::vector<std::string>>();

    verify_probes(ck, j.at("probes"));
    return ck;
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string body = checkpoint_to_json(ck).dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(kMagic, 4);
  const std::uint32_t version = Checkpoint::kVersion;
  char vbuf[4];
  vbuf[0] = static_cast<char>(version & 0xff);
  vbuf[1] = static_cast<char>((version >> 8) & 0xff);
  vbuf[2] = static_cast<char>((version >> 16) & 0xff);
  vbuf[3] = static_cast<char>((version >> 24) & 0xff);
  f.write(vbuf, 4);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (f.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a DEXP checkpoint: " + path.string());
  }
  char vbuf[4];
  f.read(vbuf, 4);
  if (f.gcount() != 4) throw IoError("truncated checkpoint header");
  const std::uint32_t version =
      static_cast<std::uint32_t>(static_cast<unsigned char>(vbuf[0])) |
      (static_cast<std::uint32_t>(static_cast<unsigned char>(vbuf[1])) << 8) |
      (static_cast<std::uint32_t>(static_cast<unsigned char>(vbuf[2])) << 16) |
      (static_cast<std::uint32_t>(static_cast<unsigned char>(vbuf[3])) << 24);
  if (version != Checkpoint::kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  std::string body((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) {
    throw IoError("malformed checkpoint body: " + path.string());
  }
  return checkpoint_from_json(j);
}

}  // namespace dexp
