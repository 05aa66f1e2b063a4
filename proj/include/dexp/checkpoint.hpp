#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "dexp/latent.hpp"
#include "dexp/tasks.hpp"
#include "dexp/trainer.hpp"

namespace dexp {

struct CcInfo {
  std::size_t base_dim = 0;
  std::size_t classes = 0;
};

// Versioned container: header {magic "DEXP", u32 version little-endian}
// followed by a canonical JSON body (sorted keys, round-trip-exact decimal
// floats), so save -> load -> save is byte-identical. Three latent/output
// probe pairs are embedded and re-verified on load.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string kind = "source";  // source|expanded|dedicated|class-conditional
  Architecture arch;
  GeneratorParams params;
  Tensor factor_map;
  FactorVector factor_offset;
  std::uint64_t seed = 0;

  std::optional<LatentBasis> basis;
  std::optional<SubspaceRegistry> registry;
  std::vector<AdaptationTask> tasks;
  std::optional<GeneratorParams> source_params;
  std::optional<CcInfo> cc;

  nlohmann::json config_echo;
  MetricLog metrics_tail;  // last <= 100 rows of the run log
};

nlohmann::json checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Keep at most the trailing 100 rows.
MetricLog tail_of(const MetricLog& log, std::size_t keep = 100);

}  // namespace dexp
