#include "sroc/json.hpp"

#include "sroc/error.hpp"

namespace sroc {

using nlohmann::json;

namespace {

std::optional<std::size_t> optional_size(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer() || it->get<long long>() <= 0) {
    throw ConfigError(std::string("detector config '") + key + "' must be a positive integer or null");
  }
  return it->get<std::size_t>();
}

}  // namespace

void to_json(json& j, const DetectorConfig& config) {
  j = json{{"kind", std::string(to_string(config.kind))},
           {"k", config.k},
           {"nlist", config.nlist ? json(*config.nlist) : json(nullptr)},
           {"nprobe", config.nprobe ? json(*config.nprobe) : json(nullptr)},
           {"seed", config.seed}};
}

void from_json(const json& j, DetectorConfig& config) {
  if (!j.is_object()) throw ConfigError("detector config must be a JSON object");
  auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) throw ConfigError("detector config needs a string 'kind'");
  config.kind = parse_detector_kind(kind->get<std::string>());
  config.k = optional_size(j, "k").value_or(5);
  config.nlist = optional_size(j, "nlist");
  config.nprobe = optional_size(j, "nprobe");
  if (auto seed = j.find("seed"); seed != j.end() && !seed->is_null()) {
    if (!seed->is_number_integer()) throw ConfigError("detector config 'seed' must be an integer");
    config.seed = seed->get<std::uint64_t>();
  }
}

void to_json(json& j, const Prf& prf) {
  j = json{{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}, {"empty_removal", prf.empty_removal}};
}

void to_json(json& j, const RefinementOutcome& outcome) {
  json scores = json::object();
  for (const auto& [id, score] : outcome.scores) scores[id] = score;
  j = json{{"kept", outcome.kept_ids},
           {"removed", outcome.removed_ids},
           {"scores", std::move(scores)},
           {"prf", outcome.prf ? json(*outcome.prf) : json(nullptr)},
           {"boundary_tie", outcome.boundary_tie}};
}

}  // namespace sroc
