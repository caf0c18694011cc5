#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sroc {

enum class Split { Train, Val };
enum class Health { Healthy, Defective };

struct SampleRecord {
  std::string id;
  Split split = Split::Train;
  Health label = Health::Healthy;
  std::optional<std::string> defect_type;
  std::optional<std::string> mask;  // relative to the manifest's directory

  bool defective() const { return label == Health::Defective; }
  bool operator==(const SampleRecord&) const = default;
};

using Manifest = std::vector<SampleRecord>;

Manifest parse_manifest(const std::string& json_text);
Manifest load_manifest(const std::filesystem::path& path);
std::string dump_manifest(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace sroc
