#include "sroc/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "sroc/error.hpp"

namespace sroc {

using nlohmann::json;

namespace {

std::optional<std::string> optional_string(const json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw DataError(std::string("manifest field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

}  // namespace

Manifest parse_manifest(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_array()) throw DataError("manifest must be a JSON array");

  Manifest out;
  out.reserve(doc.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& row = doc[i];
    const std::string where = "manifest row " + std::to_string(i);
    if (!row.is_object()) throw DataError(where + " is not an object");
    SampleRecord rec;
    auto id = optional_string(row, "id");
    if (!id || id->empty()) throw DataError(where + " has no id");
    rec.id = *id;
    if (!seen.insert(rec.id).second) throw DataError("duplicate sample id '" + rec.id + "'");

    const auto split = optional_string(row, "split");
    if (split == "train") {
      rec.split = Split::Train;
    } else if (split == "val") {
      rec.split = Split::Val;
    } else {
      throw DataError(where + ": split must be \"train\" or \"val\"");
    }
    const auto label = optional_string(row, "label");
    if (label == "healthy") {
      rec.label = Health::Healthy;
    } else if (label == "defective") {
      rec.label = Health::Defective;
    } else {
      throw DataError(where + ": label must be \"healthy\" or \"defective\"");
    }
    rec.defect_type = optional_string(row, "defect_type");
    rec.mask = optional_string(row, "mask");
    out.push_back(std::move(rec));
  }
  return out;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str());
}

std::string dump_manifest(const Manifest& manifest) {
  json doc = json::array();
  for (const auto& rec : manifest) {
    doc.push_back({{"id", rec.id},
                   {"split", rec.split == Split::Train ? "train" : "val"},
                   {"label", rec.defective() ? "defective" : "healthy"},
                   {"defect_type", rec.defect_type ? json(*rec.defect_type) : json(nullptr)},
                   {"mask", rec.mask ? json(*rec.mask) : json(nullptr)}});
  }
  return doc.dump(2);
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << dump_manifest(manifest) << '\n';
}

}  // namespace sroc
