#pragma once

#include "repden/expfam.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace repden::cli {

struct Provenance
{
  std::vector<std::string> excluded; // ids dropped by the minimum-size rule
  std::uint64_t seed = 0;
  std::string timestamp;             // UTC, ISO 8601
};

struct ModelFile
{
  static constexpr int kFormatVersion = 1;

  FamilyModel model;
  bool log_scale = false;
  double delta = 0.5;
  bool generalized_lower = false;
  Provenance provenance;
};

nlohmann::json model_to_json(const ModelFile& mf);
//! Throws IoError on a missing field, a shape mismatch or another format version.
ModelFile model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const ModelFile& mf);
ModelFile load_model(const std::filesystem::path& path);

std::string utc_timestamp();

} // namespace repden::cli
