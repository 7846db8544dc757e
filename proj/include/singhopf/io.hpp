#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace singhopf {

/// 17 significant digits, '.' decimal point: round-trips every double.
std::string format_double(double v);

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

std::string toolkit_version();

/// Provenance block: config hash, toolkit version, tolerances, and the config itself.
nlohmann::json provenance(const nlohmann::json& config, const nlohmann::json& tolerances);

/// Writes the CSV and a sidecar `<path>.meta.json` holding `prov`.
/// Parent directories are created.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows, const nlohmann::json& prov);

/// Pretty-printed JSON with a trailing newline; parent directories are created.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

} // namespace singhopf
