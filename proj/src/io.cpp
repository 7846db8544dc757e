#include "singhopf/io.hpp"

#include "singhopf/errors.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

namespace singhopf {

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string config_hash(const nlohmann::json& config)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string toolkit_version()
{
    return SINGHOPF_VERSION;
}

nlohmann::json provenance(const nlohmann::json& config, const nlohmann::json& tolerances)
{
    return {{"config_hash", config_hash(config)},
            {"toolkit_version", toolkit_version()},
            {"tolerances", tolerances},
            {"config", config}};
}

namespace {

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    return out;
}

} // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows, const nlohmann::json& prov)
{
    std::ofstream out = open_out(path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
    write_json(path.string() + ".meta.json", prov);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

} // namespace singhopf
