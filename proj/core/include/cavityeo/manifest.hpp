#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cavityeo {

/// Provenance record written next to every produced data file. The
/// `parameters` object mirrors the CLI flags of the command, so a manifest
/// can be replayed by passing it back through --config.
struct RunManifest {
    std::string tool = "cavityeo";
    std::string version;
    std::string command;
    std::string parameters_json;  ///< resolved flags as a JSON object
    std::string engine;
    std::optional<std::uint64_t> seed;
    std::string created_utc;

    struct OutputFile {
        std::string path;
        std::string sha256;
    };
    std::vector<OutputFile> outputs;
};

std::string to_json(const RunManifest& manifest);

std::string sha256_hex(std::string_view data);
std::string sha256_hex_of_file(const std::filesystem::path& path);

std::string utc_timestamp_now();

}  // namespace cavityeo
