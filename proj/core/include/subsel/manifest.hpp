#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace subsel {

// Written atomically next to every command's outputs; enough to re-run it.
struct RunManifest {
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::pair<std::string, std::string>> outputs;  // path, checksum
    double wall_seconds = 0.0;
};

std::string file_checksum(const std::filesystem::path& path);  // fnv1a-64, hex

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

}  // namespace subsel
