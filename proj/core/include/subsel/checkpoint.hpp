#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "subsel/nn.hpp"

namespace subsel {

// Versioned model file: layout descriptor + flat parameter array. Parameter
// values are stored as 64-bit hex bit patterns, so round trips are bit-exact.
struct Checkpoint {
    std::string kind;
    ParamLayout layout;
    Vec params;
    nlohmann::json extra;  // model-specific configuration and payload
};

void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const ParamLayout& layout, const Vec& params,
                     const nlohmann::json& extra = nlohmann::json::object());

Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string double_to_hex(double v);
double hex_to_double(const std::string& s);

}  // namespace subsel
