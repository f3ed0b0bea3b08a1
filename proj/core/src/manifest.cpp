#include "subsel/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace subsel {

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checksum: cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[8192];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[20];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
    nlohmann::json obj;
    obj["command"] = m.command;
    obj["config"] = m.config;
    obj["seed"] = m.seed;
    obj["inputs"] = m.inputs;
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& [path, sum] : m.outputs) outs.push_back({{"path", path}, {"checksum", sum}});
    obj["outputs"] = std::move(outs);
    obj["wall_seconds"] = m.wall_seconds;

    const auto final_path = dir / "run_manifest.json";
    const auto tmp_path = dir / "run_manifest.json.tmp";
    {
        std::ofstream out(tmp_path);
        if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
        out << obj.dump(2) << '\n';
    }
    std::filesystem::rename(tmp_path, final_path);
}

}  // namespace subsel
