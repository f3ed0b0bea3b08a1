#include "subsel/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace subsel {

std::string double_to_hex(double v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
    return buf;
}

double hex_to_double(const std::string& s) {
    if (s.size() != 16) throw std::runtime_error("checkpoint: bad hex double \"" + s + "\"");
    std::uint64_t bits = 0;
    for (char c : s) {
        bits <<= 4;
        if (c >= '0' && c <= '9') bits |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') bits |= static_cast<std::uint64_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') bits |= static_cast<std::uint64_t>(c - 'A' + 10);
        else throw std::runtime_error("checkpoint: bad hex double \"" + s + "\"");
    }
    return std::bit_cast<double>(bits);
}

void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const ParamLayout& layout, const Vec& params, const nlohmann::json& extra) {
    if (params.size() != layout.total())
        throw std::invalid_argument("save_checkpoint: params do not match layout");
    nlohmann::json obj;
    obj["format"] = "subsel-checkpoint";
    obj["version"] = 1;
    obj["kind"] = kind;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : layout.entries()) entries.push_back({e.name, e.rows, e.cols});
    obj["entries"] = std::move(entries);
    nlohmann::json values = nlohmann::json::array();
    for (double v : params) values.push_back(double_to_hex(v));
    obj["params"] = std::move(values);
    obj["extra"] = extra;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    out << obj.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    nlohmann::json obj = nlohmann::json::parse(in, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() ||
        obj.value("format", "") != "subsel-checkpoint" || obj.value("version", 0) != 1)
        throw std::runtime_error("not a subsel checkpoint: " + path.string());
    Checkpoint ck;
    ck.kind = obj.at("kind").get<std::string>();
    for (const auto& e : obj.at("entries"))
        ck.layout.add(e.at(0).get<std::string>(), e.at(1).get<std::size_t>(),
                      e.at(2).get<std::size_t>());
    ck.params.reserve(obj.at("params").size());
    for (const auto& v : obj.at("params")) ck.params.push_back(hex_to_double(v.get<std::string>()));
    if (ck.params.size() != ck.layout.total())
        throw std::runtime_error("checkpoint: parameter count does not match layout");
    ck.extra = obj.value("extra", nlohmann::json::object());
    return ck;
}

}  // namespace subsel
