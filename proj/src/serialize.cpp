#include "boxseg/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace boxseg {

namespace {
constexpr char kMagic[8] = {'B', 'S', 'E', 'G', 'A', 'R', 'C', '1'};
}

const std::vector<double>& Archive::array(const std::string& name) const {
    for (const auto& [n, v] : arrays)
        if (n == name) return v;
    throw std::runtime_error("Archive: missing array " + name);
}

void save_archive(const std::filesystem::path& path, const Archive& archive) {
    nlohmann::json header = archive.header;
    auto& index = header["arrays"] = nlohmann::json::array();
    for (const auto& [name, values] : archive.arrays)
        index.push_back({{"name", name}, {"count", values.size()}});

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_archive: cannot open " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const std::string hdr = header.dump();
    const uint64_t hdr_size = hdr.size();
    out.write(reinterpret_cast<const char*>(&hdr_size), sizeof(hdr_size));
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    for (const auto& [name, values] : archive.arrays)
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_archive: write failed for " + path.string());
}

Archive load_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_archive: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_archive: bad magic in " + path.string());
    uint64_t hdr_size = 0;
    in.read(reinterpret_cast<char*>(&hdr_size), sizeof(hdr_size));
    std::string hdr(hdr_size, '\0');
    in.read(hdr.data(), static_cast<std::streamsize>(hdr_size));
    if (!in) throw std::runtime_error("load_archive: truncated header in " + path.string());

    Archive archive;
    archive.header = nlohmann::json::parse(hdr);
    for (const auto& entry : archive.header.at("arrays")) {
        const std::string name = entry.at("name").get<std::string>();
        const size_t count = entry.at("count").get<size_t>();
        std::vector<double> values(count);
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (!in) throw std::runtime_error("load_archive: truncated array " + name);
        archive.arrays.emplace_back(name, std::move(values));
    }
    archive.header.erase("arrays");
    return archive;
}

}  // namespace boxseg
