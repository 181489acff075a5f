#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace boxseg {

// Single-file container: a JSON header plus named raw double arrays, written
// little-endian. Loading restores every double bit-for-bit.
struct Archive {
    nlohmann::json header;
    std::vector<std::pair<std::string, std::vector<double>>> arrays;

    const std::vector<double>& array(const std::string& name) const;
};

void save_archive(const std::filesystem::path& path, const Archive& archive);
Archive load_archive(const std::filesystem::path& path);

}  // namespace boxseg
