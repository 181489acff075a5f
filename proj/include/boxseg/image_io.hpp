#pragma once

#include "boxseg/grid.hpp"
#include "boxseg/nn.hpp"

#include <filesystem>

namespace boxseg {

// Binary PPM (P6) for RGB images and PGM (P5) for single-channel masks,
// 8-bit. Tensor/grid values are intensities in [0,1]; files round-trip the
// 8-bit content losslessly.

void write_ppm(const std::filesystem::path& path, const nn::Tensor3& image);
nn::Tensor3 read_ppm(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const Grid& mask);
Grid read_pgm(const std::filesystem::path& path);

}  // namespace boxseg
