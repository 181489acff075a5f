#include "boxseg/image_io.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace boxseg {

namespace {

uint8_t to_byte(double v) {
    double x = v * 255.0;
    if (x < 0.0) x = 0.0;
    if (x > 255.0) x = 255.0;
    return static_cast<uint8_t>(std::lround(x));
}

// Reads the PNM header: magic, whitespace/comment-separated width, height,
// maxval, then exactly one whitespace byte before the raster.
struct PnmHeader {
    std::string magic;
    int width = 0, height = 0, maxval = 0;
};

int next_pnm_int(std::istream& in) {
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (c != EOF && c != '\n') c = in.get();
        c = in.get();
    }
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw std::runtime_error("read_pnm: malformed header");
    return value;
}

PnmHeader read_header(std::istream& in, const char* expected_magic) {
    PnmHeader h;
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    h.magic = std::string{m0, m1};
    if (h.magic != expected_magic)
        throw std::runtime_error(std::string("read_pnm: expected ") + expected_magic + " got " +
                                 h.magic);
    h.width = next_pnm_int(in);
    h.height = next_pnm_int(in);
    h.maxval = next_pnm_int(in);
    if (h.width < 1 || h.height < 1 || h.maxval != 255)
        throw std::runtime_error("read_pnm: unsupported geometry or maxval");
    return h;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const nn::Tensor3& image) {
    if (image.channels != 3) throw DimensionError("write_ppm: expected 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_ppm: cannot open " + path.string());
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(image.width) * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) row[x * 3 + c] = to_byte(image.at(c, y, x));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write_ppm: write failed for " + path.string());
}

nn::Tensor3 read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_ppm: cannot open " + path.string());
    const PnmHeader h = read_header(in, "P6");
    nn::Tensor3 img(3, h.height, h.width);
    std::vector<uint8_t> row(static_cast<size_t>(h.width) * 3);
    for (int y = 0; y < h.height; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw std::runtime_error("read_ppm: truncated raster in " + path.string());
        for (int x = 0; x < h.width; ++x)
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = row[x * 3 + c] / 255.0;
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const Grid& mask) {
    require_nonempty(mask, "write_pgm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
    out << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(mask.width()));
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) row[x] = to_byte(mask(y, x));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write_pgm: write failed for " + path.string());
}

Grid read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pgm: cannot open " + path.string());
    const PnmHeader h = read_header(in, "P5");
    Grid g(h.height, h.width);
    std::vector<uint8_t> row(static_cast<size_t>(h.width));
    for (int y = 0; y < h.height; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw std::runtime_error("read_pgm: truncated raster in " + path.string());
        for (int x = 0; x < h.width; ++x) g(y, x) = row[x] / 255.0;
    }
    return g;
}

}  // namespace boxseg
