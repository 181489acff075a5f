#include "boxseg/data.hpp"

#include "boxseg/image_io.hpp"
#include "boxseg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>

namespace boxseg {

void SynthConfig::validate() const {
    if (count < 1) throw std::invalid_argument("SynthConfig: count must be >= 1");
    if (image_size < 32 || image_size % 32 != 0)
        throw std::invalid_argument("SynthConfig: image_size must be a positive multiple of 32");
    if (blob_count_range.first < 1 || blob_count_range.second < blob_count_range.first)
        throw std::invalid_argument("SynthConfig: empty blob_count_range");
    if (blob_scale_range.first <= 0.0 || blob_scale_range.second < blob_scale_range.first ||
        blob_scale_range.second > 1.0)
        throw std::invalid_argument("SynthConfig: blob_scale_range must be within (0,1]");
    if (texture_noise < 0.0 || contrast < 0.0)
        throw std::invalid_argument("SynthConfig: noise/contrast must be nonnegative");
}

std::vector<Box> mask_to_boxes(const Grid& mask) {
    require_nonempty(mask, "mask_to_boxes");
    const int h = mask.height(), w = mask.width();
    std::vector<uint8_t> seen(static_cast<size_t>(h) * w, 0);
    std::vector<Box> boxes;
    std::deque<std::pair<int, int>> frontier;

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const size_t idx = static_cast<size_t>(r) * w + c;
            if (seen[idx] || mask(r, c) == 0.0) continue;
            Box box{r, c, r, c};
            seen[idx] = 1;
            frontier.push_back({r, c});
            while (!frontier.empty()) {
                auto [y, x] = frontier.front();
                frontier.pop_front();
                box.row_min = std::min(box.row_min, y);
                box.row_max = std::max(box.row_max, y);
                box.col_min = std::min(box.col_min, x);
                box.col_max = std::max(box.col_max, x);
                constexpr int dy[4] = {-1, 1, 0, 0};
                constexpr int dx[4] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int ny = y + dy[k], nx = x + dx[k];
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    const size_t nidx = static_cast<size_t>(ny) * w + nx;
                    if (seen[nidx] || mask(ny, nx) == 0.0) continue;
                    seen[nidx] = 1;
                    frontier.push_back({ny, nx});
                }
            }
            boxes.push_back(box);
        }
    }
    std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) {
        return a.row_min != b.row_min ? a.row_min < b.row_min : a.col_min < b.col_min;
    });
    return boxes;
}

namespace {

// Smooth closed radial perturbation: a detrended random walk over angular
// bins, circularly averaged.
std::vector<double> closed_radial_walk(Rng& rng, int bins, double sigma) {
    std::vector<double> walk(bins + 1, 0.0);
    for (int k = 1; k <= bins; ++k) walk[k] = walk[k - 1] + rng.normal() * sigma;
    for (int k = 0; k <= bins; ++k) walk[k] -= walk[bins] * (static_cast<double>(k) / bins);
    walk.pop_back();
    double mean = 0.0;
    for (double v : walk) mean += v;
    mean /= bins;
    for (double& v : walk) v -= mean;
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> sm(walk.size());
        for (int k = 0; k < bins; ++k) {
            const int p = (k + bins - 1) % bins, n = (k + 1) % bins;
            sm[k] = (walk[p] + walk[k] + walk[n]) / 3.0;
        }
        walk.swap(sm);
    }
    return walk;
}

struct Blob {
    double cy, cx, a, b, theta;
    std::vector<double> walk;  // multiplicative radial wiggle per angle bin
    double wiggle_amp;
};

void rasterize_blob(const Blob& blob, Grid& mask) {
    const int h = mask.height(), w = mask.width();
    const int bins = static_cast<int>(blob.walk.size());
    const double reach = std::max(blob.a, blob.b) * (1.0 + blob.wiggle_amp * 2.0) + 2.0;
    const int r0 = std::max(0, static_cast<int>(std::floor(blob.cy - reach)));
    const int r1 = std::min(h - 1, static_cast<int>(std::ceil(blob.cy + reach)));
    const int c0 = std::max(0, static_cast<int>(std::floor(blob.cx - reach)));
    const int c1 = std::min(w - 1, static_cast<int>(std::ceil(blob.cx + reach)));
    const double ct = std::cos(blob.theta), st = std::sin(blob.theta);
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const double dy = r - blob.cy, dx = c - blob.cx;
            const double u = dx * ct + dy * st;
            const double v = -dx * st + dy * ct;
            const double phi = std::atan2(v, u);  // angle in the ellipse frame
            // radius of the perturbed ellipse at this angle
            const double denom = std::hypot(std::cos(phi) / blob.a, std::sin(phi) / blob.b);
            double rho = 1.0 / denom;
            double t = (phi + 3.14159265358979323846) / (2.0 * 3.14159265358979323846) * bins;
            int k0 = static_cast<int>(t) % bins;
            if (k0 < 0) k0 += bins;
            const int k1 = (k0 + 1) % bins;
            const double f = t - std::floor(t);
            const double wig = blob.walk[k0] * (1.0 - f) + blob.walk[k1] * f;
            double scale = 1.0 + blob.wiggle_amp * wig;
            if (scale < 0.45) scale = 0.45;
            rho *= scale;
            if (dx * dx + dy * dy <= rho * rho) mask(r, c) = 1.0;
        }
    }
}

void add_texture(nn::Tensor3& img, const Grid& region, double sel, Rng& rng, double base[3],
                 double noise_amp) {
    const int h = img.height, w = img.width;
    // Two low-frequency sinusoidal waves shared across channels.
    const double f1 = rng.uniform(1.0, 3.0), f2 = rng.uniform(2.0, 5.0);
    const double a1 = rng.uniform(0.0, 6.283185307179586);
    const double a2 = rng.uniform(0.0, 6.283185307179586);
    const double p1 = rng.uniform(0.0, 6.283185307179586);
    const double p2 = rng.uniform(0.0, 6.283185307179586);
    const double wave_amp = 0.5 * noise_amp;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (region(y, x) != sel) continue;
            const double fy = static_cast<double>(y) / h, fx = static_cast<double>(x) / w;
            const double wave =
                wave_amp * (std::sin(6.283185307179586 * f1 * (fx * std::cos(a1) + fy * std::sin(a1)) + p1) +
                            std::sin(6.283185307179586 * f2 * (fx * std::cos(a2) + fy * std::sin(a2)) + p2));
            for (int c = 0; c < 3; ++c) {
                const double n = noise_amp * (rng.uniform() - 0.5);
                double v = base[c] + wave + n;
                if (v < 0.0) v = 0.0;
                if (v > 1.0) v = 1.0;
                img.at(c, y, x) = v;
            }
        }
    }
}

Sample make_sample(const SynthConfig& cfg, int index) {
    Rng rng(Rng::derive(cfg.seed, static_cast<uint64_t>(index), 0x73796e7468ULL));
    const int size = cfg.image_size;

    Grid gt(size, size, 0.0);
    const int n_blobs = rng.uniform_int(cfg.blob_count_range.first, cfg.blob_count_range.second);
    for (int i = 0; i < n_blobs; ++i) {
        Blob blob;
        blob.cy = rng.uniform(0.25, 0.75) * size;
        blob.cx = rng.uniform(0.25, 0.75) * size;
        const double diam = rng.uniform(cfg.blob_scale_range.first, cfg.blob_scale_range.second) * size;
        blob.a = 0.5 * diam;
        blob.b = blob.a * rng.uniform(0.35, 0.9);
        blob.theta = rng.uniform(0.0, 3.14159265358979323846);
        blob.wiggle_amp = rng.uniform(0.15, 0.35);
        blob.walk = closed_radial_walk(rng, 32, 0.6);
        rasterize_blob(blob, gt);
    }
    // Degenerate protection: blob centres sit well inside the frame, so this
    // only triggers for extreme configs. Keep the sample valid regardless.
    bool any = false;
    for (size_t i = 0; i < gt.size() && !any; ++i) any = gt[i] != 0.0;
    if (!any) {
        Blob fallback{size * 0.5, size * 0.5, size * 0.1, size * 0.08, 0.0, std::vector<double>(32, 0.0), 0.0};
        rasterize_blob(fallback, gt);
    }

    double bg[3], fg[3];
    for (int c = 0; c < 3; ++c) {
        bg[c] = rng.uniform(0.3, 0.7);
        fg[c] = bg[c] + (rng.coin() ? cfg.contrast : -cfg.contrast);
        if (fg[c] < 0.0) fg[c] = 0.0;
        if (fg[c] > 1.0) fg[c] = 1.0;
    }

    Sample s;
    s.image = nn::Tensor3(3, size, size, 0.0);
    add_texture(s.image, gt, 0.0, rng, bg, cfg.texture_noise);
    add_texture(s.image, gt, 1.0, rng, fg, cfg.texture_noise);
    s.gt_mask = gt;
    s.boxes = mask_to_boxes(gt);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%06d", index);
    s.id = buf;
    return s;
}

}  // namespace

std::vector<Sample> generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    std::vector<Sample> out;
    out.reserve(cfg.count);
    for (int i = 0; i < cfg.count; ++i) out.push_back(make_sample(cfg, i));
    return out;
}

std::string format_boxes_line(const std::string& id, const std::vector<Box>& boxes) {
    std::ostringstream os;
    os << id << " " << boxes.size();
    for (const Box& b : boxes)
        os << " " << b.row_min << " " << b.col_min << " " << b.row_max << " " << b.col_max;
    return os.str();
}

std::pair<std::string, std::vector<Box>> parse_boxes_line(const std::string& line) {
    std::istringstream is(line);
    std::string id;
    size_t n = 0;
    if (!(is >> id >> n)) throw std::runtime_error("parse_boxes_line: malformed line: " + line);
    std::vector<Box> boxes(n);
    for (size_t i = 0; i < n; ++i) {
        if (!(is >> boxes[i].row_min >> boxes[i].col_min >> boxes[i].row_max >> boxes[i].col_max))
            throw std::runtime_error("parse_boxes_line: truncated record: " + line);
    }
    return {id, boxes};
}

void write_dataset(const std::filesystem::path& root, const std::vector<Sample>& samples) {
    namespace fs = std::filesystem;
    fs::create_directories(root / "images");
    const bool any_gt =
        std::any_of(samples.begin(), samples.end(), [](const Sample& s) { return s.gt_mask.has_value(); });
    if (any_gt) fs::create_directories(root / "masks");
    std::ofstream boxes_out(root / "boxes.txt");
    if (!boxes_out) throw std::runtime_error("write_dataset: cannot open boxes.txt");
    for (const Sample& s : samples) {
        write_ppm(root / "images" / (s.id + ".ppm"), s.image);
        if (s.gt_mask) write_pgm(root / "masks" / (s.id + ".pgm"), *s.gt_mask);
        boxes_out << format_boxes_line(s.id, s.boxes) << "\n";
    }
}

std::vector<Sample> load_directory(const std::filesystem::path& root, LoadReport* report) {
    namespace fs = std::filesystem;
    LoadReport local;
    LoadReport& rep = report ? *report : local;

    const fs::path images_dir = root / "images";
    if (!fs::is_directory(images_dir))
        throw std::runtime_error("load_directory: missing images/ under " + root.string());
    const fs::path masks_dir = root / "masks";
    const bool have_masks = fs::is_directory(masks_dir);
    const fs::path boxes_file = root / "boxes.txt";
    const bool have_boxes = fs::is_regular_file(boxes_file);
    if (!have_masks && !have_boxes)
        throw std::runtime_error("load_directory: need masks/ or boxes.txt under " + root.string());

    std::map<std::string, std::vector<Box>> box_records;
    if (have_boxes) {
        std::ifstream in(boxes_file);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto [id, boxes] = parse_boxes_line(line);
            box_records[id] = std::move(boxes);
        }
    }

    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(images_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());

    std::vector<Sample> samples;
    samples.reserve(ids.size());
    for (const std::string& id : ids) {
        try {
            Sample s;
            s.id = id;
            s.image = read_ppm(images_dir / (id + ".ppm"));
            if (have_masks) {
                const fs::path mask_path = masks_dir / (id + ".pgm");
                if (!fs::is_regular_file(mask_path))
                    throw std::runtime_error("missing mask " + mask_path.string());
                Grid m = read_pgm(mask_path);
                for (size_t i = 0; i < m.size(); ++i) m[i] = m[i] > 0.5 ? 1.0 : 0.0;
                s.gt_mask = std::move(m);
            }
            if (auto it = box_records.find(id); it != box_records.end()) {
                s.boxes = it->second;
                for (const Box& b : s.boxes)
                    if (b.row_min < 0 || b.col_min < 0 || b.row_max < b.row_min ||
                        b.col_max < b.col_min || b.row_max >= s.image.height ||
                        b.col_max >= s.image.width)
                        throw std::runtime_error("box out of bounds for " + id);
            } else if (s.gt_mask) {
                s.boxes = mask_to_boxes(*s.gt_mask);
            } else {
                throw std::runtime_error("no annotation (mask or box record) for " + id);
            }
            samples.push_back(std::move(s));
        } catch (const std::exception& e) {
            rep.skipped.push_back(id);
            rep.messages.push_back(e.what());
        }
    }
    return samples;
}

Grid hflip(const Grid& g) {
    Grid out(g.height(), g.width());
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) out(r, c) = g(r, g.width() - 1 - c);
    return out;
}

Grid vflip(const Grid& g) {
    Grid out(g.height(), g.width());
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) out(r, c) = g(g.height() - 1 - r, c);
    return out;
}

Grid rot90ccw(const Grid& g) {
    Grid out(g.width(), g.height());
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) out(g.width() - 1 - c, r) = g(r, c);
    return out;
}

nn::Tensor3 hflip(const nn::Tensor3& t) {
    nn::Tensor3 out(t.channels, t.height, t.width);
    for (int c = 0; c < t.channels; ++c)
        for (int y = 0; y < t.height; ++y)
            for (int x = 0; x < t.width; ++x) out.at(c, y, x) = t.at(c, y, t.width - 1 - x);
    return out;
}

nn::Tensor3 vflip(const nn::Tensor3& t) {
    nn::Tensor3 out(t.channels, t.height, t.width);
    for (int c = 0; c < t.channels; ++c)
        for (int y = 0; y < t.height; ++y)
            for (int x = 0; x < t.width; ++x) out.at(c, y, x) = t.at(c, t.height - 1 - y, x);
    return out;
}

nn::Tensor3 rot90ccw(const nn::Tensor3& t) {
    nn::Tensor3 out(t.channels, t.width, t.height);
    for (int c = 0; c < t.channels; ++c)
        for (int y = 0; y < t.height; ++y)
            for (int x = 0; x < t.width; ++x) out.at(c, t.width - 1 - x, y) = t.at(c, y, x);
    return out;
}

Box hflip_box(const Box& b, int width) {
    return Box{b.row_min, width - 1 - b.col_max, b.row_max, width - 1 - b.col_min};
}

Box vflip_box(const Box& b, int height) {
    return Box{height - 1 - b.row_max, b.col_min, height - 1 - b.row_min, b.col_max};
}

Box rot90ccw_box(const Box& b, int width) {
    return Box{width - 1 - b.col_max, b.row_min, width - 1 - b.col_min, b.row_max};
}

Sample augment(const Sample& sample, uint64_t seed) {
    Rng rng(Rng::derive(seed, 0x617567ULL));
    const bool do_h = rng.uniform() < 0.5;
    const bool do_v = rng.uniform() < 0.5;
    const int k = rng.uniform_int(0, 3);

    Sample out = sample;
    if (do_h) {
        const int w = out.image.width;
        out.image = hflip(out.image);
        if (out.gt_mask) out.gt_mask = hflip(*out.gt_mask);
        for (Box& b : out.boxes) b = hflip_box(b, w);
    }
    if (do_v) {
        const int h = out.image.height;
        out.image = vflip(out.image);
        if (out.gt_mask) out.gt_mask = vflip(*out.gt_mask);
        for (Box& b : out.boxes) b = vflip_box(b, h);
    }
    for (int i = 0; i < k; ++i) {
        const int w = out.image.width;
        out.image = rot90ccw(out.image);
        if (out.gt_mask) out.gt_mask = rot90ccw(*out.gt_mask);
        for (Box& b : out.boxes) b = rot90ccw_box(b, w);
    }
    // Keep the canonical (row_min, col_min) ordering after the isometry.
    std::sort(out.boxes.begin(), out.boxes.end(), [](const Box& a, const Box& b) {
        return a.row_min != b.row_min ? a.row_min < b.row_min : a.col_min < b.col_min;
    });
    return out;
}

}  // namespace boxseg
