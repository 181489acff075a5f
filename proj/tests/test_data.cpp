#include "boxseg/data.hpp"

#include "boxseg/image_io.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace boxseg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("boxseg_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

double foreground_fraction(const Grid& m) {
    double acc = 0.0;
    for (size_t i = 0; i < m.size(); ++i) acc += m[i];
    return acc / static_cast<double>(m.size());
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("mask_to_boxes: rectangle, singletons, L-shape") {
    Grid rect(8, 10, 0.0);
    for (int r = 2; r <= 5; ++r)
        for (int c = 3; c <= 7; ++c) rect(r, c) = 1.0;
    CHECK(mask_to_boxes(rect) == std::vector<Box>{Box{2, 3, 5, 7}});

    Grid two(3, 3, 0.0);
    two(0, 0) = two(2, 2) = 1.0;
    CHECK(mask_to_boxes(two) == std::vector<Box>{Box{0, 0, 0, 0}, Box{2, 2, 2, 2}});

    // L-shape: rows 1..4 in cols 1..2, plus row 4 extending to col 5.
    Grid ell(6, 7, 0.0);
    for (int r = 1; r <= 4; ++r)
        for (int c = 1; c <= 2; ++c) ell(r, c) = 1.0;
    for (int c = 1; c <= 5; ++c) ell(4, c) = 1.0;
    CHECK(mask_to_boxes(ell) == std::vector<Box>{Box{1, 1, 4, 5}});

    CHECK(mask_to_boxes(Grid(4, 4, 0.0)).empty());
}

TEST_CASE("mask_to_boxes agrees with the union-find oracle") {
    Rng rng(61);
    for (int it = 0; it < 100; ++it) {
        const Grid m = oracles::random_mask(rng.uniform_int(1, 14), rng.uniform_int(1, 14), rng, true);
        CHECK(mask_to_boxes(m) == oracles::oracle_component_boxes(m));
    }
}

TEST_CASE("render/mask_to_boxes round-trip for non-overlapping boxes") {
    Rng rng(62);
    for (int it = 0; it < 50; ++it) {
        // Disjoint boxes on a grid of 3x3 cells, each strictly inside its cell
        // so no two touch.
        std::vector<Box> boxes;
        for (int cy = 0; cy < 3; ++cy)
            for (int cx = 0; cx < 3; ++cx) {
                if (rng.uniform() < 0.5) continue;
                const int r0 = cy * 10 + rng.uniform_int(1, 4);
                const int c0 = cx * 10 + rng.uniform_int(1, 4);
                boxes.push_back(Box{r0, c0, r0 + rng.uniform_int(0, 4), c0 + rng.uniform_int(0, 4)});
            }
        const BoxMask bm = BoxMask::render(30, 30, boxes);
        std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) {
            return a.row_min != b.row_min ? a.row_min < b.row_min : a.col_min < b.col_min;
        });
        CHECK(mask_to_boxes(bm.values) == boxes);
    }
}

TEST_CASE("generate_synthetic: identical seeds give bit-identical datasets") {
    SynthConfig cfg;
    cfg.count = 6;
    cfg.image_size = 64;
    cfg.seed = 7;
    const auto a = generate_synthetic(cfg);
    const auto b = generate_synthetic(cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image.v == b[i].image.v);
        CHECK(*a[i].gt_mask == *b[i].gt_mask);
        CHECK(a[i].boxes == b[i].boxes);
        CHECK(a[i].id == b[i].id);
    }
}

TEST_CASE("generate_synthetic: samples satisfy the tight-box invariant") {
    SynthConfig cfg;
    cfg.count = 12;
    cfg.image_size = 96;
    cfg.seed = 3;
    for (const Sample& s : generate_synthetic(cfg)) {
        REQUIRE(s.gt_mask.has_value());
        CHECK(s.boxes == mask_to_boxes(*s.gt_mask));
        CHECK(!s.boxes.empty());
        CHECK(in_unit_range(*s.gt_mask));
        for (double v : s.image.v) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("generate_synthetic: default scale range lands in a sane foreground band") {
    // Monte-Carlo estimate of the mean foreground fraction for the default
    // generator constants (blob scale 0.2-0.4 of a 96px image).
    SynthConfig cfg;
    cfg.count = 400;
    cfg.image_size = 96;
    cfg.seed = 12345;
    double acc = 0.0;
    for (const Sample& s : generate_synthetic(cfg)) acc += foreground_fraction(*s.gt_mask);
    const double mean = acc / cfg.count;
    CHECK(mean >= 0.02);
    CHECK(mean <= 0.30);
}

TEST_CASE("generate_synthetic: degenerate configs are rejected") {
    SynthConfig cfg;
    cfg.count = 0;
    CHECK_THROWS_AS(generate_synthetic(cfg), std::invalid_argument);
    cfg = SynthConfig{};
    cfg.image_size = 100;
    CHECK_THROWS_AS(generate_synthetic(cfg), std::invalid_argument);
    cfg = SynthConfig{};
    cfg.blob_scale_range = {0.4, 0.2};
    CHECK_THROWS_AS(generate_synthetic(cfg), std::invalid_argument);
    cfg = SynthConfig{};
    cfg.blob_count_range = {2, 1};
    CHECK_THROWS_AS(generate_synthetic(cfg), std::invalid_argument);
}

TEST_CASE("augment: identity draw leaves the sample unchanged") {
    SynthConfig cfg;
    cfg.count = 1;
    cfg.image_size = 64;
    cfg.seed = 99;
    const Sample s = generate_synthetic(cfg)[0];

    // Find a seed whose draws are (no hflip, no vflip, k = 0).
    for (uint64_t seed = 0;; ++seed) {
        Rng probe(Rng::derive(seed, 0x617567ULL));
        const bool h = probe.uniform() < 0.5;
        const bool v = probe.uniform() < 0.5;
        const int k = probe.uniform_int(0, 3);
        if (!h && !v && k == 0) {
            const Sample out = augment(s, seed);
            CHECK(out.image.v == s.image.v);
            CHECK(*out.gt_mask == *s.gt_mask);
            CHECK(out.boxes == s.boxes);
            break;
        }
        REQUIRE(seed < 1000);  // identity draw has probability 1/16
    }
}

TEST_CASE("augment: horizontal flip maps box corners as expected") {
    CHECK(hflip_box(Box{2, 3, 5, 7}, 10) == Box{2, 2, 5, 6});
    CHECK(vflip_box(Box{2, 3, 5, 7}, 10) == Box{4, 3, 7, 7});
    // 90° ccw of a width-10 grid: (r,c) -> (9-c, r)
    CHECK(rot90ccw_box(Box{2, 3, 5, 7}, 10) == Box{2, 2, 6, 5});
}

TEST_CASE("augment: boxes stay tight and foreground count is preserved") {
    SynthConfig cfg;
    cfg.count = 8;
    cfg.image_size = 64;
    cfg.seed = 17;
    const auto samples = generate_synthetic(cfg);
    for (size_t i = 0; i < samples.size(); ++i) {
        const Sample out = augment(samples[i], 1000 + i);
        REQUIRE(out.gt_mask.has_value());
        CHECK(out.boxes == mask_to_boxes(*out.gt_mask));
        CHECK(foreground_fraction(*out.gt_mask) ==
              foreground_fraction(*samples[i].gt_mask));  // permutation of pixels
        // Same augmentation twice is deterministic.
        const Sample again = augment(samples[i], 1000 + i);
        CHECK(again.image.v == out.image.v);
        CHECK(again.boxes == out.boxes);
    }
}

TEST_CASE("boxes.txt line format round-trips") {
    const std::vector<Box> boxes{Box{2, 3, 5, 7}, Box{0, 0, 0, 0}};
    const std::string line = format_boxes_line("img_000042", boxes);
    CHECK(line == "img_000042 2 2 3 5 7 0 0 0 0");
    const auto [id, parsed] = parse_boxes_line(line);
    CHECK(id == "img_000042");
    CHECK(parsed == boxes);
    CHECK_THROWS_AS(parse_boxes_line("img 2 1 2 3"), std::runtime_error);
}

TEST_CASE("image io: ppm/pgm round-trip is exact for 8-bit content") {
    Rng rng(63);
    const auto dir = temp_dir("imageio");
    nn::Tensor3 img(3, 9, 13);
    for (double& v : img.v) v = rng.uniform_int(0, 255) / 255.0;
    write_ppm(dir / "a.ppm", img);
    const nn::Tensor3 back = read_ppm(dir / "a.ppm");
    CHECK(back.v == img.v);

    Grid mask(9, 13);
    for (size_t i = 0; i < mask.size(); ++i) mask[i] = rng.coin() ? 1.0 : 0.0;
    write_pgm(dir / "m.pgm", mask);
    const Grid mback = read_pgm(dir / "m.pgm");
    CHECK(mback == mask);
    fs::remove_all(dir);
}

TEST_CASE("write_dataset/load_directory round-trip with masks") {
    SynthConfig cfg;
    cfg.count = 5;
    cfg.image_size = 64;
    cfg.seed = 20;
    const auto samples = generate_synthetic(cfg);
    const auto dir = temp_dir("roundtrip");
    write_dataset(dir, samples);

    LoadReport report;
    const auto loaded = load_directory(dir, &report);
    CHECK(report.skipped.empty());
    REQUIRE(loaded.size() == samples.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].id == samples[i].id);  // sorted order preserved
        REQUIRE(loaded[i].gt_mask.has_value());
        CHECK(*loaded[i].gt_mask == *samples[i].gt_mask);  // masks are binary => exact
        CHECK(loaded[i].boxes == samples[i].boxes);
        // Images round-trip through 8-bit quantization.
        REQUIRE(loaded[i].image.size() == samples[i].image.size());
        for (size_t j = 0; j < loaded[i].image.size(); ++j)
            CHECK(std::fabs(loaded[i].image.v[j] - samples[i].image.v[j]) <= 0.5 / 255.0 + 1e-12);
    }
    fs::remove_all(dir);
}

TEST_CASE("load_directory: box-only datasets carry no gt") {
    SynthConfig cfg;
    cfg.count = 4;
    cfg.image_size = 64;
    cfg.seed = 21;
    auto samples = generate_synthetic(cfg);
    for (Sample& s : samples) s.gt_mask.reset();
    const auto dir = temp_dir("boxonly");
    write_dataset(dir, samples);
    CHECK(!fs::exists(dir / "masks"));

    const auto loaded = load_directory(dir);
    REQUIRE(loaded.size() == samples.size());
    for (const Sample& s : loaded) {
        CHECK(!s.gt_mask.has_value());
        CHECK(!s.boxes.empty());
    }
    fs::remove_all(dir);
}

TEST_CASE("load_directory: masks without boxes.txt derive boxes") {
    SynthConfig cfg;
    cfg.count = 3;
    cfg.image_size = 64;
    cfg.seed = 22;
    const auto samples = generate_synthetic(cfg);
    const auto dir = temp_dir("derive");
    write_dataset(dir, samples);
    fs::remove(dir / "boxes.txt");

    const auto loaded = load_directory(dir);
    REQUIRE(loaded.size() == samples.size());
    for (size_t i = 0; i < loaded.size(); ++i)
        CHECK(loaded[i].boxes == mask_to_boxes(*loaded[i].gt_mask));
    fs::remove_all(dir);
}

TEST_CASE("load_directory: corrupt images are skipped with a report entry") {
    SynthConfig cfg;
    cfg.count = 3;
    cfg.image_size = 64;
    cfg.seed = 23;
    const auto samples = generate_synthetic(cfg);
    const auto dir = temp_dir("corrupt");
    write_dataset(dir, samples);
    {
        std::ofstream bad(dir / "images" / "img_000001.ppm", std::ios::binary | std::ios::trunc);
        bad << "not an image";
    }

    LoadReport report;
    const auto loaded = load_directory(dir, &report);
    CHECK(loaded.size() == 2);
    REQUIRE(report.skipped.size() == 1);
    CHECK(report.skipped[0] == "img_000001");
    fs::remove_all(dir);
}

TEST_CASE("load_directory: missing annotations are an error only per-sample") {
    const auto dir = temp_dir("missing");
    fs::create_directories(dir / "images");
    nn::Tensor3 img(3, 32, 32, 0.5);
    write_ppm(dir / "images" / "a.ppm", img);
    write_ppm(dir / "images" / "b.ppm", img);
    std::ofstream(dir / "boxes.txt") << "a 1 2 2 5 5\n";

    LoadReport report;
    const auto loaded = load_directory(dir, &report);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].id == "a");
    REQUIRE(report.skipped.size() == 1);
    CHECK(report.skipped[0] == "b");
    fs::remove_all(dir);
}

TEST_CASE("load_directory: needs images/ and some annotation source") {
    const auto dir = temp_dir("empty");
    CHECK_THROWS_AS(load_directory(dir), std::runtime_error);
    fs::create_directories(dir / "images");
    CHECK_THROWS_AS(load_directory(dir), std::runtime_error);
    fs::remove_all(dir);
}

}  // TEST_SUITE
