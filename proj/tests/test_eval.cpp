#include "boxseg/eval.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace boxseg;
namespace fs = std::filesystem;

namespace {

TrainState zeroish_state() {
    RunConfig cfg = RunConfig::desk_defaults();
    cfg.base_size = 32;
    cfg.model.encoder_channels = {4, 6, 8, 10, 12};
    cfg.model.fusion_channels = 8;
    cfg.model.input_size = 32;
    TrainState state = TrainState::init(cfg);
    // Saturate the head towards zero so predictions binarize to empty masks.
    auto& head = state.model.layers().back();
    for (double& w : head.w) w = 0.0;
    head.b[0] = -50.0;
    return state;
}

std::vector<Sample> small_dataset(int count, uint64_t seed) {
    SynthConfig cfg;
    cfg.count = count;
    cfg.image_size = 32;
    cfg.seed = seed;
    cfg.blob_scale_range = {0.25, 0.5};
    return generate_synthetic(cfg);
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("dice/iou: identity, disjoint and half-overlap cases") {
    Grid gt(4, 4, 0.0);
    gt(1, 1) = gt(1, 2) = gt(2, 1) = gt(2, 2) = 1.0;  // 4 pixels
    CHECK(dice_metric(gt, gt) == 1.0);
    CHECK(iou_metric(gt, gt) == 1.0);

    Grid far(4, 4, 0.0);
    far(0, 0) = 1.0;
    CHECK(dice_metric(far, gt) == 0.0);
    CHECK(iou_metric(far, gt) == 0.0);

    Grid half(4, 4, 0.0);
    half(1, 1) = half(1, 2) = 1.0;  // covers half of gt, nothing else
    CHECK(dice_metric(half, gt) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(iou_metric(half, gt) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("dice/iou: both-empty convention is 1") {
    const Grid empty(3, 3, 0.0);
    CHECK(dice_metric(empty, empty) == 1.0);
    CHECK(iou_metric(empty, empty) == 1.0);
}

TEST_CASE("metrics agree with brute-force set counting on random pairs") {
    Rng rng(71);
    for (int it = 0; it < 300; ++it) {
        const int h = rng.uniform_int(1, 12), w = rng.uniform_int(1, 12);
        const Grid pred = oracles::random_mask(h, w, rng, false);
        const Grid gt = oracles::random_mask(h, w, rng, true);
        CHECK(dice_metric(pred, gt) == oracles::oracle_dice_metric(pred, gt));
        CHECK(iou_metric(pred, gt) == oracles::oracle_iou_metric(pred, gt));
        CHECK(dice_metric(pred, gt) >= iou_metric(pred, gt));
    }
}

TEST_CASE("dice = 2*iou/(1+iou) per instance, exact at the counts level") {
    Rng rng(72);
    for (int it = 0; it < 200; ++it) {
        const Grid pred = oracles::random_mask(8, 8, rng, false);
        const Grid gt = oracles::random_mask(8, 8, rng, true);
        const MetricCounts c = metric_counts(pred, gt);
        // Rational identity: 2i/(p+g) == 2i/(u+i) because u + i == p + g.
        CHECK(c.unions() + c.intersection == c.pred + c.gt);
        const double dice = dice_from_counts(c);
        const double iou = iou_from_counts(c);
        CHECK(std::fabs(dice - 2.0 * iou / (1.0 + iou)) <= 1e-12);
    }
}

TEST_CASE("evaluate: constant-zero predictions score 0 on polyp-bearing splits") {
    const TrainState state = zeroish_state();
    const auto ds = small_dataset(6, 31);
    const MetricRow row = evaluate(state, ds, "synthetic");
    CHECK(row.dice == 0.0);
    CHECK(row.iou == 0.0);
    CHECK(row.n_images == 6);
    CHECK(row.dataset_split == "synthetic");
}

TEST_CASE("evaluate: order-independent") {
    RunConfig cfg = RunConfig::desk_defaults();
    cfg.base_size = 32;
    cfg.model.encoder_channels = {4, 6, 8, 10, 12};
    cfg.model.fusion_channels = 8;
    const TrainState state = TrainState::init(cfg);

    auto ds = small_dataset(8, 32);
    const MetricRow a = evaluate(state, ds, "s");
    std::reverse(ds.begin(), ds.end());
    const MetricRow b = evaluate(state, ds, "s");
    CHECK(a.dice == b.dice);
    CHECK(a.iou == b.iou);
}

TEST_CASE("evaluate: refuses datasets without gt") {
    const TrainState state = zeroish_state();
    auto ds = small_dataset(3, 33);
    ds[1].gt_mask.reset();
    CHECK_THROWS_AS(evaluate(state, ds, "s"), std::invalid_argument);
    CHECK_THROWS_AS(evaluate(state, {}, "s"), std::invalid_argument);
}

TEST_CASE("write_metric_csv emits the documented header and rows") {
    const fs::path dir = fs::temp_directory_path() / "boxseg_eval_csv";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path file = dir / "metrics.csv";
    write_metric_csv(file, {MetricRow{"test", "weak", 0.5, 0.25, 10}});
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);
    CHECK(line == "split,mode,dice,iou,n");
    std::getline(in, line);
    CHECK(line == "test,weak,0.500000,0.250000,10");
    fs::remove_all(dir);
}

}  // TEST_SUITE
