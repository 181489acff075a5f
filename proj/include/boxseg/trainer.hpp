#pragma once

#include "boxseg/data.hpp"
#include "boxseg/losses.hpp"
#include "boxseg/model.hpp"
#include "boxseg/rng.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace boxseg {

// Supervision regimes: full ground truth, raw box masks, M2B-transformed box
// supervision, and M2B plus scale consistency.
enum class SupervisionMode { FullGt, NaiveBox, M2bOnly, Weak };

std::string to_string(SupervisionMode mode);
SupervisionMode mode_from_string(const std::string& s);

struct RunConfig {
    SupervisionMode mode = SupervisionMode::Weak;
    int base_size = 352;                                  // s1
    std::vector<int> scale_set{256, 288, 320, 352, 384, 416};  // s2 candidates
    double lr = 1e-4;
    int batch_size = 16;
    int epochs = 16;
    double weight_decay = 1e-4;
    uint64_t seed = 0;
    int threads = 0;       // device hint; 0 = hardware concurrency
    bool augment = true;   // random flips + 90° rotations during training
    ModelConfig model;
    std::string out_dir;   // when set: metrics.csv + per-epoch checkpoints

    // Training recipe at publication scale: 352×352 inputs, lr 1e-4,
    // batch 16, 16 epochs.
    static RunConfig paper_defaults();
    // Minutes-on-a-laptop variant: 96×96 inputs, scale set {64, 96, 128}.
    static RunConfig desk_defaults();

    void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& cfg);

struct EpochStats {
    int epoch = 0;
    LossReport mean_loss;
    double val_dice = -1.0;  // -1 when no validation split was given
    double val_iou = -1.0;
};

// Everything a training run owns: parameters, optimizer moments, RNG and the
// metric history. Checkpoints round-trip this state bit-exactly.
struct TrainState {
    RunConfig cfg;
    Model model;
    std::vector<nn::ConvGrad> opt_m;  // first moments, shaped like the layers
    std::vector<nn::ConvGrad> opt_v;  // second moments
    long long step_count = 0;
    int epoch = 0;
    Rng rng{0};
    std::vector<EpochStats> history;

    static TrainState init(const RunConfig& cfg);
};

// One optimizer update on one batch. Weak mode runs the two-scale pipeline:
// resize to s1 and s2 (s2 drawn per batch from the scale set), forward both
// through the shared model, resize the s2 probabilities to s1 and apply the
// combined M2B + SC objective against the box mask rendered at s1.
LossReport train_step(const std::vector<Sample>& batch, TrainState& state, const RunConfig& cfg);

// Full training loop: per-epoch shuffling and augmentation seeded from the
// config, AdamW updates, optional validation metrics, CSV logging and
// per-epoch checkpoints when cfg.out_dir is set. Aborts with a diagnostic
// checkpoint if the loss turns non-finite.
TrainState train(const std::vector<Sample>& dataset, const RunConfig& cfg,
                 const std::vector<Sample>* val = nullptr);

// Single forward pass at the training base size; no supervision machinery.
// Returns probabilities at the image's own resolution.
Grid infer(const nn::Tensor3& image, const TrainState& state);

void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

// Box corners rescaled from (src_h, src_w) to (dst_h, dst_w) with outward
// rounding: floor for mins, ceil for the exclusive right/bottom edges.
Box scale_box(const Box& b, int src_h, int src_w, int dst_h, int dst_w);

}  // namespace boxseg
