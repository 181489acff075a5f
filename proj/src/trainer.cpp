#include "boxseg/trainer.hpp"

#include "boxseg/m2b.hpp"
#include "boxseg/metrics.hpp"
#include "boxseg/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <thread>

namespace boxseg {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Static-stripe parallel loop; results must go into per-index slots so the
// outcome is independent of the thread count.
void for_each_index(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    threads = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            for (int i = t; i < n; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

std::string to_string(SupervisionMode mode) {
    switch (mode) {
        case SupervisionMode::FullGt: return "full_gt";
        case SupervisionMode::NaiveBox: return "naive_box";
        case SupervisionMode::M2bOnly: return "m2b_only";
        case SupervisionMode::Weak: return "weak";
    }
    throw std::invalid_argument("to_string: bad SupervisionMode");
}

SupervisionMode mode_from_string(const std::string& s) {
    if (s == "full_gt") return SupervisionMode::FullGt;
    if (s == "naive_box") return SupervisionMode::NaiveBox;
    if (s == "m2b_only") return SupervisionMode::M2bOnly;
    if (s == "weak") return SupervisionMode::Weak;
    throw std::invalid_argument("unknown supervision mode: " + s);
}

RunConfig RunConfig::paper_defaults() {
    RunConfig cfg;
    cfg.base_size = 352;
    cfg.scale_set = {256, 288, 320, 352, 384, 416};
    cfg.lr = 1e-4;
    cfg.batch_size = 16;
    cfg.epochs = 16;
    cfg.weight_decay = 1e-4;
    return cfg;
}

RunConfig RunConfig::desk_defaults() {
    RunConfig cfg;
    cfg.base_size = 96;
    cfg.scale_set = {64, 96, 128};
    cfg.lr = 1e-3;
    cfg.batch_size = 8;
    cfg.epochs = 12;
    cfg.weight_decay = 1e-4;
    cfg.model.input_size = 96;
    return cfg;
}

void RunConfig::validate() const {
    if (base_size < 32 || base_size % 32 != 0)
        throw std::invalid_argument("RunConfig: base_size must be a positive multiple of 32");
    if (scale_set.empty()) throw std::invalid_argument("RunConfig: scale_set must be nonempty");
    for (int s : scale_set)
        if (s < 32 || s % 32 != 0)
            throw std::invalid_argument("RunConfig: every scale must be a positive multiple of 32");
    if (!(lr > 0.0)) throw std::invalid_argument("RunConfig: lr must be > 0");
    if (batch_size < 1) throw std::invalid_argument("RunConfig: batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("RunConfig: epochs must be >= 0");
    if (weight_decay < 0.0) throw std::invalid_argument("RunConfig: weight_decay must be >= 0");
    model.validate();
}

namespace {

nlohmann::json model_to_json(const ModelConfig& m) {
    return {{"encoder_channels", m.encoder_channels},
            {"fusion_channels", m.fusion_channels},
            {"input_size", m.input_size}};
}

ModelConfig model_from_json(const nlohmann::json& j) {
    ModelConfig m;
    if (j.contains("encoder_channels")) {
        const auto ch = j.at("encoder_channels").get<std::vector<int>>();
        if (ch.size() != m.encoder_channels.size())
            throw std::invalid_argument("model config: encoder_channels needs 5 entries");
        std::copy(ch.begin(), ch.end(), m.encoder_channels.begin());
    }
    m.fusion_channels = j.value("fusion_channels", m.fusion_channels);
    m.input_size = j.value("input_size", m.input_size);
    return m;
}

nlohmann::json run_to_json(const RunConfig& cfg) {
    return {{"mode", to_string(cfg.mode)},
            {"base_size", cfg.base_size},
            {"scale_set", cfg.scale_set},
            {"lr", cfg.lr},
            {"batch_size", cfg.batch_size},
            {"epochs", cfg.epochs},
            {"weight_decay", cfg.weight_decay},
            {"seed", cfg.seed},
            {"threads", cfg.threads},
            {"augment", cfg.augment},
            {"model", model_to_json(cfg.model)},
            {"out_dir", cfg.out_dir}};
}

RunConfig run_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    if (j.contains("mode")) cfg.mode = mode_from_string(j.at("mode").get<std::string>());
    cfg.base_size = j.value("base_size", cfg.base_size);
    if (j.contains("scale_set")) cfg.scale_set = j.at("scale_set").get<std::vector<int>>();
    cfg.lr = j.value("lr", cfg.lr);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.augment = j.value("augment", cfg.augment);
    if (j.contains("model")) cfg.model = model_from_json(j.at("model"));
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    return cfg;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_run_config: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("load_run_config: malformed JSON in " + path.string() + ": " +
                                    e.what());
    }
    return run_from_json(j);
}

void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_run_config: cannot open " + path.string());
    out << run_to_json(cfg).dump(2) << "\n";
}

TrainState TrainState::init(const RunConfig& cfg) {
    cfg.validate();
    TrainState state;
    state.cfg = cfg;
    state.cfg.model.input_size = cfg.base_size;
    state.model = Model(state.cfg.model, cfg.seed);
    state.opt_m.resize(state.model.layers().size());
    state.opt_v.resize(state.model.layers().size());
    for (size_t i = 0; i < state.model.layers().size(); ++i) {
        state.opt_m[i].resize_like(state.model.layers()[i]);
        state.opt_v[i].resize_like(state.model.layers()[i]);
    }
    state.rng = Rng(Rng::derive(cfg.seed, 0x747261696eULL));
    return state;
}

Box scale_box(const Box& b, int src_h, int src_w, int dst_h, int dst_w) {
    const double sy = static_cast<double>(dst_h) / src_h;
    const double sx = static_cast<double>(dst_w) / src_w;
    Box out;
    out.row_min = static_cast<int>(std::floor(b.row_min * sy));
    out.col_min = static_cast<int>(std::floor(b.col_min * sx));
    out.row_max = static_cast<int>(std::ceil((b.row_max + 1) * sy)) - 1;
    out.col_max = static_cast<int>(std::ceil((b.col_max + 1) * sx)) - 1;
    out.row_min = std::clamp(out.row_min, 0, dst_h - 1);
    out.col_min = std::clamp(out.col_min, 0, dst_w - 1);
    out.row_max = std::clamp(out.row_max, out.row_min, dst_h - 1);
    out.col_max = std::clamp(out.col_max, out.col_min, dst_w - 1);
    return out;
}

namespace {

struct SampleWork {
    LossReport report;
    ModelGrad grads;
};

void adamw_apply(TrainState& state, const ModelGrad& grads) {
    ++state.step_count;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
    const double bc2 = 1.0 - std::pow(kAdamBeta2, t);
    const double lr = state.cfg.lr, wd = state.cfg.weight_decay;

    auto update = [&](std::vector<double>& p, std::vector<double>& m, std::vector<double>& v,
                      const std::vector<double>& g) {
        for (size_t i = 0; i < p.size(); ++i) {
            m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
            v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * (mhat / (std::sqrt(vhat) + kAdamEps) + wd * p[i]);
        }
    };
    auto& layers = state.model.layers();
    for (size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].w, state.opt_m[l].w, state.opt_v[l].w, grads.layers[l].w);
        update(layers[l].b, state.opt_m[l].b, state.opt_v[l].b, grads.layers[l].b);
    }
}

void maybe_save_diagnostic(const TrainState& state) {
    if (state.cfg.out_dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(state.cfg.out_dir, ec);
    if (!ec) save_checkpoint(std::filesystem::path(state.cfg.out_dir) / "diverged.ckpt", state);
}

}  // namespace

LossReport train_step(const std::vector<Sample>& batch, TrainState& state, const RunConfig& cfg) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    const int s1 = cfg.base_size;
    const bool two_scale =
        cfg.mode == SupervisionMode::Weak || cfg.mode == SupervisionMode::M2bOnly;
    int s2 = s1;
    if (two_scale)
        s2 = cfg.scale_set[state.rng.uniform_int(0, static_cast<int>(cfg.scale_set.size()) - 1)];

    if (cfg.mode == SupervisionMode::FullGt)
        for (const Sample& s : batch)
            if (!s.gt_mask)
                throw std::invalid_argument("train_step: full_gt mode requires gt_mask (sample " +
                                            s.id + ")");

    const int n = static_cast<int>(batch.size());
    std::vector<SampleWork> work(n);
    std::vector<std::exception_ptr> errors(n);

    for_each_index(n, cfg.threads, [&](int i) {
      try {
        const Sample& smp = batch[i];
        const nn::Tensor3 img1 = nn::bilinear_resize(smp.image, s1, s1);
        std::vector<Box> scaled;
        scaled.reserve(smp.boxes.size());
        for (const Box& b : smp.boxes)
            scaled.push_back(scale_box(b, smp.image.height, smp.image.width, s1, s1));
        const BoxMask box_mask = BoxMask::render(s1, s1, scaled);

        ForwardTrace tr1;
        const Grid p1 = state.model.forward(img1, s1, s1, &tr1);
        work[i].grads = state.model.make_grad();

        switch (cfg.mode) {
            case SupervisionMode::Weak:
            case SupervisionMode::M2bOnly: {
                const nn::Tensor3 img2 = nn::bilinear_resize(smp.image, s2, s2);
                ForwardTrace tr2;
                const Grid p2_raw = state.model.forward(img2, s2, s2, &tr2);
                const Grid p2 = nn::bilinear_resize(p2_raw, s1, s1);
                const TotalLossGrads lg = box_supervision_with_grads(
                    p1, p2, box_mask, cfg.mode == SupervisionMode::Weak);
                work[i].report = lg.report;
                state.model.backward(tr1, lg.d_p1, work[i].grads);
                const Grid d_p2_raw = nn::bilinear_resize_backward(lg.d_p2, s2, s2);
                state.model.backward(tr2, d_p2_raw, work[i].grads);
                break;
            }
            case SupervisionMode::NaiveBox:
            case SupervisionMode::FullGt: {
                const Grid target = cfg.mode == SupervisionMode::NaiveBox
                                        ? box_mask.values
                                        : nn::nearest_resize(*smp.gt_mask, s1, s1);
                LossReport rep;
                rep.bce = bce_loss(p1, target);
                rep.dice = dice_loss(p1, target);
                rep.sum_loss = rep.bce + rep.dice;
                rep.sc = 0.0;
                rep.total = rep.sum_loss;
                work[i].report = rep;
                Grid g = bce_loss_grad(p1, target);
                const Grid gd = dice_loss_grad(p1, target);
                for (size_t j = 0; j < g.size(); ++j) g[j] += gd[j];
                state.model.backward(tr1, g, work[i].grads);
                break;
            }
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    // Deterministic reduction in sample order.
    ModelGrad grads = state.model.make_grad();
    LossReport mean;
    for (int i = 0; i < n; ++i) {
        grads.accumulate(work[i].grads);
        mean.bce += work[i].report.bce;
        mean.dice += work[i].report.dice;
        mean.sum_loss += work[i].report.sum_loss;
        mean.sc += work[i].report.sc;
        mean.total += work[i].report.total;
        mean.empty_box = mean.empty_box || work[i].report.empty_box;
    }
    const double inv = 1.0 / n;
    mean.bce *= inv;
    mean.dice *= inv;
    mean.sc *= inv;
    // Recompose so the report invariants hold exactly after averaging.
    mean.sum_loss = mean.bce + mean.dice;
    mean.total = mean.sum_loss + mean.sc;
    grads.scale(inv);

    if (!std::isfinite(mean.total)) {
        maybe_save_diagnostic(state);
        throw std::runtime_error("train_step: non-finite loss at step " +
                                 std::to_string(state.step_count + 1) +
                                 "; diagnostic checkpoint written when out_dir is set");
    }

    adamw_apply(state, grads);
    return mean;
}

namespace {

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const int j = rng.uniform_int(0, i);
        std::swap(order[i], order[j]);
    }
    return order;
}

void append_metrics_csv(const std::filesystem::path& path, const RunConfig& cfg,
                        const EpochStats& es) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("train: cannot append to " + path.string());
    if (fresh) out << "epoch,mode,bce,dice,sum,sc,total,val_dice,val_iou\n";
    out << es.epoch << "," << to_string(cfg.mode) << "," << es.mean_loss.bce << ","
        << es.mean_loss.dice << "," << es.mean_loss.sum_loss << "," << es.mean_loss.sc << ","
        << es.mean_loss.total;
    if (es.val_dice >= 0.0)
        out << "," << es.val_dice << "," << es.val_iou << "\n";
    else
        out << ",,\n";
}

}  // namespace

TrainState train(const std::vector<Sample>& dataset, const RunConfig& cfg,
                 const std::vector<Sample>* val) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    if (cfg.mode == SupervisionMode::FullGt)
        for (const Sample& s : dataset)
            if (!s.gt_mask)
                throw std::invalid_argument("train: full_gt mode needs gt_mask on every sample; " +
                                            s.id + " has none");

    TrainState state = TrainState::init(cfg);
    const std::filesystem::path out_dir = cfg.out_dir;
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        save_run_config(out_dir / "run_config.json", cfg);
    }

    const int n = static_cast<int>(dataset.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        state.epoch = epoch;
        const std::vector<int> order = shuffled_indices(n, state.rng);

        LossReport epoch_mean;
        long long seen = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int stop = std::min(n, start + cfg.batch_size);
            std::vector<Sample> batch;
            batch.reserve(stop - start);
            for (int k = start; k < stop; ++k) {
                const int idx = order[k];
                batch.push_back(cfg.augment
                                    ? augment(dataset[idx], Rng::derive(cfg.seed, epoch, idx))
                                    : dataset[idx]);
            }
            const LossReport rep = train_step(batch, state, cfg);
            const double w = static_cast<double>(batch.size());
            epoch_mean.bce += rep.bce * w;
            epoch_mean.dice += rep.dice * w;
            epoch_mean.sc += rep.sc * w;
            seen += static_cast<long long>(batch.size());
        }
        const double inv = 1.0 / static_cast<double>(seen);
        epoch_mean.bce *= inv;
        epoch_mean.dice *= inv;
        epoch_mean.sc *= inv;
        epoch_mean.sum_loss = epoch_mean.bce + epoch_mean.dice;
        epoch_mean.total = epoch_mean.sum_loss + epoch_mean.sc;

        EpochStats es;
        es.epoch = epoch;
        es.mean_loss = epoch_mean;
        if (val && !val->empty()) {
            double dsum = 0.0, isum = 0.0;
            int counted = 0;
            for (const Sample& s : *val) {
                if (!s.gt_mask) continue;
                const Grid pred = infer(s.image, state);
                dsum += dice_metric(pred, *s.gt_mask);
                isum += iou_metric(pred, *s.gt_mask);
                ++counted;
            }
            if (counted > 0) {
                es.val_dice = dsum / counted;
                es.val_iou = isum / counted;
            }
        }
        state.history.push_back(es);
        state.epoch = epoch + 1;

        if (!cfg.out_dir.empty()) {
            append_metrics_csv(out_dir / "metrics.csv", cfg, es);
            save_checkpoint(out_dir / "last.ckpt", state);
        }
    }

    if (!cfg.out_dir.empty()) save_checkpoint(out_dir / "final.ckpt", state);
    return state;
}

Grid infer(const nn::Tensor3& image, const TrainState& state) {
    const nn::Tensor3 resized = nn::bilinear_resize(image, state.cfg.base_size, state.cfg.base_size);
    return state.model.forward(resized, image.height, image.width, nullptr);
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
    Archive a;
    a.header["format"] = "boxseg-checkpoint";
    a.header["version"] = 1;
    a.header["run_config"] = run_to_json(state.cfg);
    a.header["epoch"] = state.epoch;
    a.header["step_count"] = state.step_count;
    a.header["rng_state"] = state.rng.state();
    auto& hist = a.header["history"] = nlohmann::json::array();
    for (const EpochStats& es : state.history)
        hist.push_back({{"epoch", es.epoch},
                        {"bce", es.mean_loss.bce},
                        {"dice", es.mean_loss.dice},
                        {"sum", es.mean_loss.sum_loss},
                        {"sc", es.mean_loss.sc},
                        {"total", es.mean_loss.total},
                        {"val_dice", es.val_dice},
                        {"val_iou", es.val_iou}});

    const auto& layers = state.model.layers();
    for (size_t l = 0; l < layers.size(); ++l) {
        a.arrays.emplace_back(layers[l].name + ".w", layers[l].w);
        a.arrays.emplace_back(layers[l].name + ".b", layers[l].b);
        a.arrays.emplace_back("opt_m." + layers[l].name + ".w", state.opt_m[l].w);
        a.arrays.emplace_back("opt_m." + layers[l].name + ".b", state.opt_m[l].b);
        a.arrays.emplace_back("opt_v." + layers[l].name + ".w", state.opt_v[l].w);
        a.arrays.emplace_back("opt_v." + layers[l].name + ".b", state.opt_v[l].b);
    }
    save_archive(path, a);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
    const Archive a = load_archive(path);
    if (a.header.value("format", "") != "boxseg-checkpoint")
        throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path.string());

    const RunConfig cfg = run_from_json(a.header.at("run_config"));
    TrainState state = TrainState::init(cfg);
    state.epoch = a.header.value("epoch", 0);
    state.step_count = a.header.value("step_count", 0LL);
    state.rng.set_state(a.header.at("rng_state").get<uint64_t>());
    for (const auto& h : a.header.value("history", nlohmann::json::array())) {
        EpochStats es;
        es.epoch = h.value("epoch", 0);
        es.mean_loss.bce = h.value("bce", 0.0);
        es.mean_loss.dice = h.value("dice", 0.0);
        es.mean_loss.sum_loss = h.value("sum", 0.0);
        es.mean_loss.sc = h.value("sc", 0.0);
        es.mean_loss.total = h.value("total", 0.0);
        es.val_dice = h.value("val_dice", -1.0);
        es.val_iou = h.value("val_iou", -1.0);
        state.history.push_back(es);
    }

    auto& layers = state.model.layers();
    auto fill = [&](const std::string& name, std::vector<double>& dst) {
        const auto& src = a.array(name);
        if (src.size() != dst.size())
            throw std::runtime_error("load_checkpoint: size mismatch for " + name);
        dst = src;
    };
    for (size_t l = 0; l < layers.size(); ++l) {
        fill(layers[l].name + ".w", layers[l].w);
        fill(layers[l].name + ".b", layers[l].b);
        fill("opt_m." + layers[l].name + ".w", state.opt_m[l].w);
        fill("opt_m." + layers[l].name + ".b", state.opt_m[l].b);
        fill("opt_v." + layers[l].name + ".w", state.opt_v[l].w);
        fill("opt_v." + layers[l].name + ".b", state.opt_v[l].b);
    }
    return state;
}

}  // namespace boxseg
