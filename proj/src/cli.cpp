#include "boxseg/cli.hpp"

#include "boxseg/data.hpp"
#include "boxseg/eval.hpp"
#include "boxseg/image_io.hpp"
#include "boxseg/trainer.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace boxseg {

namespace {

namespace fs = std::filesystem;

std::vector<int> parse_scale_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    if (out.empty()) throw std::invalid_argument("scale list is empty: " + csv);
    return out;
}

struct TrainFlags {
    std::string data, val, out, config, mode, scales, preset = "desk";
    int epochs = -1, batch = -1, base_size = -1, threads = -1;
    double lr = -1.0, weight_decay = -1.0;
    long long seed = -1;
    bool no_augment = false;
    std::vector<int> enc_channels;
    int fusion = -1;
};

void add_train_options(CLI::App* cmd, TrainFlags& f, bool with_mode) {
    cmd->add_option("--data", f.data, "dataset root (images/ plus masks/ or boxes.txt)")
        ->required();
    cmd->add_option("--val", f.val, "validation dataset root (needs masks/)");
    cmd->add_option("--out", f.out, "output directory for metrics.csv and checkpoints");
    cmd->add_option("--config", f.config, "run-config JSON file");
    cmd->add_option("--preset", f.preset, "base defaults: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    if (with_mode)
        cmd->add_option("--mode", f.mode, "full_gt | naive_box | m2b_only | weak");
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--batch", f.batch, "batch size");
    cmd->add_option("--base-size", f.base_size, "s1 resolution (multiple of 32)");
    cmd->add_option("--scales", f.scales, "comma-separated s2 scale set, e.g. 64,96,128");
    cmd->add_option("--lr", f.lr, "learning rate");
    cmd->add_option("--weight-decay", f.weight_decay, "decoupled weight decay");
    cmd->add_option("--seed", f.seed, "run seed");
    cmd->add_option("--threads", f.threads, "worker threads (0 = auto)");
    cmd->add_option("--encoder-channels", f.enc_channels, "five encoder stage widths")
        ->expected(5);
    cmd->add_option("--fusion-channels", f.fusion, "fusion head width");
    cmd->add_flag("--no-augment", f.no_augment, "disable flip/rotation augmentation");
}

RunConfig build_run_config(const TrainFlags& f) {
    RunConfig cfg = f.preset == "paper" ? RunConfig::paper_defaults() : RunConfig::desk_defaults();
    if (!f.config.empty()) cfg = load_run_config(f.config);
    if (!f.mode.empty()) cfg.mode = mode_from_string(f.mode);
    if (f.epochs >= 0) cfg.epochs = f.epochs;
    if (f.batch > 0) cfg.batch_size = f.batch;
    if (f.base_size > 0) cfg.base_size = f.base_size;
    if (!f.scales.empty()) cfg.scale_set = parse_scale_list(f.scales);
    if (f.lr > 0) cfg.lr = f.lr;
    if (f.weight_decay >= 0) cfg.weight_decay = f.weight_decay;
    if (f.seed >= 0) cfg.seed = static_cast<uint64_t>(f.seed);
    if (f.threads >= 0) cfg.threads = f.threads;
    if (f.no_augment) cfg.augment = false;
    if (!f.enc_channels.empty())
        std::copy(f.enc_channels.begin(), f.enc_channels.end(), cfg.model.encoder_channels.begin());
    if (f.fusion > 0) cfg.model.fusion_channels = f.fusion;
    if (!f.out.empty()) cfg.out_dir = f.out;
    cfg.model.input_size = cfg.base_size;
    return cfg;
}

std::vector<Sample> load_or_fail(const std::string& root) {
    LoadReport report;
    std::vector<Sample> samples = load_directory(root, &report);
    for (size_t i = 0; i < report.skipped.size(); ++i)
        std::cerr << "warning: skipped " << report.skipped[i] << ": " << report.messages[i] << "\n";
    if (samples.empty()) throw std::invalid_argument("no loadable samples under " + root);
    return samples;
}

int cmd_synth(const std::string& out_dir, SynthConfig cfg, bool boxes_only) {
    std::vector<Sample> samples = generate_synthetic(cfg);
    if (boxes_only)
        for (Sample& s : samples) s.gt_mask.reset();
    write_dataset(out_dir, samples);
    std::cout << "wrote " << samples.size() << " samples to " << out_dir
              << (boxes_only ? " (boxes only)" : " (with masks)") << "\n";
    return 0;
}

int cmd_train(const TrainFlags& f) {
    const RunConfig cfg = build_run_config(f);
    const std::vector<Sample> ds = load_or_fail(f.data);
    std::optional<std::vector<Sample>> val;
    if (!f.val.empty()) val = load_or_fail(f.val);

    std::cout << "training mode=" << to_string(cfg.mode) << " s1=" << cfg.base_size
              << " epochs=" << cfg.epochs << " lr=" << cfg.lr << " batch=" << cfg.batch_size
              << " seed=" << cfg.seed << " samples=" << ds.size() << "\n";
    const TrainState state = train(ds, cfg, val ? &*val : nullptr);
    for (const EpochStats& es : state.history) {
        std::cout << "epoch " << es.epoch << " total=" << es.mean_loss.total;
        if (es.val_dice >= 0) std::cout << " val_dice=" << es.val_dice;
        std::cout << "\n";
    }
    if (!cfg.out_dir.empty())
        std::cout << "final checkpoint: " << (fs::path(cfg.out_dir) / "final.ckpt").string() << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& split,
             const std::string& out_csv, double threshold) {
    const TrainState state = load_checkpoint(ckpt);
    const std::vector<Sample> ds = load_or_fail(data);
    const MetricRow row = evaluate(state, ds, split, threshold);
    std::cout << "split=" << row.dataset_split << " mode=" << row.mode << " dice=" << row.dice
              << " iou=" << row.iou << " n=" << row.n_images << "\n";
    if (!out_csv.empty()) write_metric_csv(out_csv, {row});
    return 0;
}

int cmd_ablate(const TrainFlags& f, const std::string& test_dir, const std::string& table_out) {
    const std::vector<Sample> ds = load_or_fail(f.data);
    const std::vector<Sample> test = load_or_fail(test_dir);

    // Table rows in ablation order; all runs share seed and budget.
    const std::pair<SupervisionMode, std::string> rows[3] = {
        {SupervisionMode::NaiveBox, "Base"},
        {SupervisionMode::M2bOnly, "Base+M2B"},
        {SupervisionMode::Weak, "Base+M2B+SC"},
    };
    std::vector<MetricRow> results;
    std::ostringstream table;
    table << "modules,mode,dice,iou,n\n";
    for (const auto& [mode, label] : rows) {
        RunConfig cfg = build_run_config(f);
        cfg.mode = mode;
        if (!f.out.empty()) cfg.out_dir = (fs::path(f.out) / to_string(mode)).string();
        std::cout << "ablate: training " << label << " (" << to_string(mode) << ")\n";
        const TrainState state = train(ds, cfg, nullptr);
        const MetricRow row = evaluate(state, test, "test");
        results.push_back(row);
        table << label << "," << row.mode << "," << row.dice << "," << row.iou << ","
              << row.n_images << "\n";
    }
    std::cout << table.str();
    if (!table_out.empty()) {
        std::ofstream out(table_out);
        if (!out) throw std::runtime_error("ablate: cannot open " + table_out);
        out << table.str();
    }
    return 0;
}

int cmd_predict(const std::string& ckpt, const std::string& images, const std::string& out_dir) {
    const TrainState state = load_checkpoint(ckpt);
    fs::path img_dir(images);
    if (fs::is_directory(img_dir / "images")) img_dir /= "images";
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(img_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw std::invalid_argument("predict: no .ppm images under " + images);

    fs::create_directories(out_dir);
    for (const std::string& id : ids) {
        const nn::Tensor3 image = read_ppm(img_dir / (id + ".ppm"));
        const Grid prob = infer(image, state);
        write_pgm(fs::path(out_dir) / (id + ".pgm"), prob);
    }
    std::cout << "wrote " << ids.size() << " masks to " << out_dir << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"box-supervised segmentation toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic blob dataset");
    std::string synth_out;
    SynthConfig synth_cfg;
    bool boxes_only = false;
    long long synth_seed = 0;
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--count", synth_cfg.count, "number of samples");
    synth->add_option("--image-size", synth_cfg.image_size, "square image size (multiple of 32)");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--blob-min", synth_cfg.blob_count_range.first, "min blobs per image");
    synth->add_option("--blob-max", synth_cfg.blob_count_range.second, "max blobs per image");
    synth->add_option("--scale-min", synth_cfg.blob_scale_range.first, "min blob diameter fraction");
    synth->add_option("--scale-max", synth_cfg.blob_scale_range.second, "max blob diameter fraction");
    synth->add_option("--noise", synth_cfg.texture_noise, "texture noise amplitude");
    synth->add_option("--contrast", synth_cfg.contrast, "foreground/background separation");
    synth->add_flag("--boxes-only", boxes_only, "omit masks/ (box annotations only)");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a segmenter");
    TrainFlags train_flags;
    add_train_options(train_cmd, train_flags, true);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_ckpt, eval_data, eval_split = "test", eval_csv;
    double eval_threshold = 0.5;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "dataset root with masks/")->required();
    eval_cmd->add_option("--split", eval_split, "split label for the report");
    eval_cmd->add_option("--out", eval_csv, "metrics CSV path");
    eval_cmd->add_option("--threshold", eval_threshold, "binarization threshold");

    // ablate
    auto* ablate_cmd = app.add_subcommand(
        "ablate", "train Base / Base+M2B / Base+M2B+SC with a shared seed and compare");
    TrainFlags ablate_flags;
    add_train_options(ablate_cmd, ablate_flags, false);
    std::string ablate_test, ablate_table;
    ablate_cmd->add_option("--test", ablate_test, "held-out dataset root with masks/")->required();
    ablate_cmd->add_option("--table", ablate_table, "comparison table CSV path");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "write probability masks for a directory");
    std::string pred_ckpt, pred_images, pred_out;
    predict_cmd->add_option("--checkpoint", pred_ckpt, "checkpoint file")->required();
    predict_cmd->add_option("--images", pred_images, "image directory or dataset root")->required();
    predict_cmd->add_option("--out", pred_out, "output mask directory")->required();

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, returns 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) {
            synth_cfg.seed = static_cast<uint64_t>(synth_seed);
            return cmd_synth(synth_out, synth_cfg, boxes_only);
        }
        if (train_cmd->parsed()) return cmd_train(train_flags);
        if (eval_cmd->parsed())
            return cmd_eval(eval_ckpt, eval_data, eval_split, eval_csv, eval_threshold);
        if (ablate_cmd->parsed()) return cmd_ablate(ablate_flags, ablate_test, ablate_table);
        if (predict_cmd->parsed()) return cmd_predict(pred_ckpt, pred_images, pred_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace boxseg
