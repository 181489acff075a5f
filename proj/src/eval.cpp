#include "boxseg/eval.hpp"

#include <fstream>
#include <iomanip>

namespace boxseg {

MetricRow evaluate(const TrainState& state, const std::vector<Sample>& dataset,
                   const std::string& split_name, double threshold) {
    if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
    for (const Sample& s : dataset)
        if (!s.gt_mask)
            throw std::invalid_argument("evaluate: sample " + s.id +
                                        " has no gt_mask; evaluation needs dense annotations");

    double dice_sum = 0.0, iou_sum = 0.0;
    for (const Sample& s : dataset) {
        const Grid pred = infer(s.image, state);
        const MetricCounts c = metric_counts(pred, *s.gt_mask, threshold);
        dice_sum += dice_from_counts(c);
        iou_sum += iou_from_counts(c);
    }

    MetricRow row;
    row.dataset_split = split_name;
    row.mode = to_string(state.cfg.mode);
    row.n_images = static_cast<int>(dataset.size());
    row.dice = dice_sum / row.n_images;
    row.iou = iou_sum / row.n_images;
    return row;
}

void write_metric_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_metric_csv: cannot open " + path.string());
    out << "split,mode,dice,iou,n\n";
    out << std::fixed << std::setprecision(6);
    for (const MetricRow& r : rows)
        out << r.dataset_split << "," << r.mode << "," << r.dice << "," << r.iou << ","
            << r.n_images << "\n";
}

}  // namespace boxseg
