#include "boxseg/metrics.hpp"

namespace boxseg {

MetricCounts metric_counts(const ProbMask& pred, const Grid& gt, double threshold) {
    require_nonempty(pred, "metric_counts");
    require_same_shape(pred, gt, "metric_counts");
    MetricCounts c;
    for (size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] >= threshold;
        const bool g = gt[i] != 0.0;
        c.pred += p;
        c.gt += g;
        c.intersection += p && g;
    }
    return c;
}

double dice_from_counts(const MetricCounts& c) {
    if (c.pred + c.gt == 0) return 1.0;
    return 2.0 * static_cast<double>(c.intersection) / static_cast<double>(c.pred + c.gt);
}

double iou_from_counts(const MetricCounts& c) {
    if (c.unions() == 0) return 1.0;
    return static_cast<double>(c.intersection) / static_cast<double>(c.unions());
}

double dice_metric(const ProbMask& pred, const Grid& gt, double threshold) {
    return dice_from_counts(metric_counts(pred, gt, threshold));
}

double iou_metric(const ProbMask& pred, const Grid& gt, double threshold) {
    return iou_from_counts(metric_counts(pred, gt, threshold));
}

}  // namespace boxseg
