#pragma once

#include "boxseg/grid.hpp"

namespace boxseg {

// Integer set counts of a thresholded prediction against a binary ground
// truth. union = pred + gt - intersection.
struct MetricCounts {
    long long intersection = 0;
    long long pred = 0;
    long long gt = 0;
    long long unions() const { return pred + gt - intersection; }
};

MetricCounts metric_counts(const ProbMask& pred, const Grid& gt, double threshold = 0.5);

// 2|P∩G| / (|P|+|G|); 1 when both sets are empty.
double dice_metric(const ProbMask& pred, const Grid& gt, double threshold = 0.5);

// |P∩G| / |P∪G|; 1 when both sets are empty.
double iou_metric(const ProbMask& pred, const Grid& gt, double threshold = 0.5);

double dice_from_counts(const MetricCounts& c);
double iou_from_counts(const MetricCounts& c);

}  // namespace boxseg
