#pragma once

#include "boxseg/data.hpp"
#include "boxseg/metrics.hpp"
#include "boxseg/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace boxseg {

struct MetricRow {
    std::string dataset_split;
    std::string mode;
    double dice = 0.0;
    double iou = 0.0;
    int n_images = 0;
};

// Mean of per-image Dice/IoU over the split; every sample needs a gt mask.
MetricRow evaluate(const TrainState& state, const std::vector<Sample>& dataset,
                   const std::string& split_name, double threshold = 0.5);

// CSV with header split,mode,dice,iou,n
void write_metric_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

}  // namespace boxseg
