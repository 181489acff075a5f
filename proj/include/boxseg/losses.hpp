#pragma once

#include "boxseg/grid.hpp"

#include <vector>

namespace boxseg {

// Axis-aligned box with inclusive integer pixel coordinates.
struct Box {
    int row_min = 0;
    int col_min = 0;
    int row_max = 0;
    int col_max = 0;

    bool operator==(const Box&) const = default;
};

// Binary mask equal to 1 inside the union of the annotated boxes.
struct BoxMask {
    Grid values;             // H×W, 0 or 1
    std::vector<Box> boxes;  // inclusive coordinates, each inside the grid

    // Rasterize a box set into its union mask. Validates box bounds.
    static BoxMask render(int height, int width, const std::vector<Box>& boxes);
};

struct LossReport {
    double bce = 0.0;       // mean of the per-branch BCE terms
    double dice = 0.0;      // mean of the per-branch Dice terms
    double sum_loss = 0.0;  // bce + dice
    double sc = 0.0;        // scale-consistency term
    double total = 0.0;     // sum_loss + sc, unweighted
    bool empty_box = false; // sc was skipped because the box mask had no interior pixel
};

inline constexpr double kBceClampEps = 1e-7;
inline constexpr double kDiceSmooth = 1.0;

// Mean binary cross entropy over all pixels, probabilities clamped to
// [kBceClampEps, 1-kBceClampEps].
double bce_loss(const ProbMask& pred, const Grid& target);
double bce_loss(const ProbMask& pred, const BoxMask& target);

// 1 - (2*sum(p*t) + eps) / (sum(p) + sum(t) + eps), eps = kDiceSmooth.
double dice_loss(const ProbMask& pred, const Grid& target);
double dice_loss(const ProbMask& pred, const BoxMask& target);

// Mean of the two BCE terms plus mean of the two Dice terms; t1/t2 are the
// box-like masks of the two scale branches.
double sum_loss(const ProbMask& t1, const ProbMask& t2, const BoxMask& b);

// Mean absolute difference |p1 - p2| over exactly the pixels where b = 1.
// An empty box mask yields 0.
double sc_loss(const ProbMask& p1, const ProbMask& p2, const BoxMask& b);

// Full objective: T1 = m2b(p1), T2 = m2b(p2), sum_loss(T1,T2,b) plus
// sc_loss(p1,p2,b) on the raw predictions.
LossReport total_loss(const ProbMask& p1, const ProbMask& p2, const BoxMask& b);

// Gradients of the scalar losses with respect to pred, using the same mean
// reductions as the forward passes.
Grid bce_loss_grad(const ProbMask& pred, const Grid& target);
Grid dice_loss_grad(const ProbMask& pred, const Grid& target);

struct TotalLossGrads {
    LossReport report;
    Grid d_p1;
    Grid d_p2;
};

// total_loss together with d(total)/d(p1) and d(total)/d(p2); the sum-loss
// part backpropagates through m2b, the sc part acts on the raw predictions.
TotalLossGrads total_loss_with_grads(const ProbMask& p1, const ProbMask& p2, const BoxMask& b);

// Same supervision with the sc term optionally dropped (ablation training).
TotalLossGrads box_supervision_with_grads(const ProbMask& p1, const ProbMask& p2, const BoxMask& b,
                                          bool with_sc);

}  // namespace boxseg
