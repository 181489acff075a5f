#include "boxseg/losses.hpp"

#include "boxseg/m2b.hpp"

#include <cmath>

namespace boxseg {

BoxMask BoxMask::render(int height, int width, const std::vector<Box>& boxes) {
    if (height < 1 || width < 1)
        throw DimensionError("BoxMask::render: dimensions must be >= 1");
    BoxMask out;
    out.values = Grid(height, width, 0.0);
    out.boxes = boxes;
    for (const Box& b : boxes) {
        if (b.row_min < 0 || b.col_min < 0 || b.row_min > b.row_max || b.col_min > b.col_max ||
            b.row_max >= height || b.col_max >= width)
            throw std::invalid_argument("BoxMask::render: box out of bounds");
        for (int r = b.row_min; r <= b.row_max; ++r)
            for (int c = b.col_min; c <= b.col_max; ++c) out.values(r, c) = 1.0;
    }
    return out;
}

namespace {

inline double clamp_prob(double p) {
    if (p < kBceClampEps) return kBceClampEps;
    if (p > 1.0 - kBceClampEps) return 1.0 - kBceClampEps;
    return p;
}

}  // namespace

double bce_loss(const ProbMask& pred, const Grid& target) {
    require_nonempty(pred, "bce_loss");
    require_same_shape(pred, target, "bce_loss");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double p = clamp_prob(pred[i]);
        const double t = target[i];
        acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    return acc / static_cast<double>(pred.size());
}

double bce_loss(const ProbMask& pred, const BoxMask& target) {
    return bce_loss(pred, target.values);
}

double dice_loss(const ProbMask& pred, const Grid& target) {
    require_nonempty(pred, "dice_loss");
    require_same_shape(pred, target, "dice_loss");
    double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        inter += pred[i] * target[i];
        sum_p += pred[i];
        sum_t += target[i];
    }
    return 1.0 - (2.0 * inter + kDiceSmooth) / (sum_p + sum_t + kDiceSmooth);
}

double dice_loss(const ProbMask& pred, const BoxMask& target) {
    return dice_loss(pred, target.values);
}

double sum_loss(const ProbMask& t1, const ProbMask& t2, const BoxMask& b) {
    return 0.5 * (bce_loss(t1, b.values) + bce_loss(t2, b.values)) +
           0.5 * (dice_loss(t1, b.values) + dice_loss(t2, b.values));
}

double sc_loss(const ProbMask& p1, const ProbMask& p2, const BoxMask& b) {
    require_nonempty(p1, "sc_loss");
    require_same_shape(p1, p2, "sc_loss");
    require_same_shape(p1, b.values, "sc_loss");
    double acc = 0.0;
    long long n = 0;
    for (size_t i = 0; i < p1.size(); ++i) {
        if (b.values[i] == 1.0) {
            acc += std::abs(p1[i] - p2[i]);
            ++n;
        }
    }
    if (n == 0) return 0.0;
    return acc / static_cast<double>(n);
}

LossReport total_loss(const ProbMask& p1, const ProbMask& p2, const BoxMask& b) {
    const ProbMask t1 = m2b(p1);
    const ProbMask t2 = m2b(p2);
    LossReport rep;
    rep.bce = 0.5 * (bce_loss(t1, b.values) + bce_loss(t2, b.values));
    rep.dice = 0.5 * (dice_loss(t1, b.values) + dice_loss(t2, b.values));
    rep.sum_loss = rep.bce + rep.dice;
    rep.empty_box = true;
    for (size_t i = 0; i < b.values.size() && rep.empty_box; ++i)
        if (b.values[i] == 1.0) rep.empty_box = false;
    rep.sc = sc_loss(p1, p2, b);
    rep.total = rep.sum_loss + rep.sc;
    return rep;
}

Grid bce_loss_grad(const ProbMask& pred, const Grid& target) {
    require_nonempty(pred, "bce_loss_grad");
    require_same_shape(pred, target, "bce_loss_grad");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    Grid g(pred.height(), pred.width());
    for (size_t i = 0; i < pred.size(); ++i) {
        const double p = pred[i];
        if (p < kBceClampEps || p > 1.0 - kBceClampEps) {
            g[i] = 0.0;  // clamp is flat
            continue;
        }
        const double t = target[i];
        g[i] = inv_n * (-t / p + (1.0 - t) / (1.0 - p));
    }
    return g;
}

Grid dice_loss_grad(const ProbMask& pred, const Grid& target) {
    require_nonempty(pred, "dice_loss_grad");
    require_same_shape(pred, target, "dice_loss_grad");
    double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        inter += pred[i] * target[i];
        sum_p += pred[i];
        sum_t += target[i];
    }
    const double denom = sum_p + sum_t + kDiceSmooth;
    const double numer = 2.0 * inter + kDiceSmooth;
    Grid g(pred.height(), pred.width());
    for (size_t i = 0; i < pred.size(); ++i)
        g[i] = (numer - 2.0 * target[i] * denom) / (denom * denom);
    return g;
}

TotalLossGrads box_supervision_with_grads(const ProbMask& p1, const ProbMask& p2, const BoxMask& b,
                                          bool with_sc) {
    TotalLossGrads out;
    const ProbMask t1 = m2b(p1);
    const ProbMask t2 = m2b(p2);

    out.report.bce = 0.5 * (bce_loss(t1, b.values) + bce_loss(t2, b.values));
    out.report.dice = 0.5 * (dice_loss(t1, b.values) + dice_loss(t2, b.values));
    out.report.sum_loss = out.report.bce + out.report.dice;

    long long n_box = 0;
    for (size_t i = 0; i < b.values.size(); ++i)
        if (b.values[i] == 1.0) ++n_box;
    out.report.empty_box = n_box == 0;
    out.report.sc = with_sc ? sc_loss(p1, p2, b) : 0.0;
    out.report.total = out.report.sum_loss + out.report.sc;

    // Branch gradients through m2b.
    auto branch_grad = [&](const ProbMask& p, const ProbMask& t) {
        Grid d_t = bce_loss_grad(t, b.values);
        const Grid d_dice = dice_loss_grad(t, b.values);
        for (size_t i = 0; i < d_t.size(); ++i) d_t[i] = 0.5 * (d_t[i] + d_dice[i]);
        return m2b_backward(p, d_t);
    };
    out.d_p1 = branch_grad(p1, t1);
    out.d_p2 = branch_grad(p2, t2);

    // SC acts on the raw predictions, restricted to box pixels.
    if (with_sc && n_box > 0) {
        const double inv = 1.0 / static_cast<double>(n_box);
        for (size_t i = 0; i < p1.size(); ++i) {
            if (b.values[i] != 1.0) continue;
            const double d = p1[i] - p2[i];
            const double s = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
            out.d_p1[i] += s;
            out.d_p2[i] -= s;
        }
    }
    return out;
}

TotalLossGrads total_loss_with_grads(const ProbMask& p1, const ProbMask& p2, const BoxMask& b) {
    return box_supervision_with_grads(p1, p2, b, true);
}

}  // namespace boxseg
