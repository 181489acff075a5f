#include "boxseg/m2b.hpp"

namespace boxseg {

namespace {

void require_prob(const ProbMask& mask, const char* where) {
    require_nonempty(mask, where);
    if (!in_unit_range(mask))
        throw std::invalid_argument(std::string(where) + ": mask values must lie in [0,1]");
}

}  // namespace

ProjectionPair project(const ProbMask& mask) {
    require_prob(mask, "project");
    const int h = mask.height(), w = mask.width();
    ProjectionPair out;
    out.row_profile.assign(w, 0.0);
    out.col_profile.assign(h, 0.0);
    for (int r = 0; r < h; ++r) {
        const double* row = mask.data() + static_cast<size_t>(r) * w;
        double row_max = row[0];
        for (int c = 0; c < w; ++c) {
            if (row[c] > row_max) row_max = row[c];
            if (row[c] > out.row_profile[c]) out.row_profile[c] = row[c];
        }
        out.col_profile[r] = row_max;
    }
    return out;
}

ProbMask back_project(const ProjectionPair& proj, int height, int width) {
    if (height < 1 || width < 1)
        throw DimensionError("back_project: target dimensions must be >= 1");
    if (static_cast<int>(proj.row_profile.size()) != width ||
        static_cast<int>(proj.col_profile.size()) != height)
        throw DimensionError("back_project: profile lengths " +
                             std::to_string(proj.row_profile.size()) + "/" +
                             std::to_string(proj.col_profile.size()) +
                             " do not match target " + std::to_string(height) + "x" +
                             std::to_string(width));
    ProbMask out(height, width);
    for (int r = 0; r < height; ++r) {
        const double cr = proj.col_profile[r];
        double* row = out.data() + static_cast<size_t>(r) * width;
        for (int c = 0; c < width; ++c) {
            const double rc = proj.row_profile[c];
            row[c] = rc < cr ? rc : cr;
        }
    }
    return out;
}

ProbMask m2b(const ProbMask& mask) {
    return back_project(project(mask), mask.height(), mask.width());
}

Grid m2b_backward(const ProbMask& mask, const Grid& upstream_grad) {
    require_prob(mask, "m2b_backward");
    require_same_shape(mask, upstream_grad, "m2b_backward");
    const int h = mask.height(), w = mask.width();

    // First-index argmax per column (row profile) and per row (col profile).
    std::vector<double> row_profile(w), col_profile(h);
    std::vector<int> argmax_row(w), argmax_col(h);
    for (int c = 0; c < w; ++c) {
        row_profile[c] = mask(0, c);
        argmax_row[c] = 0;
    }
    for (int r = 0; r < h; ++r) {
        double best = mask(r, 0);
        int best_c = 0;
        for (int c = 0; c < w; ++c) {
            const double x = mask(r, c);
            if (x > best) {
                best = x;
                best_c = c;
            }
            if (x > row_profile[c]) {
                row_profile[c] = x;
                argmax_row[c] = r;
            }
        }
        col_profile[r] = best;
        argmax_col[r] = best_c;
    }

    Grid grad(h, w, 0.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double g = upstream_grad(r, c);
            if (g == 0.0) continue;
            // min(row_profile[c], col_profile[r]); ties go to the row profile.
            if (row_profile[c] <= col_profile[r])
                grad(argmax_row[c], c) += g;
            else
                grad(r, argmax_col[r]) += g;
        }
    }
    return grad;
}

}  // namespace boxseg
