#pragma once

#include "boxseg/grid.hpp"

#include <vector>

namespace boxseg {

// Per-axis max profiles of a mask. row_profile[c] is the maximum of column c
// (taken over rows); col_profile[r] is the maximum of row r (taken over
// columns).
struct ProjectionPair {
    std::vector<double> row_profile;  // length W
    std::vector<double> col_profile;  // length H
};

// Max-project a mask horizontally and vertically. Max pooling, never mean:
// the profiles keep only the position and extent of the foreground, not its
// shape. Rejects empty masks and values outside [0,1].
ProjectionPair project(const ProbMask& mask);

// Rebuild an H×W mask from the two profiles: out[r,c] = min(row_profile[c],
// col_profile[r]). Equivalent to broadcasting both profiles to H×W and taking
// the elementwise minimum.
ProbMask back_project(const ProjectionPair& proj, int height, int width);

// Mask-to-box transform: back_project(project(mask)). The result T dominates
// the input (T >= P everywhere), is idempotent, and leaves binary
// axis-aligned rectangles unchanged.
ProbMask m2b(const ProbMask& mask);

// Gradient of m2b at `mask` applied to `upstream_grad` (a vector-Jacobian
// product). Each output cell routes its gradient through the min selection to
// the smaller profile and from there to the argmax pixel of that row/column.
// Ties: the min prefers the row profile; the argmax prefers the smallest
// index. Both choices are deterministic.
Grid m2b_backward(const ProbMask& mask, const Grid& upstream_grad);

}  // namespace boxseg
