#pragma once

#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxseg {

// Thrown whenever an operation receives grids/profiles of incompatible or
// degenerate shape.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Dense row-major H×W grid of doubles. Probability masks, ground-truth masks
// and box masks are all grids; probability masks additionally keep every
// value inside [0,1].
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, double fill = 0.0)
        : height_(height), width_(width) {
        if (height < 1 || width < 1)
            throw DimensionError("Grid: dimensions must be >= 1, got " +
                                 std::to_string(height) + "x" + std::to_string(width));
        v_.assign(static_cast<size_t>(height) * width, fill);
    }

    static Grid from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const int h = static_cast<int>(rows.size());
        const int w = h > 0 ? static_cast<int>(rows.begin()->size()) : 0;
        Grid g(h, w);
        int r = 0;
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != w)
                throw DimensionError("Grid::from_rows: ragged rows");
            int c = 0;
            for (double x : row) g(r, c++) = x;
            ++r;
        }
        return g;
    }

    int height() const { return height_; }
    int width() const { return width_; }
    bool empty() const { return v_.empty(); }
    size_t size() const { return v_.size(); }

    double& operator()(int r, int c) { return v_[static_cast<size_t>(r) * width_ + c]; }
    double operator()(int r, int c) const { return v_[static_cast<size_t>(r) * width_ + c]; }
    double& operator[](size_t i) { return v_[i]; }
    double operator[](size_t i) const { return v_[i]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    bool same_shape(const Grid& o) const { return height_ == o.height_ && width_ == o.width_; }

    bool operator==(const Grid& o) const {
        return height_ == o.height_ && width_ == o.width_ && v_ == o.v_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> v_;
};

// A probability mask is a Grid whose values live in [0,1].
using ProbMask = Grid;

inline void require_same_shape(const Grid& a, const Grid& b, const char* where) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(where) + ": shape mismatch " +
                             std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
                             std::to_string(b.height()) + "x" + std::to_string(b.width()));
}

inline void require_nonempty(const Grid& g, const char* where) {
    if (g.empty())
        throw DimensionError(std::string(where) + ": empty (zero-area) mask");
}

inline bool in_unit_range(const Grid& g) {
    for (size_t i = 0; i < g.size(); ++i)
        if (!(g[i] >= 0.0 && g[i] <= 1.0)) return false;
    return true;
}

}  // namespace boxseg
