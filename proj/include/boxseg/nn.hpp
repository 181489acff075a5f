#pragma once

#include "boxseg/grid.hpp"
#include "boxseg/rng.hpp"

#include <string>
#include <vector>

namespace boxseg::nn {

// Dense C×H×W tensor, row-major within each channel.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w), v(static_cast<size_t>(c) * h * w, fill) {
        if (c < 1 || h < 1 || w < 1)
            throw DimensionError("Tensor3: dimensions must be >= 1");
    }

    size_t plane() const { return static_cast<size_t>(height) * width; }
    size_t size() const { return v.size(); }
    double* ch(int c) { return v.data() + c * plane(); }
    const double* ch(int c) const { return v.data() + c * plane(); }
    double& at(int c, int y, int x) { return v[c * plane() + static_cast<size_t>(y) * width + x]; }
    double at(int c, int y, int x) const {
        return v[c * plane() + static_cast<size_t>(y) * width + x];
    }

    bool same_shape(const Tensor3& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

Grid tensor_to_grid(const Tensor3& t);   // requires channels == 1
Tensor3 grid_to_tensor(const Grid& g);

// Convolution layer with square kernel, fixed stride and zero padding.
// Weights are laid out [out][in][ky][kx].
struct Conv {
    std::string name;
    int in_ch = 0, out_ch = 0, ksize = 1, stride = 1, pad = 0;
    std::vector<double> w;
    std::vector<double> b;

    Conv() = default;
    Conv(std::string name, int in_ch, int out_ch, int ksize, int stride, int pad);

    // He-normal weights, zero biases.
    void init(Rng& rng);

    int out_size(int in_size) const { return (in_size + 2 * pad - ksize) / stride + 1; }
    size_t weight_count() const {
        return static_cast<size_t>(out_ch) * in_ch * ksize * ksize;
    }
};

// Gradient buffers matching one Conv's parameters.
struct ConvGrad {
    std::vector<double> w;
    std::vector<double> b;
    void resize_like(const Conv& c) {
        w.assign(c.weight_count(), 0.0);
        b.assign(static_cast<size_t>(c.out_ch), 0.0);
    }
};

Tensor3 conv_forward(const Conv& conv, const Tensor3& in);
// Accumulates into grad.w/grad.b; writes d(loss)/d(in) into grad_in.
void conv_backward(const Conv& conv, const Tensor3& in, const Tensor3& grad_out,
                   Tensor3& grad_in, ConvGrad& grad);

Tensor3 relu_forward(const Tensor3& in);
Tensor3 relu_backward(const Tensor3& in, const Tensor3& grad_out);

// Bilinear resize, half-pixel-centre convention, clamped at borders.
// Resizing to the identical size is an exact identity.
Tensor3 bilinear_resize(const Tensor3& in, int out_h, int out_w);
Tensor3 bilinear_resize_backward(const Tensor3& grad_out, int in_h, int in_w);
Grid bilinear_resize(const Grid& in, int out_h, int out_w);
Grid bilinear_resize_backward(const Grid& grad_out, int in_h, int in_w);

// Nearest-neighbour resize for binary masks (keeps values binary).
Grid nearest_resize(const Grid& in, int out_h, int out_w);

Grid sigmoid(const Grid& logits);
// d(loss)/d(logits) from d(loss)/d(prob) and the forward probabilities.
Grid sigmoid_backward(const Grid& prob, const Grid& grad_prob);

}  // namespace boxseg::nn
