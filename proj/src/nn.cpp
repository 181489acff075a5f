#include "boxseg/nn.hpp"

#include <cmath>
#include <utility>

namespace boxseg::nn {

Grid tensor_to_grid(const Tensor3& t) {
    if (t.channels != 1) throw DimensionError("tensor_to_grid: expected a single channel");
    Grid g(t.height, t.width);
    for (size_t i = 0; i < g.size(); ++i) g[i] = t.v[i];
    return g;
}

Tensor3 grid_to_tensor(const Grid& g) {
    require_nonempty(g, "grid_to_tensor");
    Tensor3 t(1, g.height(), g.width());
    for (size_t i = 0; i < t.size(); ++i) t.v[i] = g[i];
    return t;
}

Conv::Conv(std::string name_, int in_ch_, int out_ch_, int ksize_, int stride_, int pad_)
    : name(std::move(name_)), in_ch(in_ch_), out_ch(out_ch_), ksize(ksize_), stride(stride_),
      pad(pad_) {
    if (in_ch < 1 || out_ch < 1 || ksize < 1 || stride < 1 || pad < 0)
        throw std::invalid_argument("Conv: invalid configuration for layer " + name);
    w.assign(weight_count(), 0.0);
    b.assign(static_cast<size_t>(out_ch), 0.0);
}

void Conv::init(Rng& rng) {
    const double fan_in = static_cast<double>(in_ch) * ksize * ksize;
    const double std_dev = std::sqrt(2.0 / fan_in);
    for (double& x : w) x = rng.normal() * std_dev;
    const double bound = 1.0 / std::sqrt(fan_in);
    for (double& x : b) x = rng.uniform(-bound, bound);
}

Tensor3 conv_forward(const Conv& conv, const Tensor3& in) {
    if (in.channels != conv.in_ch)
        throw DimensionError("conv_forward(" + conv.name + "): channel mismatch");
    const int oh = conv.out_size(in.height);
    const int ow = conv.out_size(in.width);
    if (oh < 1 || ow < 1)
        throw DimensionError("conv_forward(" + conv.name + "): input too small");
    Tensor3 out(conv.out_ch, oh, ow);
    const int k = conv.ksize, s = conv.stride, p = conv.pad;

    for (int o = 0; o < conv.out_ch; ++o) {
        double* op = out.ch(o);
        for (size_t i = 0; i < out.plane(); ++i) op[i] = conv.b[o];
        for (int i = 0; i < conv.in_ch; ++i) {
            const double* ip = in.ch(i);
            const double* wk = conv.w.data() + (static_cast<size_t>(o) * conv.in_ch + i) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const double wv = wk[ky * k + kx];
                    if (wv == 0.0) continue;
                    for (int y = 0; y < oh; ++y) {
                        const int sy = y * s + ky - p;
                        if (sy < 0 || sy >= in.height) continue;
                        const double* irow = ip + static_cast<size_t>(sy) * in.width;
                        double* orow = op + static_cast<size_t>(y) * ow;
                        for (int x = 0; x < ow; ++x) {
                            const int sx = x * s + kx - p;
                            if (sx < 0 || sx >= in.width) continue;
                            orow[x] += wv * irow[sx];
                        }
                    }
                }
            }
        }
    }
    return out;
}

void conv_backward(const Conv& conv, const Tensor3& in, const Tensor3& grad_out,
                   Tensor3& grad_in, ConvGrad& grad) {
    const int oh = conv.out_size(in.height);
    const int ow = conv.out_size(in.width);
    if (grad_out.channels != conv.out_ch || grad_out.height != oh || grad_out.width != ow)
        throw DimensionError("conv_backward(" + conv.name + "): grad_out shape mismatch");
    if (grad.w.size() != conv.weight_count()) grad.resize_like(conv);
    grad_in = Tensor3(in.channels, in.height, in.width, 0.0);
    const int k = conv.ksize, s = conv.stride, p = conv.pad;

    for (int o = 0; o < conv.out_ch; ++o) {
        const double* gp = grad_out.ch(o);
        double bacc = 0.0;
        for (size_t i = 0; i < grad_out.plane(); ++i) bacc += gp[i];
        grad.b[o] += bacc;

        for (int i = 0; i < conv.in_ch; ++i) {
            const double* ip = in.ch(i);
            double* gip = grad_in.ch(i);
            const size_t wbase = (static_cast<size_t>(o) * conv.in_ch + i) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const double wv = conv.w[wbase + ky * k + kx];
                    double wacc = 0.0;
                    for (int y = 0; y < oh; ++y) {
                        const int sy = y * s + ky - p;
                        if (sy < 0 || sy >= in.height) continue;
                        const double* irow = ip + static_cast<size_t>(sy) * in.width;
                        double* girow = gip + static_cast<size_t>(sy) * in.width;
                        const double* grow = gp + static_cast<size_t>(y) * ow;
                        for (int x = 0; x < ow; ++x) {
                            const int sx = x * s + kx - p;
                            if (sx < 0 || sx >= in.width) continue;
                            const double g = grow[x];
                            wacc += g * irow[sx];
                            girow[sx] += g * wv;
                        }
                    }
                    grad.w[wbase + ky * k + kx] += wacc;
                }
            }
        }
    }
}

Tensor3 relu_forward(const Tensor3& in) {
    Tensor3 out = in;
    for (double& x : out.v)
        if (x < 0.0) x = 0.0;
    return out;
}

Tensor3 relu_backward(const Tensor3& in, const Tensor3& grad_out) {
    if (!in.same_shape(grad_out)) throw DimensionError("relu_backward: shape mismatch");
    Tensor3 g = grad_out;
    for (size_t i = 0; i < g.size(); ++i)
        if (in.v[i] <= 0.0) g.v[i] = 0.0;
    return g;
}

namespace {

struct AxisWeights {
    std::vector<int> lo, hi;
    std::vector<double> frac;  // weight of hi
};

AxisWeights axis_weights(int in_size, int out_size) {
    AxisWeights aw;
    aw.lo.resize(out_size);
    aw.hi.resize(out_size);
    aw.frac.resize(out_size);
    const double scale = static_cast<double>(in_size) / out_size;
    for (int o = 0; o < out_size; ++o) {
        double src = (o + 0.5) * scale - 0.5;
        if (src < 0.0) src = 0.0;
        if (src > in_size - 1) src = in_size - 1;
        const int lo = static_cast<int>(src);
        aw.lo[o] = lo;
        aw.hi[o] = lo + 1 < in_size ? lo + 1 : lo;
        aw.frac[o] = src - lo;
    }
    return aw;
}

}  // namespace

Tensor3 bilinear_resize(const Tensor3& in, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw DimensionError("bilinear_resize: bad target size");
    if (out_h == in.height && out_w == in.width) return in;
    const AxisWeights ay = axis_weights(in.height, out_h);
    const AxisWeights ax = axis_weights(in.width, out_w);
    Tensor3 out(in.channels, out_h, out_w);
    for (int c = 0; c < in.channels; ++c) {
        const double* ip = in.ch(c);
        double* op = out.ch(c);
        for (int y = 0; y < out_h; ++y) {
            const double* r0 = ip + static_cast<size_t>(ay.lo[y]) * in.width;
            const double* r1 = ip + static_cast<size_t>(ay.hi[y]) * in.width;
            const double fy = ay.frac[y];
            double* orow = op + static_cast<size_t>(y) * out_w;
            for (int x = 0; x < out_w; ++x) {
                const double fx = ax.frac[x];
                const double top = r0[ax.lo[x]] * (1.0 - fx) + r0[ax.hi[x]] * fx;
                const double bot = r1[ax.lo[x]] * (1.0 - fx) + r1[ax.hi[x]] * fx;
                orow[x] = top * (1.0 - fy) + bot * fy;
            }
        }
    }
    return out;
}

Tensor3 bilinear_resize_backward(const Tensor3& grad_out, int in_h, int in_w) {
    if (grad_out.height == in_h && grad_out.width == in_w) return grad_out;
    const AxisWeights ay = axis_weights(in_h, grad_out.height);
    const AxisWeights ax = axis_weights(in_w, grad_out.width);
    Tensor3 g(grad_out.channels, in_h, in_w, 0.0);
    for (int c = 0; c < grad_out.channels; ++c) {
        const double* op = grad_out.ch(c);
        double* gp = g.ch(c);
        for (int y = 0; y < grad_out.height; ++y) {
            const double fy = ay.frac[y];
            double* g0 = gp + static_cast<size_t>(ay.lo[y]) * in_w;
            double* g1 = gp + static_cast<size_t>(ay.hi[y]) * in_w;
            const double* orow = op + static_cast<size_t>(y) * grad_out.width;
            for (int x = 0; x < grad_out.width; ++x) {
                const double fx = ax.frac[x];
                const double v = orow[x];
                g0[ax.lo[x]] += v * (1.0 - fx) * (1.0 - fy);
                g0[ax.hi[x]] += v * fx * (1.0 - fy);
                g1[ax.lo[x]] += v * (1.0 - fx) * fy;
                g1[ax.hi[x]] += v * fx * fy;
            }
        }
    }
    return g;
}

Grid bilinear_resize(const Grid& in, int out_h, int out_w) {
    return tensor_to_grid(bilinear_resize(grid_to_tensor(in), out_h, out_w));
}

Grid bilinear_resize_backward(const Grid& grad_out, int in_h, int in_w) {
    return tensor_to_grid(bilinear_resize_backward(grid_to_tensor(grad_out), in_h, in_w));
}

Grid nearest_resize(const Grid& in, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw DimensionError("nearest_resize: bad target size");
    if (out_h == in.height() && out_w == in.width()) return in;
    Grid out(out_h, out_w);
    const double sy = static_cast<double>(in.height()) / out_h;
    const double sx = static_cast<double>(in.width()) / out_w;
    for (int y = 0; y < out_h; ++y) {
        int iy = static_cast<int>((y + 0.5) * sy);
        if (iy >= in.height()) iy = in.height() - 1;
        for (int x = 0; x < out_w; ++x) {
            int ix = static_cast<int>((x + 0.5) * sx);
            if (ix >= in.width()) ix = in.width() - 1;
            out(y, x) = in(iy, ix);
        }
    }
    return out;
}

Grid sigmoid(const Grid& logits) {
    Grid out(logits.height(), logits.width());
    for (size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        out[i] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    }
    return out;
}

Grid sigmoid_backward(const Grid& prob, const Grid& grad_prob) {
    require_same_shape(prob, grad_prob, "sigmoid_backward");
    Grid g(prob.height(), prob.width());
    for (size_t i = 0; i < prob.size(); ++i) g[i] = grad_prob[i] * prob[i] * (1.0 - prob[i]);
    return g;
}

}  // namespace boxseg::nn
