#include "boxseg/nn.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace boxseg;
using namespace boxseg::nn;

namespace {

// Direct definition of the convolution, no loop reordering tricks.
Tensor3 conv_reference(const Conv& cv, const Tensor3& in) {
    Tensor3 out(cv.out_ch, cv.out_size(in.height), cv.out_size(in.width));
    for (int o = 0; o < cv.out_ch; ++o)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x) {
                double acc = cv.b[o];
                for (int i = 0; i < cv.in_ch; ++i)
                    for (int ky = 0; ky < cv.ksize; ++ky)
                        for (int kx = 0; kx < cv.ksize; ++kx) {
                            const int sy = y * cv.stride + ky - cv.pad;
                            const int sx = x * cv.stride + kx - cv.pad;
                            if (sy < 0 || sy >= in.height || sx < 0 || sx >= in.width) continue;
                            acc += cv.w[((o * cv.in_ch + i) * cv.ksize + ky) * cv.ksize + kx] *
                                   in.at(i, sy, sx);
                        }
                out.at(o, y, x) = acc;
            }
    return out;
}

Tensor3 random_tensor(int c, int h, int w, Rng& rng) {
    Tensor3 t(c, h, w);
    for (double& v : t.v) v = rng.uniform(-1.0, 1.0);
    return t;
}

double dot(const Tensor3& a, const Tensor3& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a.v[i] * b.v[i];
    return acc;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("conv forward agrees with the direct definition") {
    Rng rng(21);
    for (int it = 0; it < 10; ++it) {
        Conv cv("t", 3, 4, 3, 2, 1);
        cv.init(rng);
        const Tensor3 in = random_tensor(3, 8, 10, rng);
        const Tensor3 fast = conv_forward(cv, in);
        const Tensor3 ref = conv_reference(cv, in);
        REQUIRE(fast.same_shape(ref));
        for (size_t i = 0; i < fast.size(); ++i)
            CHECK(fast.v[i] == doctest::Approx(ref.v[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv stride-2 pad-1 halves even spatial sizes") {
    Conv cv("t", 1, 1, 3, 2, 1);
    CHECK(cv.out_size(96) == 48);
    CHECK(cv.out_size(64) == 32);
}

TEST_CASE("conv backward matches finite differences") {
    Rng rng(22);
    Conv cv("t", 2, 3, 3, 2, 1);
    cv.init(rng);
    const Tensor3 in = random_tensor(2, 6, 6, rng);
    const Tensor3 up = random_tensor(3, cv.out_size(6), cv.out_size(6), rng);

    Tensor3 grad_in;
    ConvGrad grad;
    grad.resize_like(cv);
    conv_backward(cv, in, up, grad_in, grad);

    auto loss_with = [&](const Conv& cv2, const Tensor3& in2) {
        return dot(conv_forward(cv2, in2), up);
    };
    const double h = 1e-6;
    for (size_t i = 0; i < cv.w.size(); i += 3) {
        Conv cp = cv, cm = cv;
        cp.w[i] += h;
        cm.w[i] -= h;
        const double fd = (loss_with(cp, in) - loss_with(cm, in)) / (2 * h);
        CHECK(grad.w[i] == doctest::Approx(fd).epsilon(1e-5));
    }
    for (size_t i = 0; i < cv.b.size(); ++i) {
        Conv cp = cv, cm = cv;
        cp.b[i] += h;
        cm.b[i] -= h;
        const double fd = (loss_with(cp, in) - loss_with(cm, in)) / (2 * h);
        CHECK(grad.b[i] == doctest::Approx(fd).epsilon(1e-5));
    }
    for (size_t i = 0; i < in.size(); i += 5) {
        Tensor3 ip = in, im = in;
        ip.v[i] += h;
        im.v[i] -= h;
        const double fd = (loss_with(cv, ip) - loss_with(cv, im)) / (2 * h);
        CHECK(grad_in.v[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("bilinear resize to the same size is the identity") {
    Rng rng(23);
    const Tensor3 t = random_tensor(2, 5, 7, rng);
    const Tensor3 same = bilinear_resize(t, 5, 7);
    CHECK(same.v == t.v);
}

TEST_CASE("bilinear resize interpolates midpoints on a 2x upscale") {
    Grid g = Grid::from_rows({{0.0, 1.0}});
    const Grid up = bilinear_resize(g, 1, 4);
    // half-pixel centres: src positions -0.25, 0.25, 0.75, 1.25 clamped
    CHECK(up(0, 0) == doctest::Approx(0.0));
    CHECK(up(0, 1) == doctest::Approx(0.25));
    CHECK(up(0, 2) == doctest::Approx(0.75));
    CHECK(up(0, 3) == doctest::Approx(1.0));
}

TEST_CASE("bilinear resize backward is the exact adjoint") {
    Rng rng(24);
    for (int it = 0; it < 12; ++it) {
        const int ih = rng.uniform_int(1, 9), iw = rng.uniform_int(1, 9);
        const int oh = rng.uniform_int(1, 9), ow = rng.uniform_int(1, 9);
        const Tensor3 x = random_tensor(2, ih, iw, rng);
        const Tensor3 u = random_tensor(2, oh, ow, rng);
        const double lhs = dot(bilinear_resize(x, oh, ow), u);
        const double rhs = dot(x, bilinear_resize_backward(u, ih, iw));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("nearest resize keeps masks binary") {
    Rng rng(25);
    const Grid m = oracles::random_mask(9, 11, rng, true);
    const Grid r = nearest_resize(m, 5, 6);
    for (size_t i = 0; i < r.size(); ++i) CHECK((r[i] == 0.0 || r[i] == 1.0));
    CHECK(nearest_resize(m, 9, 11) == m);
}

TEST_CASE("relu and sigmoid backward") {
    Rng rng(26);
    const Tensor3 x = random_tensor(1, 4, 4, rng);
    const Tensor3 u = random_tensor(1, 4, 4, rng);
    const Tensor3 g = relu_backward(x, u);
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(g.v[i] == (x.v[i] > 0.0 ? u.v[i] : 0.0));

    Grid z(3, 3);
    for (size_t i = 0; i < z.size(); ++i) z[i] = rng.uniform(-4.0, 4.0);
    const Grid p = sigmoid(z);
    for (size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i] > 0.0);
        CHECK(p[i] < 1.0);
    }
    Grid up(3, 3, 1.0);
    const Grid gz = sigmoid_backward(p, up);
    const double h = 1e-6;
    for (size_t i = 0; i < z.size(); ++i) {
        const double fd =
            (1.0 / (1.0 + std::exp(-(z[i] + h))) - 1.0 / (1.0 + std::exp(-(z[i] - h)))) / (2 * h);
        CHECK(gz[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

}  // TEST_SUITE
