#pragma once

#include "boxseg/grid.hpp"
#include "boxseg/nn.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace boxseg {

struct ModelConfig {
    // Five stride-2 stages; the last three feed the fusion head.
    std::array<int, 5> encoder_channels{16, 32, 64, 96, 128};
    int fusion_channels = 64;
    int input_size = 352;  // multiple of 32

    void validate() const;
};

// Encoder features at strides 8/16/32 of the input.
struct FeaturePyramid {
    nn::Tensor3 f2, f3, f4;
};

// Activations recorded by forward() and consumed by backward().
struct ForwardTrace {
    nn::Tensor3 input;
    std::array<nn::Tensor3, 5> stage_pre;  // conv outputs, pre-ReLU
    std::array<nn::Tensor3, 5> stage_out;  // post-ReLU
    std::array<nn::Tensor3, 3> unify_pre;
    std::array<nn::Tensor3, 3> unify_out;
    nn::Tensor3 fused;
    nn::Tensor3 logits_small;
    Grid prob;  // final probabilities at (out_h, out_w)
};

// Per-parameter gradient buffers, one entry per conv layer in layer order.
struct ModelGrad {
    std::vector<nn::ConvGrad> layers;
    void accumulate(const ModelGrad& other);
    void scale(double s);
};

// Small trainable encoder plus the fusion head: per-level 1x1 channel
// unification, bilinear upsampling to the stride-8 grid, elementwise sum,
// 1x1 projection to a single logit channel, upsample to the requested output
// size, sigmoid.
class Model {
public:
    Model() = default;
    Model(const ModelConfig& cfg, uint64_t seed);

    const ModelConfig& config() const { return cfg_; }

    // Requires a 3×H×W image with H, W multiples of 32.
    FeaturePyramid encode(const nn::Tensor3& image) const;

    Grid fuse_and_predict(const FeaturePyramid& pyr, int out_h, int out_w) const;

    // encode + fuse_and_predict, recording activations when trace != nullptr.
    Grid forward(const nn::Tensor3& image, int out_h, int out_w, ForwardTrace* trace) const;

    // Backpropagates d(loss)/d(prob) through the whole network, accumulating
    // parameter gradients into `grads` (sized on first use).
    void backward(const ForwardTrace& trace, const Grid& grad_prob, ModelGrad& grads) const;

    ModelGrad make_grad() const;

    std::vector<nn::Conv>& layers() { return layers_; }
    const std::vector<nn::Conv>& layers() const { return layers_; }
    size_t param_count() const;

private:
    void run_encoder(const nn::Tensor3& image, std::array<nn::Tensor3, 5>& pre,
                     std::array<nn::Tensor3, 5>& out) const;

    ModelConfig cfg_;
    // Layer order: enc1..enc5, unify_f2, unify_f3, unify_f4, head.
    std::vector<nn::Conv> layers_;
};

}  // namespace boxseg
