#include "boxseg/model.hpp"

#include <stdexcept>

namespace boxseg {

void ModelConfig::validate() const {
    for (int c : encoder_channels)
        if (c < 1) throw std::invalid_argument("ModelConfig: encoder channel counts must be >= 1");
    if (fusion_channels < 1)
        throw std::invalid_argument("ModelConfig: fusion_channels must be >= 1");
    if (input_size < 32 || input_size % 32 != 0)
        throw std::invalid_argument("ModelConfig: input_size must be a positive multiple of 32");
}

void ModelGrad::accumulate(const ModelGrad& other) {
    for (size_t l = 0; l < layers.size(); ++l) {
        for (size_t i = 0; i < layers[l].w.size(); ++i) layers[l].w[i] += other.layers[l].w[i];
        for (size_t i = 0; i < layers[l].b.size(); ++i) layers[l].b[i] += other.layers[l].b[i];
    }
}

void ModelGrad::scale(double s) {
    for (auto& l : layers) {
        for (double& x : l.w) x *= s;
        for (double& x : l.b) x *= s;
    }
}

Model::Model(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    const auto& ch = cfg_.encoder_channels;
    layers_.emplace_back("enc1", 3, ch[0], 3, 2, 1);
    layers_.emplace_back("enc2", ch[0], ch[1], 3, 2, 1);
    layers_.emplace_back("enc3", ch[1], ch[2], 3, 2, 1);
    layers_.emplace_back("enc4", ch[2], ch[3], 3, 2, 1);
    layers_.emplace_back("enc5", ch[3], ch[4], 3, 2, 1);
    layers_.emplace_back("unify_f2", ch[2], cfg_.fusion_channels, 1, 1, 0);
    layers_.emplace_back("unify_f3", ch[3], cfg_.fusion_channels, 1, 1, 0);
    layers_.emplace_back("unify_f4", ch[4], cfg_.fusion_channels, 1, 1, 0);
    layers_.emplace_back("head", cfg_.fusion_channels, 1, 1, 1, 0);
    Rng rng(Rng::derive(seed, 0x6d6f64656cULL));
    for (auto& l : layers_) l.init(rng);
}

size_t Model::param_count() const {
    size_t n = 0;
    for (const auto& l : layers_) n += l.weight_count() + l.b.size();
    return n;
}

ModelGrad Model::make_grad() const {
    ModelGrad g;
    g.layers.resize(layers_.size());
    for (size_t i = 0; i < layers_.size(); ++i) g.layers[i].resize_like(layers_[i]);
    return g;
}

void Model::run_encoder(const nn::Tensor3& image, std::array<nn::Tensor3, 5>& pre,
                        std::array<nn::Tensor3, 5>& out) const {
    if (image.channels != 3) throw DimensionError("Model: expected a 3-channel image");
    if (image.height % 32 != 0 || image.width % 32 != 0)
        throw DimensionError("Model: input size must be a multiple of 32, got " +
                             std::to_string(image.height) + "x" + std::to_string(image.width));
    const nn::Tensor3* cur = &image;
    for (int s = 0; s < 5; ++s) {
        pre[s] = nn::conv_forward(layers_[s], *cur);
        out[s] = nn::relu_forward(pre[s]);
        cur = &out[s];
    }
}

FeaturePyramid Model::encode(const nn::Tensor3& image) const {
    std::array<nn::Tensor3, 5> pre, out;
    run_encoder(image, pre, out);
    return FeaturePyramid{std::move(out[2]), std::move(out[3]), std::move(out[4])};
}

Grid Model::fuse_and_predict(const FeaturePyramid& pyr, int out_h, int out_w) const {
    ForwardTrace scratch;
    scratch.stage_out[2] = pyr.f2;
    scratch.stage_out[3] = pyr.f3;
    scratch.stage_out[4] = pyr.f4;

    // Reuse the trace-based fusion path.
    const auto& ch = cfg_.encoder_channels;
    if (pyr.f2.channels != ch[2] || pyr.f3.channels != ch[3] || pyr.f4.channels != ch[4])
        throw DimensionError("fuse_and_predict: pyramid channels do not match the config");
    if (pyr.f3.height * 2 != pyr.f2.height || pyr.f4.height * 4 != pyr.f2.height ||
        pyr.f3.width * 2 != pyr.f2.width || pyr.f4.width * 4 != pyr.f2.width)
        throw DimensionError("fuse_and_predict: inconsistent pyramid resolutions");
    if (out_h < 1 || out_w < 1) throw DimensionError("fuse_and_predict: bad output size");

    const nn::Tensor3* levels[3] = {&scratch.stage_out[2], &scratch.stage_out[3],
                                    &scratch.stage_out[4]};
    nn::Tensor3 fused;
    for (int i = 0; i < 3; ++i) {
        scratch.unify_pre[i] = nn::conv_forward(layers_[5 + i], *levels[i]);
        scratch.unify_out[i] = nn::relu_forward(scratch.unify_pre[i]);
        nn::Tensor3 up =
            nn::bilinear_resize(scratch.unify_out[i], pyr.f2.height, pyr.f2.width);
        if (i == 0) {
            fused = std::move(up);
        } else {
            for (size_t j = 0; j < fused.size(); ++j) fused.v[j] += up.v[j];
        }
    }
    nn::Tensor3 logits_small = nn::conv_forward(layers_[8], fused);
    nn::Tensor3 logits_full = nn::bilinear_resize(logits_small, out_h, out_w);
    return nn::sigmoid(nn::tensor_to_grid(logits_full));
}

Grid Model::forward(const nn::Tensor3& image, int out_h, int out_w, ForwardTrace* trace) const {
    ForwardTrace local;
    ForwardTrace& t = trace ? *trace : local;
    t.input = image;
    run_encoder(image, t.stage_pre, t.stage_out);

    const nn::Tensor3& f2 = t.stage_out[2];
    const nn::Tensor3* levels[3] = {&t.stage_out[2], &t.stage_out[3], &t.stage_out[4]};
    for (int i = 0; i < 3; ++i) {
        t.unify_pre[i] = nn::conv_forward(layers_[5 + i], *levels[i]);
        t.unify_out[i] = nn::relu_forward(t.unify_pre[i]);
    }
    t.fused = t.unify_out[0];
    for (int i = 1; i < 3; ++i) {
        nn::Tensor3 up = nn::bilinear_resize(t.unify_out[i], f2.height, f2.width);
        for (size_t j = 0; j < t.fused.size(); ++j) t.fused.v[j] += up.v[j];
    }
    t.logits_small = nn::conv_forward(layers_[8], t.fused);
    const nn::Tensor3 logits_full = nn::bilinear_resize(t.logits_small, out_h, out_w);
    t.prob = nn::sigmoid(nn::tensor_to_grid(logits_full));
    return t.prob;
}

void Model::backward(const ForwardTrace& t, const Grid& grad_prob, ModelGrad& grads) const {
    if (grads.layers.size() != layers_.size()) grads = make_grad();
    require_same_shape(t.prob, grad_prob, "Model::backward");

    const Grid d_logits_full = nn::sigmoid_backward(t.prob, grad_prob);
    nn::Tensor3 d_logits_small = nn::bilinear_resize_backward(
        nn::grid_to_tensor(d_logits_full), t.logits_small.height, t.logits_small.width);

    nn::Tensor3 d_fused;
    nn::conv_backward(layers_[8], t.fused, d_logits_small, d_fused, grads.layers[8]);

    // Pyramid-level gradients (post-ReLU features f2..f4).
    std::array<nn::Tensor3, 5> d_stage_out;
    for (int i = 0; i < 3; ++i) {
        const nn::Tensor3& ref = t.unify_out[i];
        nn::Tensor3 d_up = i == 0
                               ? d_fused
                               : nn::bilinear_resize_backward(d_fused, ref.height, ref.width);
        const nn::Tensor3 d_pre = nn::relu_backward(t.unify_pre[i], d_up);
        nn::Tensor3 d_level;
        nn::conv_backward(layers_[5 + i], t.stage_out[2 + i], d_pre, d_level, grads.layers[5 + i]);
        d_stage_out[2 + i] = std::move(d_level);
    }

    // Encoder chain, accumulating the skip contributions from the fusion head.
    for (int s = 4; s >= 0; --s) {
        const nn::Tensor3 d_pre = nn::relu_backward(t.stage_pre[s], d_stage_out[s]);
        const nn::Tensor3& in = s == 0 ? t.input : t.stage_out[s - 1];
        nn::Tensor3 d_in;
        nn::conv_backward(layers_[s], in, d_pre, d_in, grads.layers[s]);
        if (s > 0) {
            if (d_stage_out[s - 1].size() == 0) {
                d_stage_out[s - 1] = std::move(d_in);
            } else {
                for (size_t j = 0; j < d_in.size(); ++j) d_stage_out[s - 1].v[j] += d_in.v[j];
            }
        }
    }
}

}  // namespace boxseg
