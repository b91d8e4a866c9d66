// SPDX-License-Identifier: Apache-2.0

#include "mcan/network.hpp"

#include <cmath>

#include "mcan/errors.hpp"
#include "mcan/rng.hpp"

namespace mcan {

void NetConfig::validate() const {
    if (feature_channels < 1) throw ValueError("feature_channels must be >= 1");
    if (num_attributes < 1) throw ValueError("num_attributes must be >= 1");
    if (image_size < 8) throw ValueError("image_size must be >= 8");
    if (image_size % 2 != 0) throw ValueError("image_size must be even");
    if (image_channels < 1) throw ValueError("image_channels must be >= 1");
    if (head_hidden < 1) throw ValueError("head_hidden must be >= 1");
}

NetConfig NetConfig::paper_preset() {
    NetConfig c;
    c.feature_channels = 128;
    return c;
}

namespace {

Tensor glorot_kernel(Rng& rng, int cout, int cin, int kh, int kw) {
    const double fan_in = (double)cin * kh * kw;
    const double fan_out = (double)cout * kh * kw;
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> v((size_t)cout * cin * kh * kw);
    for (auto& x : v) x = rng.uniform(-a, a);
    return Tensor::from_values({cout, cin, kh, kw}, std::move(v)).set_requires_grad(true);
}

ConvParams make_conv(Rng& rng, int cout, int cin, int kh, int kw) {
    ConvParams p;
    p.kernel = glorot_kernel(rng, cout, cin, kh, kw);
    p.bias = Tensor::zeros({cout}).set_requires_grad(true);
    return p;
}

DenseParams make_dense(Rng& rng, int in, int out) {
    const double a = std::sqrt(6.0 / ((double)in + out));
    std::vector<double> v((size_t)in * out);
    for (auto& x : v) x = rng.uniform(-a, a);
    DenseParams p;
    p.weight = Tensor::from_values({in, out}, std::move(v)).set_requires_grad(true);
    p.bias = Tensor::zeros({out}).set_requires_grad(true);
    return p;
}

// Global average pool [B,C,H,W] -> [B,C].
Tensor gap(const Tensor& t) { return reduce(ReduceKind::mean, t, std::vector<int>{2, 3}); }

}  // namespace

MultiAttrNet MultiAttrNet::init(const NetConfig& config) {
    config.validate();
    MultiAttrNet net;
    net.config_ = config;
    Rng rng(config.seed);
    const int C = config.feature_channels;

    net.extractor_.stem = make_conv(rng, C, config.image_channels, 3, 3);
    net.extractor_.block1 = make_conv(rng, C, C, 3, 3);
    net.extractor_.block2 = make_conv(rng, C, C, 3, 3);
    net.extractor_.block3 = make_conv(rng, C, C, 3, 3);

    for (int k = 0; k < config.num_attributes; ++k) {
        MaskGenParams m;
        m.c1 = make_conv(rng, C, C, 3, 3);
        m.c2 = make_conv(rng, C, C, 3, 3);
        m.c3 = make_conv(rng, C, C, 1, 1);
        net.maskgen_.push_back(std::move(m));
    }
    for (int k = 0; k < config.num_attributes; ++k) {
        BinaryHeadParams h;
        h.conv = make_conv(rng, config.head_hidden, C, 3, 3);
        h.fc = make_dense(rng, config.head_hidden, 1);
        net.binhead_.push_back(std::move(h));
    }
    if (config.enable_multilabel) {
        net.multilabel_ = make_dense(rng, C, config.num_attributes);
    }
    if (config.enable_reconstructor) {
        const int mid = std::max(1, C / 2);
        ReconstructorParams r;
        r.narrow = make_conv(rng, mid, C, 1, 1);
        r.expand = make_conv(rng, config.image_channels, mid, 3, 3);
        net.recon_ = std::move(r);
    }
    return net;
}

Tensor MultiAttrNet::extract_features(const Tensor& x) const {
    if (x.shape().size() != 4 || x.shape()[1] != config_.image_channels ||
        x.shape()[2] != config_.image_size || x.shape()[3] != config_.image_size) {
        throw ShapeError("expected input [B," + std::to_string(config_.image_channels) + "," +
                         std::to_string(config_.image_size) + "," +
                         std::to_string(config_.image_size) + "], got " +
                         shape_str(x.shape()));
    }
    Tensor t = relu(conv2d(x, extractor_.stem.kernel, extractor_.stem.bias, 2, 1, 1));
    t = relu(conv2d(t, extractor_.block1.kernel, extractor_.block1.bias, 1, 1, 1));
    t = relu(conv2d(t, extractor_.block2.kernel, extractor_.block2.bias, 1, 2, 2));
    t = relu(conv2d(t, extractor_.block3.kernel, extractor_.block3.bias, 1, 4, 4));
    return t;
}

Tensor MultiAttrNet::generate_mask(int k, const Tensor& feat) const {
    if (k < 0 || k >= config_.num_attributes) {
        throw IndexError("attribute index " + std::to_string(k) + " out of range [0," +
                         std::to_string(config_.num_attributes) + ")");
    }
    const MaskGenParams& m = maskgen_[k];
    Tensor t = relu(conv2d(feat, m.c1.kernel, m.c1.bias, 1, 1, 1));
    t = relu(conv2d(t, m.c2.kernel, m.c2.bias, 1, 1, 1));
    t = conv2d(t, m.c3.kernel, m.c3.bias, 1, 1, 0);
    return sigmoid(t);
}

Tensor MultiAttrNet::binary_head(int k, const Tensor& masked_feat) const {
    if (k < 0 || k >= config_.num_attributes) {
        throw IndexError("attribute index " + std::to_string(k) + " out of range [0," +
                         std::to_string(config_.num_attributes) + ")");
    }
    const int hf = config_.image_size / 2;
    if (masked_feat.shape().size() != 4 || masked_feat.shape()[1] != config_.feature_channels ||
        masked_feat.shape()[2] != hf || masked_feat.shape()[3] != hf) {
        throw ShapeError("expected features [B," + std::to_string(config_.feature_channels) +
                         "," + std::to_string(hf) + "," + std::to_string(hf) + "], got " +
                         shape_str(masked_feat.shape()));
    }
    const BinaryHeadParams& h = binhead_[k];
    Tensor t = relu(conv2d(masked_feat, h.conv.kernel, h.conv.bias, 1, 1, 1));
    t = gap(t);                                   // [B, head_hidden]
    t = add(matmul(t, h.fc.weight), h.fc.bias);   // [B, 1]
    t = sigmoid(t);
    return reshape(t, {masked_feat.shape()[0]});
}

std::pair<Tensor, Tensor> MultiAttrNet::forward_attribute(
    int k, const Tensor& x, const TransformParams& transform) const {
    if (!transform.valid()) throw DomainError("transform params out of range");
    const Tensor feat = extract_features(x);
    const Tensor mask = generate_mask(k, feat);
    Tensor multiplier;
    if (transform.is_identity()) {
        multiplier = add_scalar(mask, 1.0);  // training-time path, differentiable
    } else {
        multiplier = transform_mask(mask, transform);  // off-tape remapping
    }
    const Tensor prob = binary_head(k, mul(multiplier, feat));
    return {prob, mask};
}

Tensor MultiAttrNet::multilabel_head(const Tensor& feat) const {
    if (!multilabel_.has_value()) {
        throw DisabledError("multi-label head disabled by configuration");
    }
    Tensor t = gap(feat);
    t = add(matmul(t, multilabel_->weight), multilabel_->bias);
    return sigmoid(t);
}

Tensor MultiAttrNet::reconstruct(const Tensor& feat) const {
    if (!recon_.has_value()) {
        throw DisabledError("reconstructor disabled by configuration");
    }
    Tensor t = relu(conv2d(feat, recon_->narrow.kernel, recon_->narrow.bias, 1, 1, 0));
    t = upsample_nearest2x(t);
    t = conv2d(t, recon_->expand.kernel, recon_->expand.bias, 1, 1, 1);
    return sigmoid(t);
}

std::vector<std::pair<std::string, Tensor>> MultiAttrNet::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> params;
    auto add_conv = [&](const std::string& name, const ConvParams& c) {
        params.emplace_back(name + ".kernel", c.kernel);
        params.emplace_back(name + ".bias", c.bias);
    };
    auto add_dense = [&](const std::string& name, const DenseParams& d) {
        params.emplace_back(name + ".weight", d.weight);
        params.emplace_back(name + ".bias", d.bias);
    };
    add_conv("extractor.stem", extractor_.stem);
    add_conv("extractor.block1", extractor_.block1);
    add_conv("extractor.block2", extractor_.block2);
    add_conv("extractor.block3", extractor_.block3);
    for (int k = 0; k < config_.num_attributes; ++k) {
        const std::string base = "maskgen" + std::to_string(k);
        add_conv(base + ".c1", maskgen_[k].c1);
        add_conv(base + ".c2", maskgen_[k].c2);
        add_conv(base + ".c3", maskgen_[k].c3);
    }
    for (int k = 0; k < config_.num_attributes; ++k) {
        const std::string base = "binhead" + std::to_string(k);
        add_conv(base + ".conv", binhead_[k].conv);
        add_dense(base + ".fc", binhead_[k].fc);
    }
    if (multilabel_.has_value()) add_dense("multilabel.fc", *multilabel_);
    if (recon_.has_value()) {
        add_conv("recon.narrow", recon_->narrow);
        add_conv("recon.expand", recon_->expand);
    }
    return params;
}

}  // namespace mcan
