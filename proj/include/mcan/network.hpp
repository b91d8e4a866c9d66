// SPDX-License-Identifier: Apache-2.0
//
// The multi-attribute network: a shared dilated-convolution feature
// extractor, one multi-channel attention mask generator and one binary
// classification head per attribute, plus two optional representation-shaping
// components (a multi-label head over pooled features and an image
// reconstructor). Masks have the same channel count as the feature map and,
// during training, reweight features multiplicatively as (1 + M) * f.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcan/mask_transform.hpp"
#include "mcan/tensor.hpp"

namespace mcan {

struct NetConfig {
    int image_channels = 1;
    int image_size = 32;      // square input, must be even (stride-2 stem)
    int feature_channels = 32;
    int num_attributes = 6;
    int head_hidden = 16;
    bool enable_reconstructor = true;
    bool enable_multilabel = true;
    uint64_t seed = 1;

    void validate() const;

    // Full-scale preset: 128 feature channels (reference configuration, not
    // sized for quick local runs).
    static NetConfig paper_preset();
};

struct ConvParams {
    Tensor kernel;  // [Cout, Cin, kh, kw]
    Tensor bias;    // [Cout]
};

struct DenseParams {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]
};

struct ExtractorParams {
    ConvParams stem;  // 3x3, stride 2
    ConvParams block1, block2, block3;  // 3x3, dilations 1, 2, 4
};

struct MaskGenParams {
    ConvParams c1, c2;  // 3x3
    ConvParams c3;      // 1x1, pre-sigmoid
};

struct BinaryHeadParams {
    ConvParams conv;  // 3x3, C -> head_hidden
    DenseParams fc;   // head_hidden -> 1
};

struct ReconstructorParams {
    ConvParams narrow;  // 1x1, C -> C/2
    ConvParams expand;  // 3x3 after 2x upsample, C/2 -> image channels
};

class MultiAttrNet {
  public:
    // Deterministic for a given config seed: kernels uniform on (-a, a) with
    // a = sqrt(6 / (fan_in + fan_out)), biases zero.
    static MultiAttrNet init(const NetConfig& config);

    const NetConfig& config() const { return config_; }
    int num_attributes() const { return config_.num_attributes; }

    // [B, Cimg, S, S] -> [B, C, S/2, S/2]
    Tensor extract_features(const Tensor& x) const;

    // Attribute indices are 0-based throughout.
    Tensor generate_mask(int k, const Tensor& feat) const;

    // Masked features -> per-sample probability of attribute k, shape [B].
    Tensor binary_head(int k, const Tensor& masked_feat) const;

    // Full per-attribute pass: probability and the raw mask. The identity
    // transform (1, 0) follows the training-time path exactly; any other
    // transform is applied outside the gradient tape.
    std::pair<Tensor, Tensor> forward_attribute(int k, const Tensor& x,
                                                const TransformParams& transform) const;

    // [B, C, Hf, Wf] unmasked features -> [B, K] probabilities.
    Tensor multilabel_head(const Tensor& feat) const;

    // [B, C, Hf, Wf] -> [B, Cimg, S, S] reconstruction in (0, 1).
    Tensor reconstruct(const Tensor& feat) const;

    // Stable name -> tensor pairs in creation order; the checkpoint manifest
    // and optimizer state are keyed on these names.
    std::vector<std::pair<std::string, Tensor>> named_parameters() const;

  private:
    NetConfig config_;
    ExtractorParams extractor_;
    std::vector<MaskGenParams> maskgen_;
    std::vector<BinaryHeadParams> binhead_;
    std::optional<DenseParams> multilabel_;
    std::optional<ReconstructorParams> recon_;
};

}  // namespace mcan
