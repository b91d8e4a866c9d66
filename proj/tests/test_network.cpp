// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "mcan/errors.hpp"
#include "mcan/network.hpp"
#include "mcan/objective.hpp"
#include "oracles.hpp"

using namespace mcan;

namespace {

NetConfig small_config() {
    NetConfig c;
    c.image_channels = 1;
    c.image_size = 16;
    c.feature_channels = 8;
    c.num_attributes = 3;
    c.head_hidden = 4;
    c.seed = 11;
    return c;
}

Tensor rand_images(int batch, const NetConfig& c, unsigned seed) {
    return Tensor::from_values(
        {batch, c.image_channels, c.image_size, c.image_size},
        oracles::random_vec((size_t)batch * c.image_channels * c.image_size * c.image_size,
                            seed, 0.0, 1.0));
}

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("feature extractor shape, determinism, finiteness") {
    NetConfig c;
    c.image_channels = 1;
    c.image_size = 32;
    c.feature_channels = 32;
    c.num_attributes = 2;
    c.seed = 3;
    const auto net = MultiAttrNet::init(c);
    const Tensor x = rand_images(2, c, 5);
    const Tensor f1 = net.extract_features(x);
    CHECK(f1.shape() == Shape{2, 32, 16, 16});
    const Tensor f2 = net.extract_features(x);
    CHECK(to_vec(f1.values()) == to_vec(f2.values()));
    for (double v : f1.values()) REQUIRE(std::isfinite(v));

    CHECK_THROWS_AS(net.extract_features(Tensor::zeros({2, 3, 32, 32})), ShapeError);
}

TEST_CASE("mask generator contract") {
    const NetConfig c = small_config();
    const auto net = MultiAttrNet::init(c);
    const Tensor feat = net.extract_features(rand_images(2, c, 6));

    const Tensor mask = net.generate_mask(1, feat);
    CHECK(mask.shape() == feat.shape());
    for (double v : mask.values()) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
    CHECK_THROWS_AS(net.generate_mask(3, feat), IndexError);
    CHECK_THROWS_AS(net.generate_mask(-1, feat), IndexError);
}

TEST_CASE("attribute mask generators use disjoint parameters") {
    const NetConfig c = small_config();
    auto net = MultiAttrNet::init(c);
    const Tensor feat = net.extract_features(rand_images(2, c, 7));
    const auto before = to_vec(net.generate_mask(2, feat).values());

    // perturb every maskgen0 parameter; mask 2 must not move
    for (auto& [name, p] : net.named_parameters()) {
        if (name.rfind("maskgen0", 0) == 0) {
            for (auto& v : p.raw_values()) v += 0.25;
        }
    }
    CHECK(to_vec(net.generate_mask(2, feat).values()) == before);
    CHECK(to_vec(net.generate_mask(0, feat).values()) != before);
}

TEST_CASE("binary head contract") {
    const NetConfig c = small_config();
    const auto net = MultiAttrNet::init(c);
    const Tensor feat = net.extract_features(rand_images(3, c, 8));

    const Tensor prob = net.binary_head(0, feat);
    CHECK(prob.shape() == Shape{3});
    for (double v : prob.values()) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }

    // all-zero masked features: the output reduces to the bias path and is
    // identical across samples
    const Tensor zeros = Tensor::zeros(feat.shape());
    const Tensor pz = net.binary_head(1, zeros);
    CHECK(pz.values()[0] == pz.values()[1]);
    CHECK(pz.values()[1] == pz.values()[2]);

    CHECK_THROWS_AS(net.binary_head(0, Tensor::zeros({3, 2, 8, 8})), ShapeError);
}

TEST_CASE("forward_attribute transform behaviour") {
    const NetConfig c = small_config();
    const auto net = MultiAttrNet::init(c);
    const Tensor x = rand_images(2, c, 9);

    // identity transform == training-time forward, bitwise
    const auto [prob_id, mask_id] = net.forward_attribute(1, x, {1.0, 0.0});
    const Tensor feat = net.extract_features(x);
    const Tensor mask = net.generate_mask(1, feat);
    const Tensor train_prob = net.binary_head(1, mul(add_scalar(mask, 1.0), feat));
    CHECK(to_vec(prob_id.values()) == to_vec(train_prob.values()));
    CHECK(to_vec(mask_id.values()) == to_vec(mask.values()));
    CHECK(prob_id.shape() == Shape{2});
    CHECK(mask_id.shape() == feat.shape());

    // (n, beta) = (0, 1): multiplier is exactly 1 everywhere -> unmasked features
    const auto [prob_plain, mask_plain] = net.forward_attribute(1, x, {0.0, 1.0});
    const Tensor unmasked_prob = net.binary_head(1, mul(Tensor::full(feat.shape(), 1.0), feat));
    CHECK(to_vec(prob_plain.values()) == to_vec(unmasked_prob.values()));
    CHECK(to_vec(mask_plain.values()) == to_vec(mask.values()));
}

TEST_CASE("multilabel head and reconstructor contracts") {
    NetConfig c = small_config();
    auto net = MultiAttrNet::init(c);
    const Tensor x = rand_images(2, c, 10);
    const Tensor feat = net.extract_features(x);

    const Tensor ml = net.multilabel_head(feat);
    CHECK(ml.shape() == Shape{2, 3});
    for (double v : ml.values()) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }

    const Tensor rec = net.reconstruct(feat);
    CHECK(rec.shape() == x.shape());
    for (double v : rec.values()) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
    CHECK(to_vec(net.reconstruct(feat).values()) == to_vec(rec.values()));

    c.enable_multilabel = false;
    c.enable_reconstructor = false;
    const auto ablated = MultiAttrNet::init(c);
    const Tensor feat2 = ablated.extract_features(x);
    CHECK_THROWS_AS(ablated.multilabel_head(feat2), DisabledError);
    CHECK_THROWS_AS(ablated.reconstruct(feat2), DisabledError);
}

TEST_CASE("parameter initialization is seeded and bounded") {
    const NetConfig c = small_config();
    auto a = MultiAttrNet::init(c);
    auto b = MultiAttrNet::init(c);
    const auto pa = a.named_parameters();
    const auto pb = b.named_parameters();
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].first == pb[i].first);
        CHECK(to_vec(pa[i].second.values()) == to_vec(pb[i].second.values()));
    }

    for (const auto& [name, p] : pa) {
        if (name.ends_with(".bias")) {
            for (double v : p.values()) REQUIRE(v == 0.0);
        } else if (name.ends_with(".kernel")) {
            const auto& s = p.shape();
            const double fan_in = (double)s[1] * s[2] * s[3];
            const double fan_out = (double)s[0] * s[2] * s[3];
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            for (double v : p.values()) {
                REQUIRE(v > -bound);
                REQUIRE(v < bound);
            }
        }
    }

    NetConfig c2 = c;
    c2.seed = 12;
    const auto other = MultiAttrNet::init(c2);
    CHECK(to_vec(other.named_parameters()[0].second.values()) !=
          to_vec(pa[0].second.values()));
}

TEST_CASE("gradients flow through the mask path") {
    const NetConfig c = small_config();
    int nonzero_trials = 0;
    for (unsigned trial = 0; trial < 20; ++trial) {
        NetConfig cc = c;
        cc.seed = 100 + trial;
        auto net = MultiAttrNet::init(cc);
        const Tensor x = rand_images(2, cc, 300 + trial);
        const Tensor labels = Tensor::from_values({2, 3}, {1, 0, 1, 0, 1, 0});

        Tape tape;
        {
            TapeScope scope(tape);
            const Tensor feat = net.extract_features(x);
            std::vector<Tensor> probs;
            for (int k = 0; k < 3; ++k) {
                const Tensor mask = net.generate_mask(k, feat);
                probs.push_back(net.binary_head(k, mul(add_scalar(mask, 1.0), feat)));
            }
            tape.backward(binary_attr_loss(stack_columns(probs), labels));
        }
        bool any_nonzero = false;
        for (const auto& [name, p] : net.named_parameters()) {
            if (name.rfind("maskgen", 0) == 0 && p.has_grad()) {
                for (double g : p.grad()) any_nonzero = any_nonzero || g != 0.0;
            }
        }
        if (any_nonzero) ++nonzero_trials;
    }
    CHECK(nonzero_trials >= 19);
}

TEST_CASE("attribute heads are isolated, the extractor is shared") {
    const NetConfig c = small_config();
    auto net = MultiAttrNet::init(c);
    const Tensor x = rand_images(2, c, 13);
    const Tensor labels_k0 = Tensor::from_values({2, 1}, {1, 0});

    Tape tape;
    {
        TapeScope scope(tape);
        const Tensor feat = net.extract_features(x);
        const Tensor mask = net.generate_mask(0, feat);
        const Tensor prob = net.binary_head(0, mul(add_scalar(mask, 1.0), feat));
        tape.backward(binary_attr_loss(stack_columns({prob}), labels_k0));
    }

    bool extractor_nonzero = false;
    for (const auto& [name, p] : net.named_parameters()) {
        if (name.rfind("binhead1", 0) == 0 || name.rfind("binhead2", 0) == 0 ||
            name.rfind("maskgen1", 0) == 0 || name.rfind("maskgen2", 0) == 0) {
            // untouched heads: gradient never allocated, i.e. exactly zero
            CHECK(!p.has_grad());
        }
        if (name.rfind("extractor", 0) == 0 && p.has_grad()) {
            for (double g : p.grad()) extractor_nonzero = extractor_nonzero || g != 0.0;
        }
    }
    CHECK(extractor_nonzero);
}
