// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "mcan/errors.hpp"
#include "mcan/mask_transform.hpp"

using namespace mcan;

TEST_CASE("h is the identity at n = 1") {
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double m = (double)i / 1000.0;
        worst = std::max(worst, std::fabs(transform_h(m, 1.0) - m));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("h endpoints, fixed point, and hand-evaluated values") {
    for (double n : {0.5, 1.0, 2.0, 4.0}) {
        CHECK(transform_h(0.0, n) == 0.0);
        CHECK(transform_h(1.0, n) == 1.0);
        CHECK(transform_h(0.5, n) == doctest::Approx(0.5).epsilon(1e-15));
    }
    CHECK(transform_h(0.25, 2.0) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(transform_h(0.75, 2.0) == doctest::Approx(0.875).epsilon(1e-15));
    // n = 0 collapses the curve to the constant 0.5 (0^0 taken as 1)
    for (int i = 0; i <= 10; ++i) {
        CHECK(transform_h(i / 10.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    }
    CHECK_THROWS_AS(transform_h(-0.1, 1.0), DomainError);
    CHECK_THROWS_AS(transform_h(1.1, 1.0), DomainError);
}

TEST_CASE("h is point-symmetric about 0.5") {
    for (double n : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        for (int i = 0; i <= 1000; ++i) {
            const double m = (double)i / 1000.0;
            const double lhs = transform_h(1.0 - m, n);
            const double rhs = 1.0 - transform_h(m, n);
            REQUIRE(std::fabs(lhs - rhs) <= 1e-12);
        }
    }
}

TEST_CASE("h is non-decreasing for n > 0") {
    for (double n : {0.5, 1.0, 2.0, 4.0}) {
        double prev = transform_h(0.0, n);
        for (int i = 1; i <= 1000; ++i) {
            const double cur = transform_h((double)i / 1000.0, n);
            REQUIRE(cur >= prev - 1e-15);
            prev = cur;
        }
    }
}

TEST_CASE("g endpoints and hand-evaluated values") {
    CHECK(transform_g(0.0, {2.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(transform_g(1.0, {2.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(transform_g(0.5, {2.0, 1.0}) == doctest::Approx(0.0).epsilon(1e-15));
    // g(0.25; 2, 0.5) = 1.5 * 0.125 - 0.5
    CHECK(transform_g(0.25, {2.0, 0.5}) == doctest::Approx(-0.3125).epsilon(1e-15));
    // identity configuration
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double m = (double)i / 1000.0;
        worst = std::max(worst, std::fabs(transform_g(m, {1.0, 0.0}) - m));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("g emphasizes above 0.5 and suppresses below for n > 1") {
    for (double beta : {0.0, 0.5, 1.0}) {
        for (double n : {2.0, 4.0}) {
            for (int i = 0; i <= 1000; ++i) {
                const double m = (double)i / 1000.0;
                const double gn = transform_g(m, {n, beta});
                const double g1 = transform_g(m, {1.0, beta});
                if (m > 0.5) REQUIRE(gn >= g1 - 1e-12);
                if (m < 0.5) REQUIRE(gn <= g1 + 1e-12);
            }
        }
    }
}

TEST_CASE("g maps [0,1] into [-beta, 1]") {
    for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        for (double n : {0.0, 1.0, 2.0, 3.0, 4.0}) {
            for (int i = 0; i <= 200; ++i) {
                const double g = transform_g(i / 200.0, {n, beta});
                REQUIRE(g >= -beta - 1e-12);
                REQUIRE(g <= 1.0 + 1e-12);
            }
        }
    }
}

TEST_CASE("transform_mask multiplier") {
    const Tensor mask = Tensor::from_values({2, 2}, {0.0, 0.25, 0.5, 1.0});

    // identity params: exactly 1 + mask
    const Tensor ident = transform_mask(mask, {1.0, 0.0});
    for (int i = 0; i < 4; ++i) {
        CHECK(ident.values()[i] == 1.0 + mask.values()[i]);
    }

    // full suppression at mask 0 when beta = 1
    const Tensor sup = transform_mask(mask, {2.0, 1.0});
    CHECK(sup.values()[0] == doctest::Approx(0.0).epsilon(1e-15));

    // n = 0, beta = 0: constant multiplier 1.5
    const Tensor flat = transform_mask(mask, {0.0, 0.0});
    for (int i = 0; i < 4; ++i) CHECK(flat.values()[i] == doctest::Approx(1.5).epsilon(1e-15));

    CHECK_THROWS_AS(transform_mask(Tensor::from_values({1}, {1.5}), TransformParams{1.0, 0.0}),
                    DomainError);
    // transformation is an inference path: never recorded on a tape
    Tape tape;
    {
        TapeScope scope(tape);
        Tensor m2 = Tensor::from_values({2}, {0.2, 0.8}).set_requires_grad(true);
        transform_mask(m2, {2.0, 0.5});
        CHECK(tape.size() == 0);
    }
}

TEST_CASE("curve_samples spans [0,1] inclusively in ascending order") {
    const auto id3 = curve_samples({1.0, 0.0}, 3);
    REQUIRE(id3.size() == 3);
    CHECK(id3[0] == std::pair<double, double>{0.0, 0.0});
    CHECK(id3[1].first == 0.5);
    CHECK(id3[1].second == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(id3[2] == std::pair<double, double>{1.0, 1.0});

    const auto s4 = curve_samples({4.0, 0.0}, 3);
    CHECK(s4[0].second == doctest::Approx(0.0));
    CHECK(s4[1].second == doctest::Approx(0.5));
    CHECK(s4[2].second == doctest::Approx(1.0));

    const auto many = curve_samples({2.0, 0.3}, 11);
    CHECK(many.front().first == 0.0);
    CHECK(many.back().first == 1.0);
    for (size_t i = 1; i < many.size(); ++i) REQUIRE(many[i].first > many[i - 1].first);

    CHECK_THROWS_AS(curve_samples({1.0, 0.0}, 1), ValueError);
}
