#include "doctest.h"

#include <cmath>

#include "fcc/errors.hpp"
#include "fcc/feature_map.hpp"
#include "fcc/rng.hpp"

using namespace fcc;

namespace {

float lp(Norm p, const Tensor& v) {
    float acc = 0.0f;
    switch (p) {
        case Norm::l1:
            for (std::size_t i = 0; i < v.numel(); ++i) acc += std::fabs(v.data()[i]);
            return acc;
        case Norm::l2:
            for (std::size_t i = 0; i < v.numel(); ++i) acc += v.data()[i] * v.data()[i];
            return std::sqrt(acc);
        case Norm::linf:
            for (std::size_t i = 0; i < v.numel(); ++i) acc = std::max(acc, std::fabs(v.data()[i]));
            return acc;
    }
    return acc;
}

} // namespace

TEST_CASE("norm names and parsing round-trip, unknown strings rejected") {
    CHECK(norm_from_string("1") == Norm::l1);
    CHECK(norm_from_string("2") == Norm::l2);
    CHECK(norm_from_string("inf") == Norm::linf);
    CHECK(norm_name(Norm::l1) == "1");
    CHECK(norm_name(Norm::linf) == "inf");
    CHECK(norm_index(Norm::l1) == 0);
    CHECK(norm_index(Norm::l2) == 1);
    CHECK(norm_index(Norm::linf) == 2);
    CHECK_THROWS_AS(norm_from_string("3"), contract_error);
    CHECK_THROWS_AS(norm_from_string(""), contract_error);
}

TEST_CASE("identity map passes input and gradient through unchanged") {
    const FeatureMap id = identity_map(3);
    CHECK(id.output_dim() == 3);
    const Tensor x = Tensor::vec({1, -2, 3});
    const Tensor z = feature_apply(id, x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(z[i] == x[i]);
    for (Norm p : kAllNorms) CHECK(feature_lipschitz(id, p) == 1.0f);
    const Tensor gz = Tensor::vec({0.5f, 0.25f, -1.0f});
    const Tensor gx = feature_backward(id, x, gz);
    for (std::size_t i = 0; i < 3; ++i) CHECK(gx[i] == gz[i]);
}

TEST_CASE("concat map computes (x - mu, |x - mu|) on a hand example") {
    const FeatureMap map = concat_map(Tensor::vec({2, 2}));
    CHECK(map.output_dim() == 4);
    const Tensor z = feature_apply(map, Tensor::vec({1, 3}));
    CHECK(z[0] == -1.0f);
    CHECK(z[1] == 1.0f);
    CHECK(z[2] == 1.0f);
    CHECK(z[3] == 1.0f);
}

TEST_CASE("concat map Lipschitz constants are 2, sqrt(2), 1") {
    const FeatureMap map = concat_map(Tensor::vec({0, 0, 0}));
    CHECK(feature_lipschitz(map, Norm::l1) == 2.0f);
    CHECK(feature_lipschitz(map, Norm::l2) == std::sqrt(2.0f));
    CHECK(feature_lipschitz(map, Norm::linf) == 1.0f);
}

TEST_CASE("empirical Lipschitz bound holds over random pairs for all three norms") {
    const FeatureMap map = concat_map(Tensor::vec({0.3f, -0.8f, 1.2f, 0.0f}));
    Rng rng(404);
    for (int trial = 0; trial < 100000; ++trial) {
        Tensor x = Tensor::zeros(4), y = Tensor::zeros(4);
        for (std::size_t i = 0; i < 4; ++i) {
            x[i] = rng.uniform(-3, 3);
            y[i] = rng.uniform(-3, 3);
        }
        const Tensor zx = feature_apply(map, x), zy = feature_apply(map, y);
        Tensor dz = Tensor::zeros(8), dx = Tensor::zeros(4);
        for (std::size_t i = 0; i < 8; ++i) dz[i] = zx[i] - zy[i];
        for (std::size_t i = 0; i < 4; ++i) dx[i] = x[i] - y[i];
        for (Norm p : kAllNorms) {
            CHECK(lp(p, dz) <= feature_lipschitz(map, p) * lp(p, dx) * (1.0f + 1e-5f) + 1e-7f);
        }
    }
}

TEST_CASE("the l2 Lipschitz constant is tight: some pair attains sqrt(2)") {
    // Moving a single coordinate away from mu stretches (offset, |offset|)
    // by exactly sqrt(2) in l2.
    const FeatureMap map = concat_map(Tensor::vec({0.0f}));
    const Tensor zx = feature_apply(map, Tensor::vec({1.0f}));
    const Tensor zy = feature_apply(map, Tensor::vec({2.0f}));
    Tensor dz = Tensor::vec({zx[0] - zy[0], zx[1] - zy[1]});
    CHECK(lp(Norm::l2, dz) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("concat backward chains gz through the sign structure") {
    const FeatureMap map = concat_map(Tensor::vec({0, 0}));
    const Tensor x = Tensor::vec({2.0f, -3.0f}); // signs +, -
    const Tensor gz = Tensor::vec({1, 10, 100, 1000});
    const Tensor gx = feature_backward(map, x, gz);
    CHECK(gx[0] == 1.0f + 100.0f);   // + sign on |x - mu|
    CHECK(gx[1] == 10.0f - 1000.0f); // - sign
}

TEST_CASE("concat backward uses sign(0) = 0 at the fold") {
    const FeatureMap map = concat_map(Tensor::vec({5.0f}));
    const Tensor gx = feature_backward(map, Tensor::vec({5.0f}), Tensor::vec({3.0f, 7.0f}));
    CHECK(gx[0] == 3.0f); // the abs branch contributes nothing at the kink
}

TEST_CASE("concat backward matches finite differences of a probe functional") {
    // h(x) = w . phi(x); dh/dx via feature_backward vs central differences.
    const FeatureMap map = concat_map(Tensor::vec({0.1f, -0.4f}));
    const Tensor w = Tensor::vec({0.7f, -1.3f, 0.2f, 0.9f});
    const Tensor x = Tensor::vec({1.0f, 2.0f});
    const Tensor gx = feature_backward(map, x, w);
    for (std::size_t i = 0; i < 2; ++i) {
        const double h = 1e-4;
        Tensor xp = x, xm = x;
        xp[i] += static_cast<float>(h);
        xm[i] -= static_cast<float>(h);
        double up = 0.0, down = 0.0;
        const Tensor zp = feature_apply(map, xp), zm = feature_apply(map, xm);
        for (std::size_t j = 0; j < 4; ++j) {
            up += static_cast<double>(w[j]) * static_cast<double>(zp[j]);
            down += static_cast<double>(w[j]) * static_cast<double>(zm[j]);
        }
        const double fd = (up - down) / (2.0 * h);
        CHECK(std::fabs(fd - static_cast<double>(gx[i])) < 1e-3);
    }
}

TEST_CASE("concat_map_from_mean broadcasts the scalar mean of all entries") {
    const std::vector<Tensor> inputs = {Tensor::vec({0, 2}), Tensor::vec({4, 6})};
    const FeatureMap map = concat_map_from_mean(inputs);
    REQUIRE(map.mu.size() == 2);
    CHECK(map.mu[0] == 3.0f);
    CHECK(map.mu[1] == 3.0f);
}

TEST_CASE("maps validate their dimensions") {
    FeatureMap bad = identity_map(3);
    bad.input_dim = 0;
    CHECK_THROWS_AS(bad.validate(), contract_error);
    FeatureMap mismatched = concat_map(Tensor::vec({1, 2}));
    mismatched.input_dim = 3;
    CHECK_THROWS_AS(mismatched.validate(), contract_error);
    const FeatureMap map = concat_map(Tensor::vec({1, 2}));
    CHECK_THROWS_AS(feature_apply(map, Tensor::vec({1, 2, 3})), contract_error);
}
