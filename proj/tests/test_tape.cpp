#include "doctest.h"

#include <cmath>

#include "fcc/errors.hpp"
#include "fcc/rng.hpp"
#include "fcc/tape.hpp"

using namespace fcc;

namespace {

// y = sum(relu(W x + b)) as a reusable builder; inputs: {W, b, x}.
std::vector<int> relu_affine_sum(Tape& t, const std::vector<int>& in) {
    const int wx = t.matvec(in[0], in[2]);
    const int pre = t.add(wx, in[1]);
    return {t.sum(t.relu(pre))};
}

} // namespace

TEST_CASE("evaluate runs an affine graph forward") {
    const Tensor W = Tensor::matrix(2, 2, {1, -1, 2, 0});
    const Tensor b = Tensor::vec({0.5f, -3.0f});
    const Tensor x = Tensor::vec({2, 1});
    Evaluation ev = evaluate(relu_affine_sum, {W, b, x});
    REQUIRE(ev.output_ids.size() == 1);
    // Wx+b = (1.5, 1), relu keeps both, sum = 2.5
    CHECK(ev.tape.value(ev.output_ids[0])[0] == 2.5f);
}

TEST_CASE("set_leaf plus replay refreshes downstream values bit-exactly") {
    Evaluation ev = evaluate(relu_affine_sum, {Tensor::matrix(1, 1, {2.0f}), Tensor::vec({0.0f}),
                                               Tensor::vec({3.0f})});
    CHECK(ev.tape.value(ev.output_ids[0])[0] == 6.0f);
    ev.tape.set_leaf(ev.input_ids[2], Tensor::vec({-5.0f}));
    ev.tape.replay();
    CHECK(ev.tape.value(ev.output_ids[0])[0] == 0.0f); // relu kills the negative preactivation
}

TEST_CASE("gradient of a linear graph is the weight row") {
    Tape t;
    const int W = t.leaf(Tensor::matrix(1, 3, {2, -3, 4}));
    const int x = t.leaf(Tensor::vec({1, 1, 1}));
    const int y = t.sum(t.matvec(W, x));
    const auto grads = t.gradient(y);
    const Tensor& gx = grads[1];
    CHECK(gx[0] == 2.0f);
    CHECK(gx[1] == -3.0f);
    CHECK(gx[2] == 4.0f);
    // and d/dW is x broadcast across the row
    CHECK(grads[0].at(0, 0) == 1.0f);
    CHECK(grads[0].at(0, 2) == 1.0f);
}

TEST_CASE("relu and abs use subgradient zero exactly at the kink") {
    Tape t;
    const int x = t.leaf(Tensor::vec({0.0f, -2.0f, 3.0f}));
    const int y = t.sum(t.relu(x));
    const Tensor gx = t.gradient(y)[0];
    CHECK(gx[0] == 0.0f);
    CHECK(gx[1] == 0.0f);
    CHECK(gx[2] == 1.0f);

    Tape t2;
    const int x2 = t2.leaf(Tensor::vec({0.0f, -2.0f, 3.0f}));
    const int y2 = t2.sum(t2.abs(x2));
    const Tensor gx2 = t2.gradient(y2)[0];
    CHECK(gx2[0] == 0.0f);
    CHECK(gx2[1] == -1.0f);
    CHECK(gx2[2] == 1.0f);
}

TEST_CASE("selective backward returns the same input gradient as the full pass") {
    Rng rng(31);
    Tape t;
    Tensor W1 = Tensor::zeros(4, 3), W2 = Tensor::zeros(1, 4);
    for (std::size_t i = 0; i < W1.numel(); ++i) W1.data()[i] = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < W2.numel(); ++i) W2.data()[i] = rng.uniform(-1, 1);
    const int w1 = t.leaf(W1), w2 = t.leaf(W2);
    const int x = t.leaf(Tensor::vec({0.3f, -0.7f, 0.9f}));
    const int y = t.sum(t.matvec(w2, t.relu(t.matvec(w1, x))));

    const auto full = t.gradient(y);
    const std::vector<int> wanted = {x};
    const auto partial = t.gradient({{y, 1.0f}}, &wanted);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(partial[2][i] == full[2][i]);
    }
    // unwanted leaves come back empty rather than zero-filled
    CHECK(partial[0].numel() == 0);
}

TEST_CASE("multi-seed gradient equals the weighted sum of single-seed gradients") {
    Tape t;
    const int x = t.leaf(Tensor::vec({1.5f, -0.5f}));
    const int a = t.sum(t.relu(x));
    const int b = t.sum(t.abs(x));
    const auto ga = t.gradient(a);
    const auto gb = t.gradient(b);
    const auto combo = t.gradient({{a, 2.0f}, {b, -3.0f}});
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(combo[0][i] == 2.0f * ga[0][i] + -3.0f * gb[0][i]);
    }
}

TEST_CASE("replay_f64 matches the 32-bit forward on smooth inputs") {
    Rng rng(7);
    std::vector<Tensor> inputs = {Tensor::zeros(3, 2), Tensor::zeros(3), Tensor::zeros(2)};
    for (Tensor& in : inputs) {
        for (std::size_t i = 0; i < in.numel(); ++i) in.data()[i] = rng.uniform(-1, 1);
    }
    Evaluation ev = evaluate(relu_affine_sum, inputs);
    const double f64 = ev.tape.replay_f64(ev.output_ids[0], -1, 0, 0.0);
    const float f32 = ev.tape.value(ev.output_ids[0])[0];
    CHECK(std::fabs(f64 - static_cast<double>(f32)) < 1e-5);
}

TEST_CASE("grad_check is exact on a linear graph") {
    const GradReport rep = grad_check(
        [](Tape& t, const std::vector<int>& in) {
            return std::vector<int>{t.sum(t.matvec(in[0], in[1]))};
        },
        {Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}), Tensor::vec({0.5f, -1.5f, 2.5f})},
        /*tol=*/1e-12, /*fd_step=*/1e-3);
    CHECK(rep.pass);
    // Linear in every leaf, so the quotient has no truncation term; what
    // remains is double rounding of the shifted values (the step 1e-3 is not
    // dyadic), orders of magnitude under any nonlinear graph's O(h^2) error.
    CHECK(rep.max_rel_err <= 1e-12);
    CHECK(rep.excluded == 0);
}

TEST_CASE("grad_check passes a three-layer ReLU MLP at 1e-4") {
    Rng rng(123);
    std::vector<Tensor> inputs;
    inputs.push_back(Tensor::zeros(8, 5));
    inputs.push_back(Tensor::zeros(8));
    inputs.push_back(Tensor::zeros(4, 8));
    inputs.push_back(Tensor::zeros(4));
    inputs.push_back(Tensor::zeros(1, 4));
    inputs.push_back(Tensor::zeros(5));
    for (Tensor& in : inputs) {
        for (std::size_t i = 0; i < in.numel(); ++i) in.data()[i] = rng.uniform(-1, 1);
    }
    const GradReport rep = grad_check(
        [](Tape& t, const std::vector<int>& in) {
            const int h1 = t.relu(t.add(t.matvec(in[0], in[5]), in[1]));
            const int h2 = t.relu(t.add(t.matvec(in[2], h1), in[3]));
            return std::vector<int>{t.sum(t.matvec(in[4], h2))};
        },
        inputs, /*tol=*/1e-4, /*fd_step=*/1e-3);
    CHECK(rep.pass);
    CHECK(rep.checked > 0);
}

TEST_CASE("grad_check excludes coordinates whose perturbation crosses a kink") {
    // relu at exactly zero: any finite step crosses the kink, so the entry
    // must be reported excluded rather than failed.
    const GradReport rep = grad_check(
        [](Tape& t, const std::vector<int>& in) {
            return std::vector<int>{t.sum(t.relu(in[0]))};
        },
        {Tensor::vec({0.0f})}, /*tol=*/1e-6, /*fd_step=*/1e-3);
    CHECK(rep.pass);
    CHECK(rep.excluded == 1);
    CHECK(rep.entries[0].excluded);
}

TEST_CASE("grad_check caps per-leaf coordinates deterministically") {
    Rng rng(9);
    Tensor big = Tensor::zeros(100);
    for (std::size_t i = 0; i < 100; ++i) big.data()[i] = rng.uniform(-1, 1);
    const auto build = [](Tape& t, const std::vector<int>& in) {
        return std::vector<int>{t.sum(t.abs(in[0]))};
    };
    const GradReport rep = grad_check(build, {big}, 1e-4, 1e-3, /*max_coords_per_leaf=*/10);
    CHECK(rep.checked == 10);
    const GradReport rep2 = grad_check(build, {big}, 1e-4, 1e-3, 10);
    REQUIRE(rep2.entries.size() == rep.entries.size());
    for (std::size_t i = 0; i < rep.entries.size(); ++i) {
        CHECK(rep.entries[i].coord == rep2.entries[i].coord);
    }
}

TEST_CASE("grad_check rejects bad tolerances and non-scalar outputs") {
    const auto build = [](Tape& t, const std::vector<int>& in) {
        return std::vector<int>{t.relu(in[0])}; // 2-vector output, not scalar
    };
    CHECK_THROWS_AS(grad_check(build, {Tensor::vec({1, 2})}, 1e-4, 1e-3), contract_error);
    const auto scalar = [](Tape& t, const std::vector<int>& in) {
        return std::vector<int>{t.sum(in[0])};
    };
    CHECK_THROWS_AS(grad_check(scalar, {Tensor::vec({1})}, 0.0, 1e-3), contract_error);
    CHECK_THROWS_AS(grad_check(scalar, {Tensor::vec({1})}, 1e-4, 0.0), contract_error);
}
