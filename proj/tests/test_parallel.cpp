#include "doctest.h"

#include <array>
#include <bit>
#include <cstdint>

#include "fcc/certify.hpp"
#include "fcc/data.hpp"
#include "fcc/eval.hpp"
#include "fcc/separability.hpp"
#include "fcc/train.hpp"

using namespace fcc;

namespace {

bool bits_equal(float a, float b) {
    return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b);
}

bool bits_equal(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool tensors_identical(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        if (!bits_equal(a.data()[i], b.data()[i])) return false;
    }
    return true;
}

bool params_identical(const IcnnParams& a, const IcnnParams& b) {
    if (a.A.size() != b.A.size() || a.b.size() != b.b.size() || a.C.size() != b.C.size()) {
        return false;
    }
    for (std::size_t l = 0; l < a.A.size(); ++l) {
        if (!tensors_identical(a.A[l], b.A[l])) return false;
        if (!tensors_identical(a.b[l], b.b[l])) return false;
        if (!tensors_identical(a.C[l], b.C[l])) return false;
    }
    return true;
}

// Small trained 2-D model shared by the batch-kernel comparisons.
const TrainResult& ring_model() {
    static const TrainResult result = [] {
        const Dataset ds = make_ring(60, 60, 1.0f, 3.0f, 0.1f, 17, true);
        IcnnSpec spec;
        spec.input_dim = 4; // concat map doubles the dimension
        spec.hidden_dims = {16, 8};
        spec.seed = 5;
        TrainConfig cfg;
        cfg.epochs = 5;
        cfg.seed = 9;
        return train(spec, concat_map_from_mean(ds.inputs), ds, cfg);
    }();
    return result;
}

} // namespace

TEST_CASE("certify_batch matches the serial reference bit for bit") {
    const FeatureConvexClassifier& clf = ring_model().classifier;
    const Dataset ds = make_ring(40, 40, 1.0f, 3.0f, 0.1f, 23, true);
    const auto serial = certify_batch_serial(clf, ds.inputs);
    for (int threads : {0, 3}) {
        const auto parallel = certify_batch(clf, ds.inputs, ExecPolicy{threads});
        REQUIRE(parallel.size() == serial.size());
        for (std::size_t i = 0; i < serial.size(); ++i) {
            CHECK(parallel[i].predicted_class == serial[i].predicted_class);
            CHECK(bits_equal(parallel[i].shifted_logit, serial[i].shifted_logit));
            CHECK(tensors_identical(parallel[i].grad, serial[i].grad));
            for (int k = 0; k < 3; ++k) {
                CHECK(bits_equal(parallel[i].dual_norms[k], serial[i].dual_norms[k]));
                CHECK(bits_equal(parallel[i].radii[k], serial[i].radii[k]));
            }
        }
    }
}

TEST_CASE("attack_batch matches the serial reference bit for bit") {
    const FeatureConvexClassifier& clf = ring_model().classifier;
    const Dataset probe = make_ring(30, 30, 1.0f, 3.0f, 0.1f, 29, true);
    std::vector<Tensor> inputs;
    std::vector<float> budgets;
    const auto certs = certify_batch_serial(clf, probe.inputs);
    for (std::size_t i = 0; i < certs.size(); ++i) {
        if (certs[i].predicted_class != 1) continue;
        inputs.push_back(probe.inputs[i]);
        budgets.push_back(1.5f * certs[i].radii[norm_index(Norm::l2)]);
    }
    REQUIRE(inputs.size() > 10);
    const auto serial = attack_batch_serial(clf, inputs, budgets, Norm::l2, 20, -1.0f, 3, 77);
    for (int threads : {0, 3}) {
        const auto parallel =
            attack_batch(clf, inputs, budgets, Norm::l2, 20, -1.0f, 3, 77, ExecPolicy{threads});
        REQUIRE(parallel.size() == serial.size());
        for (std::size_t i = 0; i < serial.size(); ++i) {
            CHECK(parallel[i].success == serial[i].success);
            CHECK(parallel[i].steps == serial[i].steps);
            CHECK(bits_equal(parallel[i].norm, serial[i].norm));
            CHECK(tensors_identical(parallel[i].delta, serial[i].delta));
        }
    }
}

TEST_CASE("monte-carlo separability frequency is thread-count independent") {
    const std::array<std::array<int, 3>, 3> cases = {{{2, 2, 1}, {3, 2, 2}, {1, 3, 2}}};
    for (const auto& [M, N, d] : cases) {
        const double serial = mc_separability_serial(M, N, d, 400, 51);
        CHECK(bits_equal(mc_separability(M, N, d, 400, 51, ExecPolicy{1}), serial));
        CHECK(bits_equal(mc_separability(M, N, d, 400, 51, ExecPolicy{0}), serial));
        CHECK(bits_equal(mc_separability(M, N, d, 400, 51, ExecPolicy{3}), serial));
    }
}

TEST_CASE("separability reports agree between serial and parallel drivers") {
    Rng rng(63);
    std::vector<Tensor> X1, X2;
    for (int i = 0; i < 25; ++i) {
        X1.push_back(Tensor::vec({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}));
        X2.push_back(Tensor::vec({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}));
    }
    const SeparabilityReport serial = is_convexly_separable_serial(X1, X2);
    const SeparabilityReport parallel = is_convexly_separable(X1, X2, 1e-6, ExecPolicy{0});
    CHECK(parallel.separable == serial.separable);
    CHECK(parallel.witness == serial.witness);
    CHECK(bits_equal(parallel.min_error, serial.min_error));
    REQUIRE(parallel.points.size() == serial.points.size());
    for (std::size_t i = 0; i < serial.points.size(); ++i) {
        CHECK(parallel.points[i].point_index == serial.points[i].point_index);
        CHECK(parallel.points[i].separable == serial.points[i].separable);
        CHECK(bits_equal(parallel.points[i].error, serial.points[i].error));
        CHECK(bits_equal(parallel.points[i].gap, serial.points[i].gap));
    }
}

TEST_CASE("training is bit-identical across thread counts") {
    const Dataset ds = make_ring(70, 50, 1.0f, 3.0f, 0.15f, 41, true);
    IcnnSpec spec;
    spec.input_dim = 2;
    spec.hidden_dims = {12, 6};
    spec.seed = 11;
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.jacobian_lambda = 0.01f;
    cfg.seed = 13;

    const TrainResult serial = train(spec, identity_map(2), ds, cfg, ExecPolicy{1});
    for (int threads : {0, 3}) {
        const TrainResult parallel = train(spec, identity_map(2), ds, cfg, ExecPolicy{threads});
        CHECK(params_identical(parallel.classifier.params, serial.classifier.params));
        CHECK(bits_equal(parallel.classifier.tau, serial.classifier.tau));
        REQUIRE(parallel.history.size() == serial.history.size());
        for (std::size_t e = 0; e < serial.history.size(); ++e) {
            CHECK(parallel.history[e].epoch == serial.history[e].epoch);
            CHECK(bits_equal(parallel.history[e].loss, serial.history[e].loss));
            CHECK(bits_equal(parallel.history[e].train_acc, serial.history[e].train_acc));
            CHECK(bits_equal(parallel.history[e].val_balanced_acc,
                             serial.history[e].val_balanced_acc));
            CHECK(bits_equal(parallel.history[e].lr, serial.history[e].lr));
        }
    }
}

TEST_CASE("curve evaluation is thread-count independent") {
    const FeatureConvexClassifier& clf = ring_model().classifier;
    const Dataset ds = make_ring(40, 40, 1.0f, 3.0f, 0.1f, 33, true);
    std::vector<float> radii;
    for (int i = 0; i <= 30; ++i) radii.push_back(0.05f * static_cast<float>(i));
    const auto serial = certified_accuracy_curve(clf, ds, Norm::linf, radii, ExecPolicy{1});
    const auto parallel = certified_accuracy_curve(clf, ds, Norm::linf, radii, ExecPolicy{0});
    REQUIRE(parallel.size() == serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(bits_equal(parallel[i].radius, serial[i].radius));
        CHECK(bits_equal(parallel[i].certified_accuracy, serial[i].certified_accuracy));
    }
}
