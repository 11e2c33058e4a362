// Wall-time comparison of the plain-loop reference kernels against their
// OpenMP counterparts on identical workloads. The parallel kernels promise
// bit-identical results for every thread count, so each row also re-checks
// that the two paths agree before reporting the speedup. On a single-core
// machine the expected speedup is ~1x; the table is still useful there as a
// regression baseline for the serial path.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fcc/certify.hpp"
#include "fcc/eval.hpp"
#include "fcc/feature_map.hpp"
#include "fcc/icnn.hpp"
#include "fcc/parallel.hpp"
#include "fcc/rng.hpp"
#include "fcc/separability.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double run_ms(const std::function<void()>& f) {
    const auto t0 = Clock::now();
    f();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool bits_equal(float a, float b) {
    return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b);
}

bool certs_identical(const std::vector<fcc::Certificate>& a,
                     const std::vector<fcc::Certificate>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].predicted_class != b[i].predicted_class) return false;
        if (!bits_equal(a[i].shifted_logit, b[i].shifted_logit)) return false;
        for (std::size_t k = 0; k < 3; ++k) {
            if (!bits_equal(a[i].radii[k], b[i].radii[k])) return false;
            if (!bits_equal(a[i].dual_norms[k], b[i].dual_norms[k])) return false;
        }
    }
    return true;
}

bool attacks_identical(const std::vector<fcc::AttackResult>& a,
                       const std::vector<fcc::AttackResult>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].success != b[i].success || a[i].steps != b[i].steps) return false;
        if (!bits_equal(a[i].norm, b[i].norm)) return false;
    }
    return true;
}

void row(const std::string& name, double serial_ms, double parallel_ms, bool match) {
    std::printf("%-34s %10.1f %10.1f %8.2fx   %s\n", name.c_str(), serial_ms, parallel_ms,
                serial_ms / parallel_ms, match ? "bit-identical" : "MISMATCH");
}

} // namespace

int main() {
    using namespace fcc;
    const ExecPolicy par{}; // all cores

    // A mid-sized classifier with boosted constrained weights stands in for a
    // trained model: throughput does not depend on the weight values.
    const std::size_t d = 32;
    FeatureMap map = concat_map(Tensor::zeros(d));
    IcnnSpec spec;
    spec.input_dim = map.output_dim();
    spec.hidden_dims = {64, 32};
    spec.seed = 11;
    IcnnParams params = icnn_init(spec);
    for (std::size_t k = 0; k < params.layers(); ++k) {
        if (!params.a_constrained[k]) continue;
        for (std::size_t i = 0; i < params.A[k].numel(); ++i) params.A[k].data()[i] *= 100.0f;
    }
    project_nonnegative(params);
    const FeatureConvexClassifier clf{map, spec, params, 0.0f};

    Rng rng(5150);
    std::vector<Tensor> inputs(4000);
    for (Tensor& x : inputs) {
        x = Tensor::zeros(d);
        for (std::size_t i = 0; i < d; ++i) x[i] = rng.uniform(-1.0f, 1.0f);
    }

    std::printf("threads available: %d\n\n", effective_threads(par));
    std::printf("%-34s %10s %10s %9s   %s\n", "workload", "serial/ms", "openmp/ms", "speedup",
                "agreement");

    // ---- batch certification ------------------------------------------------
    std::vector<Certificate> certs_s, certs_p;
    const double cert_s = run_ms([&] { certs_s = certify_batch_serial(clf, inputs); });
    const double cert_p = run_ms([&] { certs_p = certify_batch(clf, inputs, par); });
    row("certify_batch (4000 x d=32)", cert_s, cert_p, certs_identical(certs_s, certs_p));

    // ---- batch attack -------------------------------------------------------
    std::vector<Tensor> targets;
    std::vector<float> budgets;
    for (std::size_t i = 0; i < inputs.size() && targets.size() < 400; ++i) {
        const float r = certs_s[i].radii[norm_index(Norm::l2)];
        if (certs_s[i].predicted_class != 1 || !std::isfinite(r)) continue;
        targets.push_back(inputs[i]);
        budgets.push_back(1.5f * r);
    }
    std::vector<AttackResult> att_s, att_p;
    const double att_ms_s = run_ms([&] {
        att_s = attack_batch_serial(clf, targets, budgets, Norm::l2, 30, -1.0f, 3, 99);
    });
    const double att_ms_p = run_ms([&] {
        att_p = attack_batch(clf, targets, budgets, Norm::l2, 30, -1.0f, 3, 99, par);
    });
    row("attack_batch (" + std::to_string(targets.size()) + " pts, 30 steps x 3)", att_ms_s,
        att_ms_p, attacks_identical(att_s, att_p));

    // ---- Monte-Carlo separability -------------------------------------------
    double mc_s_val = 0.0, mc_p_val = 0.0;
    const double mc_s = run_ms([&] { mc_s_val = mc_separability_serial(3, 3, 4, 20000, 7); });
    const double mc_p = run_ms([&] { mc_p_val = mc_separability(3, 3, 4, 20000, 7, par); });
    row("mc_separability (3,3,4; 20000)", mc_s, mc_p, mc_s_val == mc_p_val);

    // ---- convex separability decision ----------------------------------------
    Rng prng(6021);
    std::vector<Tensor> X1(150), X2(200);
    for (Tensor& x : X1) {
        x = Tensor::zeros(10);
        for (std::size_t i = 0; i < 10; ++i) x[i] = prng.uniform(-1.0f, 1.0f);
    }
    for (Tensor& x : X2) {
        x = Tensor::zeros(10);
        for (std::size_t i = 0; i < 10; ++i) x[i] = prng.uniform(-1.0f, 1.0f);
    }
    SeparabilityReport rep_s, rep_p;
    const double sep_s = run_ms([&] { rep_s = is_convexly_separable_serial(X1, X2); });
    const double sep_p = run_ms([&] { rep_p = is_convexly_separable(X1, X2, 1e-6, par); });
    bool sep_match = rep_s.separable == rep_p.separable && rep_s.points.size() == rep_p.points.size();
    for (std::size_t i = 0; sep_match && i < rep_s.points.size(); ++i) {
        sep_match = rep_s.points[i].error == rep_p.points[i].error &&
                    rep_s.points[i].separable == rep_p.points[i].separable;
    }
    row("is_convexly_separable (150 vs 200)", sep_s, sep_p, sep_match);

    return 0;
}
