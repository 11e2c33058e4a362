#pragma once

#include <array>
#include <string>
#include <vector>

#include "fcc/feature_map.hpp"
#include "fcc/icnn.hpp"
#include "fcc/parallel.hpp"

namespace fcc {

// Dual norms below this are treated as numerically zero. The zero-gradient
// case only arises for (effectively) constant-positive classifiers, where an
// unbounded radius is the correct answer.
inline constexpr float kGradDualTol = 1e-12f;

// Binary classifier: predict 1 iff g(φ(x)) + τ > 0, else 2. Class 1 is the
// sensitive class — the only one certificates are issued for.
struct FeatureConvexClassifier {
    FeatureMap map;
    IcnnSpec spec;
    IcnnParams params;
    float tau = 0.0f;

    void validate() const; // map/icnn dims chain; params shapes consistent
};

// ‖v‖_{p,*}: p=1 → max|vᵢ|; p=2 → ‖v‖₂; p=∞ → Σ|vᵢ|.
float dual_norm(Norm p, const Tensor& v);

// Logit before the threshold shift: g(φ(x)).
float raw_logit(const FeatureConvexClassifier& clf, const Tensor& x);

int predict(const FeatureConvexClassifier& clf, const Tensor& x);

// d(logit)/dx — the input-space gradient, chained through the feature map.
Tensor input_gradient_x(const FeatureConvexClassifier& clf, const Tensor& x);

// Closed-form robustness certificate. radius[p] bounds the ℓp perturbation
// that can flip a class-1 prediction:
//   predicted 2                     → radius 0 (nothing to certify)
//   predicted 1, dual norm ≤ tol    → radius +∞ (constant-positive case)
//   predicted 1, dual norm > tol    → (g(φ(x)) + τ) / (Lip_p(φ) · ‖∇g‖_{p,*})
// All stored values are float32, matching the forward/backward arithmetic.
struct Certificate {
    int predicted_class = 2;
    float shifted_logit = 0.0f;        // g(φ(x)) + τ
    Tensor grad;                       // ∇g(φ(x)) with respect to z, dim q
    std::array<float, 3> dual_norms{}; // indexed by norm_index()
    std::array<float, 3> radii{};
};

// Certificate covering all three supported norms at once (the gradient pass
// dominates; the per-norm work is a reduction over it).
Certificate certify(const FeatureConvexClassifier& clf, const Tensor& x);

// Single-norm view of certify(), kept for call sites that speak in one p.
Certificate certified_radius(const FeatureConvexClassifier& clf, const Tensor& x, Norm p);

// Batch certification. The plain-loop reference and the OpenMP kernel are
// both exposed; they agree bit-for-bit (per-sample slots, no shared state).
std::vector<Certificate> certify_batch_serial(const FeatureConvexClassifier& clf,
                                              const std::vector<Tensor>& inputs);
std::vector<Certificate> certify_batch(const FeatureConvexClassifier& clf,
                                       const std::vector<Tensor>& inputs,
                                       const ExecPolicy& policy);

// CSV: index, true_class, predicted_class, logit, radius_l1, radius_l2,
// radius_linf. Unbounded radii serialize as the literal "inf".
void write_certificates_csv(const std::string& path, const std::vector<int>& true_labels,
                            const std::vector<Certificate>& certs);

// Classifier artifact serialization (model_io.cpp): same container format as
// icnn_save plus the feature map and τ. Round-trip is bit-exact.
void model_save(const FeatureConvexClassifier& clf, const std::string& path);
FeatureConvexClassifier model_load(const std::string& path);

} // namespace fcc
