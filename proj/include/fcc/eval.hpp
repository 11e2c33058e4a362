#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fcc/certify.hpp"
#include "fcc/data.hpp"

namespace fcc {

// (α₁, α₂): per-class clean accuracies. Both classes must be present.
std::pair<double, double> clean_accuracies(const FeatureConvexClassifier& clf, const Dataset& ds);

struct CurvePoint {
    float radius = 0.0f;
    double certified_accuracy = 0.0; // Γ(r, τ) over class-1 samples
};

// Γ(r, τ) = |{class-1 x : predicted 1 and radius_p(x) ≥ r}| / |class 1|,
// evaluated on an ascending radii grid starting at 0 (so Γ(0) = α₁).
std::vector<CurvePoint> certified_accuracy_curve(const FeatureConvexClassifier& clf,
                                                 const Dataset& ds, Norm p,
                                                 const std::vector<float>& radii,
                                                 const ExecPolicy& policy = {});

struct SurfaceRow {
    float tau = 0.0f;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    std::vector<CurvePoint> curve;
};

struct SurfaceGrid {
    std::vector<SurfaceRow> rows; // one per τ, ascending
};

// Γ(r, τ) across a τ grid. The expensive per-sample quantities (raw logit,
// gradient dual norm) do not depend on τ, so they are certified once and
// every row is pure arithmetic on the cache. Row radii reproduce certify()'s
// float arithmetic exactly.
SurfaceGrid robustness_surface(const FeatureConvexClassifier& clf, const Dataset& ds, Norm p,
                               const std::vector<float>& taus, const std::vector<float>& radii,
                               const ExecPolicy& policy = {});

// Default surface τ grid: `count` evenly spaced quantiles of the given
// logits, negated (τ = -threshold), sorted ascending.
std::vector<float> quantile_tau_grid(std::vector<float> logits, std::size_t count = 41);

struct AttackResult {
    bool success = false;
    Tensor delta;       // the flipping perturbation when success
    float norm = 0.0f;  // ‖δ‖_p of the returned delta
    int steps = 0;      // total gradient steps used across restarts
};

// Projected gradient descent on the logit inside the ℓp ball of the given
// budget; succeeds iff predict(x + δ) = 2 for some reached δ. First restart
// starts at δ = 0, later restarts at a random point of the ball (per-restart
// derived seeds). step_size <= 0 selects the default 2·budget/steps. The
// perturbed point is NOT clamped to the data range: certificates are stated
// over all of R^d, so the audit attacks the same space.
AttackResult pgd_attack(const FeatureConvexClassifier& clf, const Tensor& x, Norm p, float budget,
                        int steps, float step_size, int restarts, std::uint64_t seed);

// Batch audit: one attack per input with its own budget (entries with
// budget <= 0 or non-finite are skipped and reported as non-successes).
// Per-sample derived seeds keep results independent of the thread count.
std::vector<AttackResult> attack_batch_serial(const FeatureConvexClassifier& clf,
                                              const std::vector<Tensor>& inputs,
                                              const std::vector<float>& budgets, Norm p, int steps,
                                              float step_size, int restarts, std::uint64_t seed);
std::vector<AttackResult> attack_batch(const FeatureConvexClassifier& clf,
                                       const std::vector<Tensor>& inputs,
                                       const std::vector<float>& budgets, Norm p, int steps,
                                       float step_size, int restarts, std::uint64_t seed,
                                       const ExecPolicy& policy);

// CSV writers. Curve: (radius, certified_accuracy). Surface: one row per
// (tau, radius) pair: (tau, alpha1, alpha2, radius, certified_accuracy).
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve);
void write_surface_csv(const std::string& path, const SurfaceGrid& grid);

} // namespace fcc
