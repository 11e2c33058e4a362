#pragma once

#include <cstdint>
#include <vector>

#include "fcc/certify.hpp"
#include "fcc/data.hpp"
#include "fcc/parallel.hpp"

namespace fcc {

// Optimizer and regularizer settings. Defaults follow the reference recipe:
// SGD with heavy-ball momentum 0.9, learning rate 1e-3 with per-epoch
// exponential decay 0.99, batch 64, Jacobian penalty weight 0.01.
struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    float learning_rate = 0.001f;
    float momentum = 0.9f;
    float lr_decay_gamma = 0.99f;   // applied once per epoch
    float jacobian_lambda = 0.01f;  // 0 disables the penalty entirely
    float jacobian_fd_step = 0.01f; // ε for the directional estimator
    std::uint64_t seed = 0;
    bool augment = false;           // pad-and-crop on (square) image inputs
    std::size_t augment_pad = 1;
    float val_fraction = 0.2f;      // stratified 80/20 split

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;          // 1-based
    double loss = 0.0;              // mean training loss (BCE + penalty)
    double train_acc = 0.0;         // clean full-pass accuracy at τ = 0
    double val_balanced_acc = 0.0;  // (α₁+α₂)/2 on the validation split, τ = 0
    float lr = 0.0f;                // learning rate used this epoch
};

using TrainHistory = std::vector<EpochStats>;

// Binary cross entropy on the raw logit, evaluated in the stable softplus
// form (never overflows): label 1 → softplus(-logit), label 2 → softplus(logit).
float bce_loss(float logit, int label);

// Directional finite-difference estimator of ‖∇g(φ(x))‖₂², the squared
// Frobenius norm of the (1-row) network Jacobian:
//     q · ((g(z + ε·u) - g(z)) / ε)²,  z = φ(x),  u uniform on the sphere.
// Exact in expectation for linear g at any ε; consumes q normal draws.
float jacobian_penalty(const FeatureConvexClassifier& clf, const Tensor& x, float eps, Rng& rng);

// Threshold choice: sweeps candidate decision thresholds at midpoints
// between consecutive distinct sorted logits plus finite stand-ins one unit
// past each extreme (behaviorally ±∞ for the given logits), and returns the
// τ = -threshold minimizing |α₁ - α₂|. Ties break toward larger τ, favoring
// larger sensitive-class radii. Labels must contain both classes.
float balance_threshold(const std::vector<float>& logits, const std::vector<int>& labels);

struct TrainResult {
    FeatureConvexClassifier classifier;
    TrainHistory history;
};

// Mini-batch SGD with momentum on BCE + λ·(Jacobian penalty), constrained
// weights projected after every step, exponential lr decay per epoch, and a
// stratified validation split used to balance τ at the end. Deterministic
// given config.seed for every thread count: all randomness (split, epoch
// shuffles, augmentation offsets, penalty directions) is drawn serially in
// sample order; the parallel part only evaluates per-sample gradients, which
// are reduced in ascending sample order.
TrainResult train(const IcnnSpec& spec, const FeatureMap& map, const Dataset& dataset,
                  const TrainConfig& config, const ExecPolicy& policy = {});

// History CSV: epoch, loss, train_acc, val_balanced_acc, lr.
void write_history_csv(const std::string& path, const TrainHistory& history);

} // namespace fcc
