#pragma once

#include <array>
#include <string>
#include <vector>

#include "fcc/tensor.hpp"

namespace fcc {

// The three norms supported end-to-end. Dual-norm evaluation and ball
// projections are closed-form exactly for these.
enum class Norm { l1, l2, linf };

inline constexpr std::array<Norm, 3> kAllNorms{Norm::l1, Norm::l2, Norm::linf};

// Stable index for per-norm arrays.
constexpr std::size_t norm_index(Norm p) { return static_cast<std::size_t>(p); }

std::string norm_name(Norm p);                 // "1", "2", "inf"
Norm norm_from_string(const std::string& s);   // throws contract_error on anything else

// Lipschitz feature map φ: R^d -> R^q. Two kinds:
//   identity                 φ(x) = x,            q = d
//   mean_offset_abs_concat   φ(x) = (x-µ, |x-µ|), q = 2d
// µ is a constant offset (dataset channel mean) frozen at construction, so
// certification never depends on data availability.
struct FeatureMap {
    enum class Kind { identity, mean_offset_abs_concat };

    Kind kind = Kind::identity;
    std::size_t input_dim = 0; // d
    Tensor mu;                 // size d; only for the concat kind

    std::size_t output_dim() const noexcept {
        return kind == Kind::identity ? input_dim : 2 * input_dim;
    }

    void validate() const;
};

FeatureMap identity_map(std::size_t d);
FeatureMap concat_map(Tensor mu);

// Concat map with µ = scalar mean of every entry of the training inputs,
// broadcast to the input layout (single-channel data).
FeatureMap concat_map_from_mean(const std::vector<Tensor>& train_inputs);

Tensor feature_apply(const FeatureMap& map, const Tensor& x);

// Closed-form Lipschitz constant of φ under the p-norm:
// identity → 1; concat → 2 (p=1), √2 (p=2), 1 (p=∞).
float feature_lipschitz(const FeatureMap& map, Norm p);

// Chain rule through φ: given d(logit)/dz at z = φ(x), returns d(logit)/dx.
// The |x-µ| branch uses sign with sign(0) = 0, matching the tape's abs rule.
Tensor feature_backward(const FeatureMap& map, const Tensor& x, const Tensor& grad_z);

} // namespace fcc
