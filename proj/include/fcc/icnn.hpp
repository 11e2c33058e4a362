#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcc/rng.hpp"
#include "fcc/tape.hpp"
#include "fcc/tensor.hpp"

namespace fcc {

// Upper bound of the uniform init for nonnegativity-constrained weights.
inline constexpr float kConstrainedInitMax = 0.003f;

// Architecture of the input-convex network: layer sizes, whether the input
// feeds forward into every layer (passthrough), and the init seed.
struct IcnnSpec {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden_dims; // n_1 ... n_{L-1}
    bool passthrough = true;
    std::uint64_t seed = 0;

    // Number of affine layers L (hidden count + output layer).
    std::size_t layers() const noexcept { return hidden_dims.size() + 1; }

    // Full dimension chain: input_dim, n_1, ..., n_{L-1}, 1.
    std::vector<std::size_t> dims() const;

    void validate() const; // input_dim >= 1, every hidden dim >= 1, L >= 2
};

// Weights of the network. Layer k (0-based) maps dims[k] -> dims[k+1] via
// A[k] and bias b[k]; for k >= 1 a passthrough matrix C[k] (dims[k+1] x q)
// adds a direct path from the input. C[0] stays empty: a passthrough into
// layer 1 would be algebraically redundant with A[0]. The constraint mask
// marks which A matrices must stay elementwise nonnegative (all but A[0]) —
// that is what makes the network convex in its input.
struct IcnnParams {
    std::vector<Tensor> A;
    std::vector<Tensor> b;
    std::vector<Tensor> C;            // C[0] unused; others empty unless passthrough
    std::vector<char> a_constrained;  // aligned with A
    bool passthrough = true;

    std::size_t layers() const noexcept { return A.size(); }
    std::size_t input_dim() const { return A.empty() ? 0 : A[0].cols(); }

    // Smallest entry over all constrained matrices (>= 0 iff projected).
    float min_constrained_entry() const;

    // Every trainable tensor in the fixed documented order:
    // per layer k ascending, A[k], b[k], then C[k] when present.
    // Serialization, SGD state, and tape graphs all share this order.
    std::vector<Tensor*> trainable();
    std::vector<const Tensor*> trainable() const;
};

// Deterministic initialization: constrained matrices uniform on
// [0, kConstrainedInitMax]; unconstrained matrices (A[0] and every C)
// symmetric uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)]; biases zero.
// Draw order is the trainable order with biases skipped.
IcnnParams icnn_init(const IcnnSpec& spec);

// Shape-consistency check between a spec and a parameter set.
void icnn_validate(const IcnnSpec& spec, const IcnnParams& params);

// Forward logit g(z). Direct evaluation with the same kernels as the tape,
// so the result is bit-identical to the recorded graph's output.
float icnn_forward(const IcnnParams& params, const Tensor& z);

// Reverse-mode d logit / d z; a subgradient of the convex logit at z.
Tensor icnn_input_gradient(const IcnnParams& params, const Tensor& z);

// Both at once over a single recorded graph (cheaper than two calls).
struct LogitAndGrad {
    float logit;
    Tensor grad_z;
};
LogitAndGrad icnn_value_and_input_gradient(const IcnnParams& params, const Tensor& z);

// Clamp constrained matrices at zero. Unconstrained entries untouched;
// idempotent; applied after every optimizer step during training.
void project_nonnegative(IcnnParams& params);

// Recorded forward graph(s) sharing one set of parameter leaves; used by
// training (which differentiates two forward points) and by gradient tests.
struct IcnnGraph {
    Tape tape;
    std::vector<int> param_ids; // aligned with params.trainable()
    int z_id = -1;
    int logit_id = -1;
    int z2_id = -1;     // second evaluation point, if requested
    int logit2_id = -1;
};

IcnnGraph icnn_graph(const IcnnParams& params, const Tensor& z);
IcnnGraph icnn_graph2(const IcnnParams& params, const Tensor& z, const Tensor& z2);

// Serialization (model_io.cpp). Binary: magic, format version, JSON manifest
// (spec, shapes, constraint mask), then raw little-endian float32 blobs in
// trainable order. Round-trip is bit-exact.
void icnn_save(const IcnnParams& params, const IcnnSpec& spec, const std::string& path);
struct IcnnFile {
    IcnnParams params;
    IcnnSpec spec;
};
IcnnFile icnn_load(const std::string& path);

} // namespace fcc
