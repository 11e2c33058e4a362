#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fcc/tensor.hpp"

namespace fcc {

// Reverse-mode autodiff over the fixed primitive set the architecture needs.
// Recording is eager: each push computes the node's value immediately, so a
// tape always holds a consistent forward pass. Nodes are identified by the
// order they were recorded in, which is automatically topological.
class Tape {
public:
    enum class Op : std::uint8_t { leaf, matvec, add, sub, scale, relu, abs, sum };

    struct Node {
        Op op;
        int a = -1;     // first operand node id
        int b = -1;     // second operand node id
        float c = 0.0f; // constant for scale
    };

    // ---- recording -------------------------------------------------------

    int leaf(Tensor value);

    int matvec(int W, int x);       // rank-2 (m x n) times rank-1 (n)
    int add(int a, int b);          // elementwise, equal shapes
    int sub(int a, int b);
    int scale(int a, float c);
    int relu(int a);
    int abs(int a);
    int sum(int a);                 // rank-1 result of length 1

    // ---- inspection ------------------------------------------------------

    int node_count() const noexcept { return static_cast<int>(nodes_.size()); }
    const Node& node(int id) const { return nodes_[check(id)]; }
    const Tensor& value(int id) const { return values_[check(id)]; }
    bool is_leaf(int id) const { return nodes_[check(id)].op == Op::leaf; }
    bool is_scalar(int id) const { return values_[check(id)].numel() == 1; }
    std::vector<int> leaf_ids() const;

    // ---- re-execution ----------------------------------------------------

    // Overwrite a leaf's value (same shape) without recomputing; call
    // replay() afterwards to refresh downstream values.
    void set_leaf(int id, const Tensor& v);

    // Recompute every non-leaf value in recording order. Uses the same
    // kernels as recording, so values reproduce bit-exactly.
    void replay();

    // ---- differentiation -------------------------------------------------

    struct Seed {
        int node;
        float weight;
    };

    // Reverse sweep. Every seeded node must be scalar. Returns one adjoint
    // tensor per node (same shape as the node's value); callers typically
    // read off the leaf entries. ReLU uses subgradient 0 at the kink and
    // abs uses sign with sign(0) = 0.
    //
    // When wanted_leaves is non-null, adjoints are accumulated only for the
    // listed leaves (interior nodes always propagate); other leaves get an
    // empty tensor. Certification and attacks need only the input adjoint,
    // and skipping the parameter outer-products roughly halves the sweep.
    std::vector<Tensor> gradient(const std::vector<Seed>& seeds,
                                 const std::vector<int>* wanted_leaves = nullptr) const;
    std::vector<Tensor> gradient(int root, float seed = 1.0f) const;

    // Forward replay of the whole graph in double precision with
    // leaf[leaf_id][coord] shifted by delta; returns the scalar value at
    // root. Exists for finite-difference oracles: the widened arithmetic
    // isolates float32 truncation from method error. If kinks is non-null,
    // the sign bucket of every relu/abs input element is appended
    // (0 negative, 1 positive, 2 exactly zero); comparing buckets across
    // base and shifted replays detects kink crossings.
    double replay_f64(int root, int leaf_id, std::size_t coord, double delta,
                      std::vector<std::uint8_t>* kinks = nullptr) const;

private:
    int check(int id) const;
    int push(Node n, Tensor value);

    std::vector<Node> nodes_;
    std::vector<Tensor> values_;
};

// Builds a graph on the given tape from already-registered input leaves and
// returns the output node ids.
using TapeBuilder = std::function<std::vector<int>(Tape&, const std::vector<int>&)>;

struct Evaluation {
    Tape tape;
    std::vector<int> input_ids;
    std::vector<int> output_ids;
};

// Registers the inputs as leaves, runs the builder, returns the recorded
// tape with input/output ids.
Evaluation evaluate(const TapeBuilder& build, const std::vector<Tensor>& inputs);

// One checked coordinate of one leaf.
struct GradCheckEntry {
    int leaf = -1;
    std::size_t coord = 0;
    double analytic = 0.0;
    double fd = 0.0;
    double rel_err = 0.0;
    bool excluded = false; // perturbation crossed a relu/abs kink
};

struct GradReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_err = 0.0; // over non-excluded entries
    std::size_t checked = 0;
    std::size_t excluded = 0;
    bool pass = false;        // max_rel_err <= tol
    double tol = 0.0;
    double fd_step = 0.0;
};

// Compares gradient() against central finite differences on a 64-bit replay
// of the same graph. The builder must produce exactly one scalar output.
// Every leaf (inputs and builder-registered parameters) is checked; when a
// leaf has more than max_coords_per_leaf entries (0 = no cap), a
// deterministic stride-spread subset of that size is checked instead.
// Relative error uses a unit absolute floor:
//     rel_err = |analytic - fd| / max(1, |analytic|, |fd|).
// Coordinates whose perturbation crosses a relu/abs kink are reported as
// excluded, not failed.
GradReport grad_check(const TapeBuilder& build, const std::vector<Tensor>& inputs,
                      double tol, double fd_step, std::size_t max_coords_per_leaf = 0);

} // namespace fcc
