#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fcc/parallel.hpp"
#include "fcc/tensor.hpp"

namespace fcc {

// Simplex-constrained least-squares reconstruction of a point from a vertex
// set, solved with Frank-Wolfe (conditional gradient). All solver arithmetic
// is double precision; the duality gap certifies suboptimality of the result.
struct ReconstructionResult {
    std::vector<double> alpha; // simplex weights, alpha >= 0 and sum == 1 by construction
    double error = 0.0;        // ‖x − Σ_j alpha_j y_j‖₂ at termination
    double gap = 0.0;          // Frank-Wolfe duality gap at termination
    std::size_t iters = 0;     // line-search steps taken
};

// Minimize ‖x − Σ_j alpha_j y_j‖² over the simplex. Stops when the duality
// gap falls below tol·(1 + error²) or after max_iters steps (0 means 50·|Y|).
// The optimal squared error is at least error² − gap.
ReconstructionResult convex_reconstruction(const Tensor& x, const std::vector<Tensor>& Y,
                                           double tol = 1e-9, std::size_t max_iters = 0);

struct PointReconstruction {
    std::size_t point_index = 0;
    std::vector<double> alpha;
    double error = 0.0;
    double gap = 0.0;
    bool separable = false; // error > verdict tolerance
};

struct SeparabilityReport {
    std::vector<PointReconstruction> points; // one per X1 point, in order
    bool separable = false;                  // min error > tol over all X1 points
    std::optional<std::size_t> witness;      // smallest X1 index inside conv(X2), when any
    double min_error = 0.0;
    double tol = 0.0; // verdict threshold the flags were computed against
};

// (X1, X2) is convexly separable iff no X1 point lies in conv(X2); decided by
// reconstructing every X1 point from X2 and thresholding the residual.
SeparabilityReport is_convexly_separable_serial(const std::vector<Tensor>& X1,
                                                const std::vector<Tensor>& X2, double tol = 1e-6);
SeparabilityReport is_convexly_separable(const std::vector<Tensor>& X1,
                                         const std::vector<Tensor>& X2, double tol = 1e-6,
                                         const ExecPolicy& policy = {});

// Fast sufficient separability witness: the smallest coordinate k on which
// every X1 point lies strictly below every X2 point, if one exists.
std::optional<std::size_t> slab_check(const std::vector<Tensor>& X1,
                                      const std::vector<Tensor>& X2);

// Lower bound on the probability that M + N i.i.d. uniform points on [−1,1]^d
// (M in class 1, N in class 2) are convexly separable:
// 1 − (1 − M!N!/(M+N)!)^d, and exactly 1 once d ≥ M + N.
double thm4_bound(int M, int N, int d);

// Empirical separability frequency over `trials` random draws as above.
// Deterministic per seed; identical across thread counts.
double mc_separability_serial(int M, int N, int d, std::size_t trials, std::uint64_t seed);
double mc_separability(int M, int N, int d, std::size_t trials, std::uint64_t seed,
                       const ExecPolicy& policy = {});

void write_separability_csv(const std::string& path, const SeparabilityReport& report);
void write_mc_summary_json(const std::string& path, int M, int N, int d, std::size_t trials,
                           double frequency, double bound);

} // namespace fcc
