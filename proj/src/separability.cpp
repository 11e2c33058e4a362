#include "fcc/separability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "fcc/csv.hpp"
#include "fcc/errors.hpp"
#include "fcc/rng.hpp"

namespace fcc {

namespace {

void check_point_set(const std::vector<Tensor>& pts, const char* name) {
    if (pts.empty()) throw contract_error(std::string(name) + " must be nonempty");
    const std::size_t d = pts.front().size();
    for (const Tensor& p : pts) {
        if (p.size() != d) throw contract_error(std::string(name) + " has inconsistent dimensions");
        if (!p.all_finite()) throw contract_error(std::string(name) + " has non-finite entries");
    }
}

double sq_dist(const Tensor& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - b[i];
        acc += diff * diff;
    }
    return acc;
}

} // namespace

ReconstructionResult convex_reconstruction(const Tensor& x, const std::vector<Tensor>& Y,
                                           double tol, std::size_t max_iters) {
    check_point_set(Y, "vertex set");
    const std::size_t n = Y.size();
    const std::size_t d = x.size();
    if (Y.front().size() != d) throw contract_error("convex_reconstruction: dimension mismatch");
    if (!(tol > 0.0)) throw contract_error("convex_reconstruction: tol must be positive");
    if (max_iters == 0) max_iters = 50 * n;

    // Start at the nearest vertex (ties to the smallest index); the spec's
    // boundary cases then terminate at the exact optimum in at most one step.
    std::size_t init = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double diff = static_cast<double>(Y[j][i]) - static_cast<double>(x[i]);
            acc += diff * diff;
        }
        if (acc < best) {
            best = acc;
            init = j;
        }
    }

    ReconstructionResult result;
    result.alpha.assign(n, 0.0);
    result.alpha[init] = 1.0;

    std::vector<double> p(d); // current point Yα, updated incrementally
    for (std::size_t i = 0; i < d; ++i) p[i] = static_cast<double>(Y[init][i]);

    std::vector<double> grad(n);
    for (;;) {
        if (result.iters % 64 == 0 && result.iters > 0) {
            // Periodically rebuild p from α to flush incremental-update drift.
            std::fill(p.begin(), p.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (result.alpha[j] == 0.0) continue;
                for (std::size_t i = 0; i < d; ++i) {
                    p[i] += result.alpha[j] * static_cast<double>(Y[j][i]);
                }
            }
        }

        const double f = sq_dist(x, p); // ‖p − x‖², with r = p − x below

        // ∇f(α)_j = 2·y_jᵀ(p − x); the linear minimizer over the simplex is a vertex.
        std::size_t s = 0;
        double grad_min = std::numeric_limits<double>::infinity();
        double grad_dot_alpha = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double g = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                g += static_cast<double>(Y[j][i]) * (p[i] - static_cast<double>(x[i]));
            }
            g *= 2.0;
            grad[j] = g;
            grad_dot_alpha += result.alpha[j] * g;
            if (g < grad_min) {
                grad_min = g;
                s = j;
            }
        }
        result.gap = grad_dot_alpha - grad_min; // ∇fᵀ(α − e_s)
        if (result.gap < 0.0) result.gap = 0.0; // rounding guard; exact value is ≥ 0

        if (result.gap <= tol * (1.0 + f) || result.iters >= max_iters) break;

        // Exact line search toward vertex s: minimize ‖r + γ·u‖² over γ ∈ [0,1].
        double uu = 0.0, ru = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double u = static_cast<double>(Y[s][i]) - p[i];
            const double r = p[i] - static_cast<double>(x[i]);
            uu += u * u;
            ru += r * u;
        }
        if (uu <= 0.0) break; // target vertex coincides with the iterate
        const double gamma = std::clamp(-ru / uu, 0.0, 1.0);
        if (gamma == 0.0) break;

        for (double& a : result.alpha) a *= 1.0 - gamma;
        result.alpha[s] += gamma;
        for (std::size_t i = 0; i < d; ++i) {
            p[i] += gamma * (static_cast<double>(Y[s][i]) - p[i]);
        }
        ++result.iters;
    }

    // Report the exact residual of the returned weights.
    std::fill(p.begin(), p.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (result.alpha[j] == 0.0) continue;
        for (std::size_t i = 0; i < d; ++i) p[i] += result.alpha[j] * static_cast<double>(Y[j][i]);
    }
    result.error = std::sqrt(sq_dist(x, p));
    return result;
}

namespace {

SeparabilityReport assemble_report(std::vector<PointReconstruction> points, double tol) {
    SeparabilityReport report;
    report.tol = tol;
    report.min_error = std::numeric_limits<double>::infinity();
    report.separable = true;
    for (const PointReconstruction& pt : points) {
        report.min_error = std::min(report.min_error, pt.error);
        if (!pt.separable && !report.witness) {
            report.witness = pt.point_index;
            report.separable = false;
        }
    }
    report.points = std::move(points);
    return report;
}

PointReconstruction reconstruct_point(const std::vector<Tensor>& X1, const std::vector<Tensor>& X2,
                                      double tol, std::size_t i) {
    ReconstructionResult rec = convex_reconstruction(X1[i], X2);
    PointReconstruction pt;
    pt.point_index = i;
    pt.alpha = std::move(rec.alpha);
    pt.error = rec.error;
    pt.gap = rec.gap;
    pt.separable = rec.error > tol;
    return pt;
}

} // namespace

SeparabilityReport is_convexly_separable_serial(const std::vector<Tensor>& X1,
                                                const std::vector<Tensor>& X2, double tol) {
    check_point_set(X1, "X1");
    check_point_set(X2, "X2");
    if (X1.front().size() != X2.front().size()) {
        throw contract_error("is_convexly_separable: dimension mismatch between X1 and X2");
    }
    std::vector<PointReconstruction> points(X1.size());
    for (std::size_t i = 0; i < X1.size(); ++i) points[i] = reconstruct_point(X1, X2, tol, i);
    return assemble_report(std::move(points), tol);
}

SeparabilityReport is_convexly_separable(const std::vector<Tensor>& X1,
                                         const std::vector<Tensor>& X2, double tol,
                                         const ExecPolicy& policy) {
    check_point_set(X1, "X1");
    check_point_set(X2, "X2");
    if (X1.front().size() != X2.front().size()) {
        throw contract_error("is_convexly_separable: dimension mismatch between X1 and X2");
    }
    std::vector<PointReconstruction> points(X1.size());
    parallel_for(policy, X1.size(), [&](std::size_t i) { points[i] = reconstruct_point(X1, X2, tol, i); });
    return assemble_report(std::move(points), tol);
}

std::optional<std::size_t> slab_check(const std::vector<Tensor>& X1,
                                      const std::vector<Tensor>& X2) {
    check_point_set(X1, "X1");
    check_point_set(X2, "X2");
    const std::size_t d = X1.front().size();
    if (X2.front().size() != d) throw contract_error("slab_check: dimension mismatch");
    for (std::size_t k = 0; k < d; ++k) {
        float hi1 = -std::numeric_limits<float>::infinity();
        for (const Tensor& x : X1) hi1 = std::max(hi1, x[k]);
        float lo2 = std::numeric_limits<float>::infinity();
        for (const Tensor& y : X2) lo2 = std::min(lo2, y[k]);
        if (hi1 < lo2) return k;
    }
    return std::nullopt;
}

double thm4_bound(int M, int N, int d) {
    if (M < 1 || N < 1 || d < 1) throw contract_error("thm4_bound: M, N, d must be >= 1");
    if (d >= M + N) return 1.0;
    // M!N!/(M+N)! as the running product Π_{i=1..N} i/(M+i) to avoid overflow.
    double ratio = 1.0;
    for (int i = 1; i <= N; ++i) {
        ratio *= static_cast<double>(i) / static_cast<double>(M + i);
    }
    return 1.0 - std::pow(1.0 - ratio, static_cast<double>(d));
}

namespace {

// One uniform-[−1,1]^d trial; draw order is fixed (X1 first, row-major) so the
// verdict stream is a pure function of the trial seed.
bool separability_trial(int M, int N, int d, Rng rng) {
    std::vector<Tensor> X1(static_cast<std::size_t>(M));
    std::vector<Tensor> X2(static_cast<std::size_t>(N));
    for (Tensor& p : X1) {
        p = Tensor::zeros(static_cast<std::size_t>(d));
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = static_cast<float>(rng.uniform_d() * 2.0 - 1.0);
        }
    }
    for (Tensor& p : X2) {
        p = Tensor::zeros(static_cast<std::size_t>(d));
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = static_cast<float>(rng.uniform_d() * 2.0 - 1.0);
        }
    }
    return is_convexly_separable_serial(X1, X2).separable;
}

} // namespace

double mc_separability_serial(int M, int N, int d, std::size_t trials, std::uint64_t seed) {
    if (M < 1 || N < 1 || d < 1) throw contract_error("mc_separability: M, N, d must be >= 1");
    if (trials < 1) throw contract_error("mc_separability: trials must be >= 1");
    const Rng base(seed);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        if (separability_trial(M, N, d, base.child(t))) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

double mc_separability(int M, int N, int d, std::size_t trials, std::uint64_t seed,
                       const ExecPolicy& policy) {
    if (M < 1 || N < 1 || d < 1) throw contract_error("mc_separability: M, N, d must be >= 1");
    if (trials < 1) throw contract_error("mc_separability: trials must be >= 1");
    const Rng base(seed);
    std::vector<std::uint8_t> verdicts(trials, 0);
    parallel_for(policy, trials, [&](std::size_t t) {
        verdicts[t] = separability_trial(M, N, d, base.child(t)) ? 1 : 0;
    });
    std::size_t hits = 0;
    for (std::uint8_t v : verdicts) hits += v;
    return static_cast<double>(hits) / static_cast<double>(trials);
}

void write_separability_csv(const std::string& path, const SeparabilityReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("separability csv: cannot open for writing: " + path);
    out << "point_index,error_l2,gap,separable_flag\n";
    for (const PointReconstruction& pt : report.points) {
        out << pt.point_index << ',' << csv_num(pt.error) << ',' << csv_num(pt.gap) << ','
            << (pt.separable ? 1 : 0) << '\n';
    }
    if (!out) throw parse_error("separability csv: write failed: " + path);
}

void write_mc_summary_json(const std::string& path, int M, int N, int d, std::size_t trials,
                           double frequency, double bound) {
    nlohmann::json j;
    j["M"] = M;
    j["N"] = N;
    j["d"] = d;
    j["trials"] = trials;
    j["frequency"] = frequency;
    j["bound"] = bound;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("summary json: cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw parse_error("summary json: write failed: " + path);
}

} // namespace fcc
