#pragma once

// Independent reference implementations used only by tests. Everything here
// is deliberately written with plain loops and double precision, sharing no
// kernel code with the library, so agreement is evidence rather than
// tautology.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fcc/certify.hpp"
#include "fcc/icnn.hpp"

namespace fcc::ref {

// Direct recursion for the ICNN logit in double precision:
//   x1 = relu(A0 z + b0); xk = relu(Ak x{k-1} + bk + Ck z); logit = last layer un-activated.
inline double icnn_forward_f64(const IcnnParams& P, const std::vector<double>& z) {
    const std::size_t L = P.layers();
    std::vector<double> x;
    for (std::size_t k = 0; k < L; ++k) {
        const std::size_t rows = P.A[k].rows();
        const std::size_t cols = P.A[k].cols();
        std::vector<double> y(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            double acc = static_cast<double>(P.b[k][i]);
            for (std::size_t j = 0; j < cols; ++j) {
                acc += static_cast<double>(P.A[k].at(i, j)) * (k == 0 ? z[j] : x[j]);
            }
            if (k >= 1 && P.passthrough && P.C[k].numel() > 0) {
                for (std::size_t j = 0; j < z.size(); ++j) {
                    acc += static_cast<double>(P.C[k].at(i, j)) * z[j];
                }
            }
            if (k + 1 < L && acc < 0.0) acc = 0.0;
            y[i] = acc;
        }
        x = std::move(y);
    }
    return x[0];
}

inline std::vector<double> to_f64(const Tensor& t) {
    std::vector<double> v(t.numel());
    for (std::size_t i = 0; i < t.numel(); ++i) v[i] = static_cast<double>(t.data()[i]);
    return v;
}

// Feature map in double precision.
inline std::vector<double> feature_apply_f64(const FeatureMap& map, const std::vector<double>& x) {
    if (map.kind == FeatureMap::Kind::identity) return x;
    std::vector<double> z(2 * x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double off = x[i] - static_cast<double>(map.mu[i]);
        z[i] = off;
        z[x.size() + i] = std::fabs(off);
    }
    return z;
}

inline double logit_f64(const FeatureConvexClassifier& clf, const std::vector<double>& x) {
    return icnn_forward_f64(clf.params, feature_apply_f64(clf.map, x)) +
           static_cast<double>(clf.tau);
}

// Central finite difference of the double forward with respect to input
// coordinate i; h should stay well clear of relu kinks for the comparison to
// be meaningful (callers use generic random points).
inline double fd_input_gradient_f64(const IcnnParams& P, std::vector<double> z, std::size_t i,
                                    double h) {
    z[i] += h;
    const double up = icnn_forward_f64(P, z);
    z[i] -= 2.0 * h;
    const double down = icnn_forward_f64(P, z);
    return (up - down) / (2.0 * h);
}

// Scale a direction to unit ℓp length (2-D oracle helper).
inline void normalize_lp(Norm p, double& ux, double& uy) {
    double n = 1.0;
    switch (p) {
        case Norm::l1: n = std::fabs(ux) + std::fabs(uy); break;
        case Norm::l2: n = std::hypot(ux, uy); break;
        case Norm::linf: n = std::max(std::fabs(ux), std::fabs(uy)); break;
    }
    ux /= n;
    uy /= n;
}

// Dense angular sweep over the ℓp sphere of radius `factor · radius` around a
// 2-D input: returns the number of directions whose perturbed prediction
// flips to class 2, evaluating the network entirely in double precision.
inline std::size_t sphere_flip_count_2d(const FeatureConvexClassifier& clf, const Tensor& x,
                                        Norm p, double radius, double factor,
                                        std::size_t directions = 3600) {
    std::size_t flips = 0;
    const double tau = static_cast<double>(clf.tau);
    for (std::size_t k = 0; k < directions; ++k) {
        const double theta = 2.0 * 3.14159265358979323846 * static_cast<double>(k) /
                             static_cast<double>(directions);
        double ux = std::cos(theta), uy = std::sin(theta);
        normalize_lp(p, ux, uy);
        const std::vector<double> probe = {static_cast<double>(x[0]) + factor * radius * ux,
                                           static_cast<double>(x[1]) + factor * radius * uy};
        const double logit =
            icnn_forward_f64(clf.params, feature_apply_f64(clf.map, probe)) + tau;
        if (!(logit > 0.0)) ++flips;
    }
    return flips;
}

// Exhaustive threshold-balancing oracle: tries every candidate decision
// threshold (midpoints of consecutive distinct sorted logits, plus one unit
// past each extreme) and recounts both accuracies from scratch at each.
// Ties break toward the smaller threshold, i.e. the larger τ.
inline float balance_oracle(const std::vector<float>& logits, const std::vector<int>& labels) {
    std::vector<float> sorted = logits;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<float> candidates;
    candidates.push_back(sorted.front() - 1.0f);
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        candidates.push_back(sorted[i - 1] + (sorted[i] - sorted[i - 1]) * 0.5f);
    }
    candidates.push_back(sorted.back() + 1.0f);
    std::sort(candidates.begin(), candidates.end());

    double n1 = 0, n2 = 0;
    for (int lab : labels) (lab == 1 ? n1 : n2) += 1.0;

    float best_t = candidates.front();
    double best_gap = std::numeric_limits<double>::infinity();
    for (float t : candidates) {
        double c1 = 0, c2 = 0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const bool pred1 = logits[i] > t;
            if (labels[i] == 1 && pred1) c1 += 1.0;
            if (labels[i] == 2 && !pred1) c2 += 1.0;
        }
        const double gap = std::fabs(c1 / n1 - c2 / n2);
        if (gap < best_gap) {
            best_gap = gap;
            best_t = t;
        }
    }
    return -best_t + 0.0f;
}

// Convexity probes used by the invariant suites. Both return the violation
// margin (positive = inequality broken) together with the |rhs| scale.
struct ConvexityProbe {
    double violation;
    double rhs_scale;
};

inline ConvexityProbe chord_probe(const IcnnParams& P, const std::vector<double>& z1,
                                  const std::vector<double>& z2, double lambda) {
    std::vector<double> mid(z1.size());
    for (std::size_t i = 0; i < z1.size(); ++i) mid[i] = lambda * z1[i] + (1.0 - lambda) * z2[i];
    const double lhs = icnn_forward_f64(P, mid);
    const double rhs =
        lambda * icnn_forward_f64(P, z1) + (1.0 - lambda) * icnn_forward_f64(P, z2);
    return {lhs - rhs, std::fabs(rhs)};
}

inline ConvexityProbe tangent_probe(const IcnnParams& P, const Tensor& z,
                                    const std::vector<double>& z_prime) {
    const Tensor g = icnn_input_gradient(P, z);
    double rhs = icnn_forward_f64(P, to_f64(z));
    for (std::size_t i = 0; i < z_prime.size(); ++i) {
        rhs += static_cast<double>(g[i]) * (z_prime[i] - static_cast<double>(z[i]));
    }
    const double lhs = icnn_forward_f64(P, z_prime);
    return {rhs - lhs, std::fabs(rhs)}; // positive when the tangent overshoots the function
}

} // namespace fcc::ref
