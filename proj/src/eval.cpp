#include "fcc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "fcc/csv.hpp"

namespace fcc {

std::pair<double, double> clean_accuracies(const FeatureConvexClassifier& clf, const Dataset& ds) {
    ds.validate();
    double c1 = 0, n1 = 0, c2 = 0, n2 = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int pred = predict(clf, ds.inputs[i]);
        if (ds.labels[i] == 1) {
            n1 += 1.0;
            if (pred == 1) c1 += 1.0;
        } else if (ds.labels[i] == 2) {
            n2 += 1.0;
            if (pred == 2) c2 += 1.0;
        } else {
            throw contract_error("clean_accuracies: labels must be 1 or 2");
        }
    }
    if (n1 == 0.0 || n2 == 0.0) throw contract_error("clean_accuracies: both classes required");
    return {c1 / n1, c2 / n2};
}

namespace {

void check_radii_grid(const std::vector<float>& radii) {
    if (radii.empty()) throw contract_error("radii grid must be nonempty");
    if (radii.front() != 0.0f) throw contract_error("radii grid must start at 0");
    for (std::size_t i = 1; i < radii.size(); ++i) {
        if (radii[i] < radii[i - 1]) throw contract_error("radii grid must be ascending");
    }
}

std::vector<CurvePoint> curve_from(const std::vector<float>& class1_radii, std::size_t n1,
                                   const std::vector<float>& radii) {
    std::vector<CurvePoint> curve;
    curve.reserve(radii.size());
    for (float r : radii) {
        std::size_t count = 0;
        for (float rad : class1_radii) {
            if (rad >= r) ++count;
        }
        curve.push_back({r, static_cast<double>(count) / static_cast<double>(n1)});
    }
    return curve;
}

} // namespace

std::vector<CurvePoint> certified_accuracy_curve(const FeatureConvexClassifier& clf,
                                                 const Dataset& ds, Norm p,
                                                 const std::vector<float>& radii,
                                                 const ExecPolicy& policy) {
    ds.validate();
    check_radii_grid(radii);
    const std::vector<Certificate> certs = certify_batch(clf, ds.inputs, policy);

    std::vector<float> class1_radii; // radii of predicted-1 class-1 samples
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] != 1) continue;
        ++n1;
        if (certs[i].predicted_class == 1) class1_radii.push_back(certs[i].radii[norm_index(p)]);
    }
    if (n1 == 0) throw contract_error("certified_accuracy_curve: no class-1 samples");
    return curve_from(class1_radii, n1, radii);
}

SurfaceGrid robustness_surface(const FeatureConvexClassifier& clf, const Dataset& ds, Norm p,
                               const std::vector<float>& taus, const std::vector<float>& radii,
                               const ExecPolicy& policy) {
    ds.validate();
    check_radii_grid(radii);
    if (taus.empty()) throw contract_error("robustness_surface: tau grid must be nonempty");
    for (std::size_t i = 1; i < taus.size(); ++i) {
        if (taus[i] < taus[i - 1]) throw contract_error("robustness_surface: tau grid must be ascending");
    }

    // τ only shifts the threshold; raw logits and gradient dual norms are
    // computed once via certificates of the τ = 0 classifier.
    FeatureConvexClassifier base = clf;
    base.tau = 0.0f;
    const std::vector<Certificate> certs = certify_batch(base, ds.inputs, policy);
    const float lip = feature_lipschitz(clf.map, p);

    std::size_t n1 = 0, n2 = 0;
    for (int lab : ds.labels) {
        if (lab == 1) {
            ++n1;
        } else if (lab == 2) {
            ++n2;
        } else {
            throw contract_error("robustness_surface: labels must be 1 or 2");
        }
    }
    if (n1 == 0 || n2 == 0) throw contract_error("robustness_surface: both classes required");

    SurfaceGrid grid;
    grid.rows.reserve(taus.size());
    for (float tau : taus) {
        SurfaceRow row;
        row.tau = tau;
        std::size_t c1 = 0, c2 = 0;
        std::vector<float> class1_radii;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const float shifted = certs[i].shifted_logit + tau; // raw logit + τ
            const bool pred1 = shifted > 0.0f;
            if (ds.labels[i] == 1) {
                if (pred1) {
                    ++c1;
                    // Same float expression as certify(): shifted / (lip · dual).
                    const float dual = certs[i].dual_norms[norm_index(p)];
                    class1_radii.push_back(dual <= kGradDualTol
                                               ? std::numeric_limits<float>::infinity()
                                               : shifted / (lip * dual));
                }
            } else if (!pred1) {
                ++c2;
            }
        }
        row.alpha1 = static_cast<double>(c1) / static_cast<double>(n1);
        row.alpha2 = static_cast<double>(c2) / static_cast<double>(n2);
        row.curve = curve_from(class1_radii, n1, radii);
        grid.rows.push_back(std::move(row));
    }
    return grid;
}

std::vector<float> quantile_tau_grid(std::vector<float> logits, std::size_t count) {
    if (logits.empty()) throw contract_error("quantile_tau_grid: empty logits");
    if (count < 2) throw contract_error("quantile_tau_grid: need at least 2 grid points");
    std::sort(logits.begin(), logits.end());
    const std::size_t n = logits.size();
    std::vector<float> taus(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t rev = count - 1 - k;
        const std::size_t idx = static_cast<std::size_t>(
            std::llround(static_cast<double>(rev) * static_cast<double>(n - 1) /
                         static_cast<double>(count - 1)));
        taus[k] = -logits[idx] + 0.0f;
    }
    return taus;
}

namespace {

float lp_norm(Norm p, const Tensor& v) {
    switch (p) {
        case Norm::l1: {
            float acc = 0.0f;
            for (std::size_t i = 0; i < v.size(); ++i) acc += std::fabs(v[i]);
            return acc;
        }
        case Norm::l2: {
            float acc = 0.0f;
            for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * v[i];
            return std::sqrt(acc);
        }
        case Norm::linf: {
            float m = 0.0f;
            for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::fabs(v[i]));
            return m;
        }
    }
    throw contract_error("lp_norm: unsupported norm");
}

// Euclidean projection of w (nonnegative entries assumed) onto the scaled
// simplex {u >= 0, Σu = b}: the sorted-threshold method.
void simplex_project(std::vector<float>& w, float b) {
    std::vector<float> u = w;
    std::sort(u.begin(), u.end(), std::greater<float>());
    double prefix = 0.0;
    double theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        prefix += static_cast<double>(u[j]);
        const double candidate = (prefix - static_cast<double>(b)) / static_cast<double>(j + 1);
        if (static_cast<double>(u[j]) > candidate) {
            rho = j + 1;
            theta = candidate;
        }
    }
    (void)rho;
    for (float& x : w) {
        const double shifted = static_cast<double>(x) - theta;
        x = shifted > 0.0 ? static_cast<float>(shifted) : 0.0f;
    }
}

void project_ball(Tensor& delta, Norm p, float budget) {
    switch (p) {
        case Norm::linf:
            for (std::size_t i = 0; i < delta.size(); ++i) {
                delta[i] = std::clamp(delta[i], -budget, budget);
            }
            return;
        case Norm::l2: {
            const float n = lp_norm(Norm::l2, delta);
            if (n > budget && n > 0.0f) {
                const float s = budget / n;
                for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= s;
            }
            return;
        }
        case Norm::l1: {
            if (lp_norm(Norm::l1, delta) <= budget) return;
            std::vector<float> mag(delta.size());
            for (std::size_t i = 0; i < delta.size(); ++i) mag[i] = std::fabs(delta[i]);
            simplex_project(mag, budget);
            for (std::size_t i = 0; i < delta.size(); ++i) {
                delta[i] = delta[i] < 0.0f ? -mag[i] : mag[i];
            }
            return;
        }
    }
    throw contract_error("project_ball: unsupported norm");
}

Tensor random_ball_point(Rng& rng, std::size_t d, Norm p, float budget) {
    Tensor delta = Tensor::zeros(d);
    switch (p) {
        case Norm::linf:
            for (std::size_t i = 0; i < d; ++i) delta[i] = rng.uniform(-budget, budget);
            return delta;
        case Norm::l2: {
            float norm_sq = 0.0f;
            do {
                norm_sq = 0.0f;
                for (std::size_t i = 0; i < d; ++i) {
                    delta[i] = rng.normal();
                    norm_sq += delta[i] * delta[i];
                }
            } while (norm_sq <= 0.0f);
            const float scale = budget *
                                std::pow(rng.uniform(), 1.0f / static_cast<float>(d)) /
                                std::sqrt(norm_sq);
            for (std::size_t i = 0; i < d; ++i) delta[i] *= scale;
            return delta;
        }
        case Norm::l1: {
            // Dirichlet(1) magnitudes via exponential draws, random signs,
            // then a radial factor for uniformity in the ball.
            double total = 0.0;
            std::vector<double> e(d);
            for (std::size_t i = 0; i < d; ++i) {
                float u = rng.uniform();
                while (u <= 0.0f) u = rng.uniform();
                e[i] = -std::log(static_cast<double>(u));
                total += e[i];
            }
            const float radial = budget * std::pow(rng.uniform(), 1.0f / static_cast<float>(d));
            for (std::size_t i = 0; i < d; ++i) {
                const float sign = rng.uniform() < 0.5f ? -1.0f : 1.0f;
                delta[i] = sign * radial * static_cast<float>(e[i] / total);
            }
            return delta;
        }
    }
    throw contract_error("random_ball_point: unsupported norm");
}

// Steepest-descent direction on the logit within the ℓp geometry.
// Returns false when the gradient is flat (nothing to follow).
bool descent_direction(Norm p, const Tensor& g, Tensor& dir) {
    switch (p) {
        case Norm::linf: {
            bool any = false;
            for (std::size_t i = 0; i < g.size(); ++i) {
                dir[i] = g[i] > 0.0f ? 1.0f : (g[i] < 0.0f ? -1.0f : 0.0f);
                any = any || dir[i] != 0.0f;
            }
            return any;
        }
        case Norm::l2: {
            const float n = lp_norm(Norm::l2, g);
            if (n <= 1e-20f) return false;
            for (std::size_t i = 0; i < g.size(); ++i) dir[i] = g[i] / n;
            return true;
        }
        case Norm::l1: {
            std::size_t best = 0;
            float best_mag = 0.0f;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const float m = std::fabs(g[i]);
                if (m > best_mag) {
                    best_mag = m;
                    best = i;
                }
            }
            if (best_mag == 0.0f) return false;
            for (std::size_t i = 0; i < g.size(); ++i) dir[i] = 0.0f;
            dir[best] = g[best] > 0.0f ? 1.0f : -1.0f;
            return true;
        }
    }
    throw contract_error("descent_direction: unsupported norm");
}

} // namespace

AttackResult pgd_attack(const FeatureConvexClassifier& clf, const Tensor& x, Norm p, float budget,
                        int steps, float step_size, int restarts, std::uint64_t seed) {
    if (!(budget > 0.0f) || !std::isfinite(budget)) {
        throw contract_error("pgd_attack: budget must be positive and finite");
    }
    if (steps < 1 || restarts < 1) throw contract_error("pgd_attack: steps and restarts must be >= 1");
    if (predict(clf, x) != 1) throw contract_error("pgd_attack: input must be predicted class 1");

    const float step = step_size > 0.0f ? step_size : 2.0f * budget / static_cast<float>(steps);
    const std::size_t d = x.size();
    const Rng base(seed);

    AttackResult result;
    Tensor dir = Tensor::zeros(d);
    for (int rs = 0; rs < restarts; ++rs) {
        Rng rng = base.child(static_cast<std::uint64_t>(rs));
        Tensor delta = rs == 0 ? Tensor::zeros(d) : random_ball_point(rng, d, p, budget);

        for (int s = 0; s <= steps; ++s) {
            Tensor probe = x;
            axpy(1.0f, delta, probe);
            if (predict(clf, probe) == 2) {
                result.success = true;
                result.delta = std::move(delta);
                result.norm = lp_norm(p, result.delta);
                return result;
            }
            if (s == steps) break;

            const Tensor g = input_gradient_x(clf, probe);
            if (!descent_direction(p, g, dir)) break;
            axpy(-step, dir, delta);
            project_ball(delta, p, budget);
            ++result.steps;
        }
    }
    return result;
}

std::vector<AttackResult> attack_batch_serial(const FeatureConvexClassifier& clf,
                                              const std::vector<Tensor>& inputs,
                                              const std::vector<float>& budgets, Norm p, int steps,
                                              float step_size, int restarts, std::uint64_t seed) {
    if (inputs.size() != budgets.size()) throw contract_error("attack_batch: size mismatch");
    const Rng base(seed);
    std::vector<AttackResult> out(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!(budgets[i] > 0.0f) || !std::isfinite(budgets[i])) continue; // nothing to attack
        out[i] = pgd_attack(clf, inputs[i], p, budgets[i], steps, step_size, restarts,
                            base.child(i).seed());
    }
    return out;
}

std::vector<AttackResult> attack_batch(const FeatureConvexClassifier& clf,
                                       const std::vector<Tensor>& inputs,
                                       const std::vector<float>& budgets, Norm p, int steps,
                                       float step_size, int restarts, std::uint64_t seed,
                                       const ExecPolicy& policy) {
    if (inputs.size() != budgets.size()) throw contract_error("attack_batch: size mismatch");
    const Rng base(seed);
    std::vector<AttackResult> out(inputs.size());
    parallel_for(policy, inputs.size(), [&](std::size_t i) {
        if (!(budgets[i] > 0.0f) || !std::isfinite(budgets[i])) return;
        out[i] = pgd_attack(clf, inputs[i], p, budgets[i], steps, step_size, restarts,
                            base.child(i).seed());
    });
    return out;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("curve csv: cannot open for writing: " + path);
    out << "radius,certified_accuracy\n";
    for (const CurvePoint& pt : curve) {
        out << csv_num(pt.radius) << ',' << csv_num(pt.certified_accuracy) << '\n';
    }
    if (!out) throw parse_error("curve csv: write failed: " + path);
}

void write_surface_csv(const std::string& path, const SurfaceGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("surface csv: cannot open for writing: " + path);
    out << "tau,alpha1,alpha2,radius,certified_accuracy\n";
    for (const SurfaceRow& row : grid.rows) {
        for (const CurvePoint& pt : row.curve) {
            out << csv_num(row.tau) << ',' << csv_num(row.alpha1) << ',' << csv_num(row.alpha2) << ','
                << csv_num(pt.radius) << ',' << csv_num(pt.certified_accuracy) << '\n';
        }
    }
    if (!out) throw parse_error("surface csv: write failed: " + path);
}

} // namespace fcc
