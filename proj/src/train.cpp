#include "fcc/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "fcc/csv.hpp"

namespace fcc {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0f) throw contract_error("TrainConfig: learning_rate must be positive");
    if (!(momentum >= 0.0f && momentum < 1.0f)) throw contract_error("TrainConfig: momentum in [0,1)");
    if (!(lr_decay_gamma > 0.0f && lr_decay_gamma <= 1.0f)) {
        throw contract_error("TrainConfig: lr_decay_gamma in (0,1]");
    }
    if (batch_size < 1) throw contract_error("TrainConfig: batch_size must be >= 1");
    if (jacobian_lambda < 0.0f) throw contract_error("TrainConfig: jacobian_lambda must be >= 0");
    if (jacobian_fd_step <= 0.0f) throw contract_error("TrainConfig: jacobian_fd_step must be positive");
    if (!(val_fraction > 0.0f && val_fraction < 1.0f)) {
        throw contract_error("TrainConfig: val_fraction in (0,1)");
    }
}

namespace {

float stable_softplus(float t) {
    return t > 0.0f ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

float sigmoid(float l) {
    if (l >= 0.0f) return 1.0f / (1.0f + std::exp(-l));
    const float e = std::exp(l);
    return e / (1.0f + e);
}

Tensor draw_unit_sphere(Rng& rng, std::size_t q) {
    Tensor u = Tensor::zeros(q);
    for (;;) {
        float norm_sq = 0.0f;
        for (std::size_t i = 0; i < q; ++i) {
            u[i] = rng.normal();
            norm_sq += u[i] * u[i];
        }
        const float norm = std::sqrt(norm_sq);
        if (norm > 1e-12f) {
            for (std::size_t i = 0; i < q; ++i) u[i] /= norm;
            return u;
        }
    }
}

} // namespace

float bce_loss(float logit, int label) {
    if (label != 1 && label != 2) throw contract_error("bce_loss: label must be 1 or 2");
    if (!std::isfinite(logit)) throw contract_error("bce_loss: non-finite logit");
    return stable_softplus(label == 1 ? -logit : logit);
}

float jacobian_penalty(const FeatureConvexClassifier& clf, const Tensor& x, float eps, Rng& rng) {
    if (eps <= 0.0f) throw contract_error("jacobian_penalty: eps must be positive");
    const Tensor z = feature_apply(clf.map, x);
    const std::size_t q = z.size();
    const Tensor u = draw_unit_sphere(rng, q);
    Tensor z2 = z;
    axpy(eps, u, z2);
    const float g1 = icnn_forward(clf.params, z);
    const float g2 = icnn_forward(clf.params, z2);
    const float diff = (g2 - g1) / eps;
    return static_cast<float>(q) * diff * diff;
}

float balance_threshold(const std::vector<float>& logits, const std::vector<int>& labels) {
    if (logits.size() != labels.size()) throw contract_error("balance_threshold: size mismatch");
    if (logits.empty()) throw contract_error("balance_threshold: empty input");

    std::size_t n1 = 0, n2 = 0;
    for (int lab : labels) {
        if (lab == 1) {
            ++n1;
        } else if (lab == 2) {
            ++n2;
        } else {
            throw contract_error("balance_threshold: labels must be 1 or 2");
        }
    }
    if (n1 == 0 || n2 == 0) throw contract_error("balance_threshold: both classes required");

    std::vector<std::pair<float, int>> sorted(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) sorted[i] = {logits[i], labels[i]};
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Predict 1 iff logit > t. Sweeping cuts after each distinct-value group:
    // c1/c2 = class counts with logit <= t, so α₁ = (n1-c1)/n1, α₂ = c2/n2.
    double best_diff = std::numeric_limits<double>::infinity();
    float best_t = 0.0f;
    const auto consider = [&](float t, std::size_t c1, std::size_t c2) {
        const double a1 = static_cast<double>(n1 - c1) / static_cast<double>(n1);
        const double a2 = static_cast<double>(c2) / static_cast<double>(n2);
        const double diff = std::fabs(a1 - a2);
        // Ties break toward the smaller threshold, i.e. the larger τ.
        if (diff < best_diff || (diff == best_diff && t < best_t)) {
            best_diff = diff;
            best_t = t;
        }
    };

    consider(sorted.front().first - 1.0f, 0, 0); // stand-in for t = -∞
    std::size_t c1 = 0, c2 = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const float v = sorted[i].first;
        for (; i < sorted.size() && sorted[i].first == v; ++i) {
            (sorted[i].second == 1 ? c1 : c2)++;
        }
        if (i < sorted.size()) {
            consider(0.5f * (v + sorted[i].first), c1, c2);
        }
    }
    consider(sorted.back().first + 1.0f, n1, n2); // stand-in for t = +∞

    return -best_t + 0.0f; // +0 normalizes -0 to +0
}

namespace {

// Everything the per-sample gradient kernel needs; prepared serially so all
// rng draws happen in sample order, then consumed in parallel.
struct PreparedSample {
    Tensor z;   // φ(augmented x)
    Tensor z2;  // z + ε·u, only when the penalty is active
    int label = 0;
};

struct SampleResult {
    std::vector<Tensor> grads; // per trainable tensor
    double loss = 0.0;
    bool correct = false;
};

// One sample's loss gradient. Both training loops (serial reference and the
// chunked parallel driver) call exactly this function.
void sample_gradient(const IcnnParams& params, const PreparedSample& s, float lambda, float eps,
                     SampleResult& out) {
    const float y1 = s.label == 1 ? 1.0f : 0.0f;
    if (lambda > 0.0f) {
        IcnnGraph g = icnn_graph2(params, s.z, s.z2);
        const float g1 = g.tape.value(g.logit_id)[0];
        const float g2 = g.tape.value(g.logit2_id)[0];
        const float q = static_cast<float>(s.z.size());
        const float diff = (g2 - g1) / eps;
        const float dpen = lambda * 2.0f * q * (g2 - g1) / (eps * eps);
        const float s1 = (sigmoid(g1) - y1) - dpen;
        const float s2 = dpen;
        std::vector<Tensor> adj = g.tape.gradient({{g.logit_id, s1}, {g.logit2_id, s2}}, &g.param_ids);
        out.grads.clear();
        for (int id : g.param_ids) out.grads.push_back(std::move(adj[id]));
        out.loss = static_cast<double>(bce_loss(g1, s.label)) +
                   static_cast<double>(lambda) * static_cast<double>(q * diff * diff);
        out.correct = (g1 > 0.0f) == (s.label == 1);
    } else {
        IcnnGraph g = icnn_graph(params, s.z);
        const float g1 = g.tape.value(g.logit_id)[0];
        const float s1 = sigmoid(g1) - y1;
        std::vector<Tensor> adj = g.tape.gradient({{g.logit_id, s1}}, &g.param_ids);
        out.grads.clear();
        for (int id : g.param_ids) out.grads.push_back(std::move(adj[id]));
        out.loss = static_cast<double>(bce_loss(g1, s.label));
        out.correct = (g1 > 0.0f) == (s.label == 1);
    }
}

std::vector<float> batch_logits(const IcnnParams& params, const FeatureMap& map,
                                const Dataset& ds, const std::vector<std::size_t>& idx,
                                const ExecPolicy& policy) {
    std::vector<float> logits(idx.size());
    parallel_for(policy, idx.size(), [&](std::size_t i) {
        logits[i] = icnn_forward(params, feature_apply(map, ds.inputs[idx[i]]));
    });
    return logits;
}

} // namespace

TrainResult train(const IcnnSpec& spec, const FeatureMap& map, const Dataset& dataset,
                  const TrainConfig& config, const ExecPolicy& policy) {
    config.validate();
    spec.validate();
    map.validate();
    dataset.validate();
    if (spec.input_dim != map.output_dim()) {
        throw contract_error("train: icnn input dim != feature map output dim");
    }
    if (dataset.size() == 0) throw contract_error("train: empty dataset");
    if (dataset.dim() != map.input_dim) {
        throw contract_error("train: dataset dim " + std::to_string(dataset.dim()) +
                             " != feature map input dim " + std::to_string(map.input_dim));
    }
    {
        std::size_t n1 = 0, n2 = 0;
        for (int lab : dataset.labels) {
            if (lab == 1) {
                ++n1;
            } else if (lab == 2) {
                ++n2;
            } else {
                throw contract_error("train: labels must be 1 or 2 (run select_pair first)");
            }
        }
        if (n1 == 0 || n2 == 0) throw contract_error("train: both classes must be present");
    }

    Rng rng(config.seed);

    // Stratified split: shuffle once, then route the first val_count of each
    // class to validation so small or skewed datasets keep both classes on
    // both sides.
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::vector<std::size_t> train_idx, val_idx;
    {
        std::size_t class_total[2] = {0, 0};
        for (int lab : dataset.labels) ++class_total[lab - 1];
        std::size_t val_target[2];
        for (int c = 0; c < 2; ++c) {
            val_target[c] = static_cast<std::size_t>(static_cast<double>(class_total[c]) *
                                                     static_cast<double>(config.val_fraction));
            if (val_target[c] == 0 && class_total[c] >= 2) val_target[c] = 1;
            if (val_target[c] == 0 || val_target[c] >= class_total[c]) {
                throw contract_error("train: class " + std::to_string(c + 1) +
                                     " too small for the validation split");
            }
        }
        std::size_t val_taken[2] = {0, 0};
        for (std::size_t i : order) {
            const int c = dataset.labels[i] - 1;
            if (val_taken[c] < val_target[c]) {
                val_idx.push_back(i);
                ++val_taken[c];
            } else {
                train_idx.push_back(i);
            }
        }
    }

    // Image geometry for augmentation (square single-channel layout).
    std::size_t img_side = 0;
    if (config.augment) {
        img_side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(dataset.dim()))));
        if (img_side * img_side != dataset.dim()) {
            throw contract_error("train: augmentation needs square image inputs");
        }
    }

    IcnnParams params = icnn_init(spec);
    project_nonnegative(params); // init is already nonnegative; keep the invariant explicit

    std::vector<Tensor> velocity;
    for (const Tensor* t : params.trainable()) {
        velocity.push_back(t->rank() == 2 ? Tensor::zeros(t->rows(), t->cols())
                                          : Tensor::zeros(t->numel()));
    }

    const float lambda = config.jacobian_lambda;
    const float eps = config.jacobian_fd_step;
    const std::size_t n_trainable = velocity.size();

    float lr = config.learning_rate;
    TrainHistory history;
    std::vector<std::size_t> epoch_order = train_idx;

    constexpr std::size_t kChunk = 8; // parallel slots per reduction round
    std::vector<PreparedSample> prepared(config.batch_size);
    std::vector<SampleResult> slots(kChunk);
    std::vector<Tensor> batch_grad = velocity; // same shapes, will be re-zeroed

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(epoch_order);
        double loss_sum = 0.0;

        for (std::size_t start = 0; start < epoch_order.size(); start += config.batch_size) {
            const std::size_t bsz = std::min(config.batch_size, epoch_order.size() - start);

            // Serial prep: augmentation offsets and penalty directions are
            // drawn here, in sample order, so the draw sequence never
            // depends on the thread count.
            for (std::size_t k = 0; k < bsz; ++k) {
                const std::size_t idx = epoch_order[start + k];
                PreparedSample& p = prepared[k];
                p.label = dataset.labels[idx];
                const Tensor& raw = dataset.inputs[idx];
                const Tensor x = config.augment
                                     ? augment_pad_crop(raw, img_side, img_side, config.augment_pad, rng)
                                     : raw;
                p.z = feature_apply(map, x);
                if (lambda > 0.0f) {
                    const Tensor u = draw_unit_sphere(rng, p.z.size());
                    p.z2 = p.z;
                    axpy(eps, u, p.z2);
                }
            }

            for (Tensor& g : batch_grad) {
                for (std::size_t i = 0; i < g.numel(); ++i) g.data()[i] = 0.0f;
            }

            // Chunked evaluation: gradients fan out, the reduction below
            // walks samples in ascending order regardless of thread count.
            for (std::size_t c0 = 0; c0 < bsz; c0 += kChunk) {
                const std::size_t cn = std::min(kChunk, bsz - c0);
                parallel_for(policy, cn, [&](std::size_t k) {
                    sample_gradient(params, prepared[c0 + k], lambda, eps, slots[k]);
                });
                for (std::size_t k = 0; k < cn; ++k) {
                    loss_sum += slots[k].loss;
                    for (std::size_t t = 0; t < n_trainable; ++t) {
                        axpy(1.0f, slots[k].grads[t], batch_grad[t]);
                    }
                }
            }

            // Heavy-ball update on the batch mean, then projection.
            const float inv_b = 1.0f / static_cast<float>(bsz);
            std::vector<Tensor*> theta = params.trainable();
            for (std::size_t t = 0; t < n_trainable; ++t) {
                Tensor& v = velocity[t];
                Tensor& w = *theta[t];
                const Tensor& g = batch_grad[t];
                for (std::size_t i = 0; i < v.numel(); ++i) {
                    v.data()[i] = config.momentum * v.data()[i] + g.data()[i] * inv_b;
                    w.data()[i] -= lr * v.data()[i];
                }
            }
            project_nonnegative(params);
        }

        // Clean full-pass metrics at τ = 0 (no augmentation).
        const std::vector<float> train_logits = batch_logits(params, map, dataset, train_idx, policy);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < train_idx.size(); ++i) {
            if ((train_logits[i] > 0.0f) == (dataset.labels[train_idx[i]] == 1)) ++correct;
        }
        const std::vector<float> val_logits = batch_logits(params, map, dataset, val_idx, policy);
        double v1 = 0, v1n = 0, v2 = 0, v2n = 0;
        for (std::size_t i = 0; i < val_idx.size(); ++i) {
            if (dataset.labels[val_idx[i]] == 1) {
                v1n += 1.0;
                if (val_logits[i] > 0.0f) v1 += 1.0;
            } else {
                v2n += 1.0;
                if (val_logits[i] <= 0.0f) v2 += 1.0;
            }
        }

        EpochStats stats;
        stats.epoch = epoch + 1;
        stats.loss = loss_sum / static_cast<double>(train_idx.size());
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(train_idx.size());
        stats.val_balanced_acc = 0.5 * (v1 / v1n + v2 / v2n);
        stats.lr = lr;
        history.push_back(stats);

        lr *= config.lr_decay_gamma;
    }

    // Balance the threshold on validation logits under the final weights.
    const std::vector<float> val_logits = batch_logits(params, map, dataset, val_idx, policy);
    std::vector<int> val_labels(val_idx.size());
    for (std::size_t i = 0; i < val_idx.size(); ++i) val_labels[i] = dataset.labels[val_idx[i]];

    TrainResult result;
    result.classifier.map = map;
    result.classifier.spec = spec;
    result.classifier.params = std::move(params);
    result.classifier.tau = balance_threshold(val_logits, val_labels);
    result.classifier.validate();
    result.history = std::move(history);
    return result;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("history csv: cannot open for writing: " + path);
    out << "epoch,loss,train_acc,val_balanced_acc,lr\n";
    for (const EpochStats& e : history) {
        out << e.epoch << ',' << csv_num(e.loss) << ',' << csv_num(e.train_acc) << ','
            << csv_num(e.val_balanced_acc) << ',' << csv_num(e.lr) << '\n';
    }
    if (!out) throw parse_error("history csv: write failed: " + path);
}

} // namespace fcc
