#include "fcc/certify.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "fcc/csv.hpp"

namespace fcc {

void FeatureConvexClassifier::validate() const {
    map.validate();
    if (spec.input_dim != map.output_dim()) {
        throw contract_error("classifier: icnn input dim " + std::to_string(spec.input_dim) +
                             " != feature map output dim " + std::to_string(map.output_dim()));
    }
    icnn_validate(spec, params);
    if (params.min_constrained_entry() < 0.0f) {
        throw contract_error("classifier: constrained weights not projected (negative entries)");
    }
    if (!std::isfinite(tau)) throw contract_error("classifier: tau must be finite");
}

float dual_norm(Norm p, const Tensor& v) {
    if (v.rank() != 1) throw contract_error("dual_norm: rank-1 tensor expected");
    switch (p) {
        case Norm::l1: { // dual of ℓ1 is ℓ∞
            float m = 0.0f;
            for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::fabs(v[i]));
            return m;
        }
        case Norm::l2: {
            float acc = 0.0f;
            for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * v[i];
            return std::sqrt(acc);
        }
        case Norm::linf: { // dual of ℓ∞ is ℓ1
            float acc = 0.0f;
            for (std::size_t i = 0; i < v.size(); ++i) acc += std::fabs(v[i]);
            return acc;
        }
    }
    throw contract_error("dual_norm: unsupported norm");
}

float raw_logit(const FeatureConvexClassifier& clf, const Tensor& x) {
    return icnn_forward(clf.params, feature_apply(clf.map, x));
}

int predict(const FeatureConvexClassifier& clf, const Tensor& x) {
    return raw_logit(clf, x) + clf.tau > 0.0f ? 1 : 2;
}

Tensor input_gradient_x(const FeatureConvexClassifier& clf, const Tensor& x) {
    const Tensor grad_z = icnn_input_gradient(clf.params, feature_apply(clf.map, x));
    return feature_backward(clf.map, x, grad_z);
}

Certificate certify(const FeatureConvexClassifier& clf, const Tensor& x) {
    LogitAndGrad vg = icnn_value_and_input_gradient(clf.params, feature_apply(clf.map, x));

    Certificate cert;
    cert.shifted_logit = vg.logit + clf.tau;
    cert.grad = std::move(vg.grad_z);
    if (!std::isfinite(cert.shifted_logit) || !cert.grad.all_finite()) {
        throw numeric_error("certify: non-finite logit or gradient");
    }
    cert.predicted_class = cert.shifted_logit > 0.0f ? 1 : 2;

    for (Norm p : kAllNorms) {
        const std::size_t i = norm_index(p);
        const float dual = dual_norm(p, cert.grad);
        cert.dual_norms[i] = dual;
        if (cert.predicted_class == 2) {
            cert.radii[i] = 0.0f;
        } else if (dual <= kGradDualTol) {
            cert.radii[i] = std::numeric_limits<float>::infinity();
        } else {
            cert.radii[i] = cert.shifted_logit / (feature_lipschitz(clf.map, p) * dual);
        }
    }
    return cert;
}

Certificate certified_radius(const FeatureConvexClassifier& clf, const Tensor& x, Norm p) {
    (void)norm_index(p); // p validated by type; certificate covers all norms
    return certify(clf, x);
}

std::vector<Certificate> certify_batch_serial(const FeatureConvexClassifier& clf,
                                              const std::vector<Tensor>& inputs) {
    std::vector<Certificate> out(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) out[i] = certify(clf, inputs[i]);
    return out;
}

std::vector<Certificate> certify_batch(const FeatureConvexClassifier& clf,
                                       const std::vector<Tensor>& inputs,
                                       const ExecPolicy& policy) {
    std::vector<Certificate> out(inputs.size());
    parallel_for(policy, inputs.size(), [&](std::size_t i) { out[i] = certify(clf, inputs[i]); });
    return out;
}

void write_certificates_csv(const std::string& path, const std::vector<int>& true_labels,
                            const std::vector<Certificate>& certs) {
    if (true_labels.size() != certs.size()) {
        throw contract_error("write_certificates_csv: label/certificate count mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("write_certificates_csv: cannot open " + path);
    out << "index,true_class,predicted_class,logit,radius_l1,radius_l2,radius_linf\n";
    for (std::size_t i = 0; i < certs.size(); ++i) {
        const Certificate& c = certs[i];
        out << i << ',' << true_labels[i] << ',' << c.predicted_class << ',' << csv_num(c.shifted_logit)
            << ',' << csv_num(c.radii[norm_index(Norm::l1)]) << ',' << csv_num(c.radii[norm_index(Norm::l2)])
            << ',' << csv_num(c.radii[norm_index(Norm::linf)]) << '\n';
    }
    if (!out) throw parse_error("write_certificates_csv: write failed for " + path);
}

} // namespace fcc
