#include "fcc/feature_map.hpp"

#include <cmath>

namespace fcc {

std::string norm_name(Norm p) {
    switch (p) {
        case Norm::l1: return "1";
        case Norm::l2: return "2";
        case Norm::linf: return "inf";
    }
    throw contract_error("norm_name: unsupported norm");
}

Norm norm_from_string(const std::string& s) {
    if (s == "1" || s == "l1") return Norm::l1;
    if (s == "2" || s == "l2") return Norm::l2;
    if (s == "inf" || s == "linf") return Norm::linf;
    throw contract_error("unsupported norm '" + s + "': expected one of 1, 2, inf");
}

void FeatureMap::validate() const {
    if (input_dim == 0) throw contract_error("FeatureMap: input_dim must be >= 1");
    if (kind == Kind::mean_offset_abs_concat) {
        if (mu.rank() != 1 || mu.size() != input_dim) {
            throw contract_error("FeatureMap: mu has shape " + mu.shape_string() + ", expected (" +
                                 std::to_string(input_dim) + ")");
        }
        if (!mu.all_finite()) throw contract_error("FeatureMap: mu contains non-finite entries");
    } else if (mu.numel() != 0) {
        throw contract_error("FeatureMap: identity kind carries no mu");
    }
}

FeatureMap identity_map(std::size_t d) {
    FeatureMap m;
    m.kind = FeatureMap::Kind::identity;
    m.input_dim = d;
    m.validate();
    return m;
}

FeatureMap concat_map(Tensor mu) {
    FeatureMap m;
    m.kind = FeatureMap::Kind::mean_offset_abs_concat;
    m.input_dim = mu.size();
    m.mu = std::move(mu);
    m.validate();
    return m;
}

FeatureMap concat_map_from_mean(const std::vector<Tensor>& train_inputs) {
    if (train_inputs.empty()) throw contract_error("concat_map_from_mean: empty training set");
    const std::size_t d = train_inputs[0].size();
    double total = 0.0;
    std::size_t count = 0;
    for (const Tensor& x : train_inputs) {
        if (x.rank() != 1 || x.size() != d) {
            throw contract_error("concat_map_from_mean: inconsistent input dimensions");
        }
        for (std::size_t i = 0; i < d; ++i) total += static_cast<double>(x[i]);
        count += d;
    }
    const float mean = static_cast<float>(total / static_cast<double>(count));
    Tensor mu = Tensor::zeros(d);
    for (std::size_t i = 0; i < d; ++i) mu[i] = mean;
    return concat_map(std::move(mu));
}

Tensor feature_apply(const FeatureMap& map, const Tensor& x) {
    if (x.rank() != 1 || x.size() != map.input_dim) {
        throw contract_error("feature_apply: input has shape " + x.shape_string() + ", expected (" +
                             std::to_string(map.input_dim) + ")");
    }
    if (map.kind == FeatureMap::Kind::identity) return x;
    const std::size_t d = map.input_dim;
    Tensor z = Tensor::zeros(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
        const float v = x[i] - map.mu[i];
        z[i] = v;
        z[d + i] = std::fabs(v);
    }
    return z;
}

float feature_lipschitz(const FeatureMap& map, Norm p) {
    if (map.kind == FeatureMap::Kind::identity) return 1.0f;
    switch (p) {
        case Norm::l1: return 2.0f;
        case Norm::l2: return std::sqrt(2.0f);
        case Norm::linf: return 1.0f;
    }
    throw contract_error("feature_lipschitz: unsupported norm");
}

Tensor feature_backward(const FeatureMap& map, const Tensor& x, const Tensor& grad_z) {
    if (grad_z.rank() != 1 || grad_z.size() != map.output_dim()) {
        throw contract_error("feature_backward: gradient has shape " + grad_z.shape_string() +
                             ", expected (" + std::to_string(map.output_dim()) + ")");
    }
    if (map.kind == FeatureMap::Kind::identity) return grad_z;
    if (x.rank() != 1 || x.size() != map.input_dim) {
        throw contract_error("feature_backward: input has shape " + x.shape_string());
    }
    const std::size_t d = map.input_dim;
    Tensor gx = Tensor::zeros(d);
    for (std::size_t i = 0; i < d; ++i) {
        const float v = x[i] - map.mu[i];
        float g = grad_z[i];
        if (v > 0.0f) {
            g += grad_z[d + i];
        } else if (v < 0.0f) {
            g -= grad_z[d + i];
        } // sign(0) = 0
        gx[i] = g;
    }
    return gx;
}

} // namespace fcc
