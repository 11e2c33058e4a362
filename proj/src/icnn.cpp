#include "fcc/icnn.hpp"

#include <cmath>
#include <limits>

namespace fcc {

std::vector<std::size_t> IcnnSpec::dims() const {
    std::vector<std::size_t> d;
    d.reserve(hidden_dims.size() + 2);
    d.push_back(input_dim);
    d.insert(d.end(), hidden_dims.begin(), hidden_dims.end());
    d.push_back(1);
    return d;
}

void IcnnSpec::validate() const {
    if (input_dim < 1) throw contract_error("IcnnSpec: input_dim must be >= 1");
    if (hidden_dims.empty()) throw contract_error("IcnnSpec: at least one hidden layer required");
    for (std::size_t h : hidden_dims) {
        if (h < 1) throw contract_error("IcnnSpec: hidden dims must be >= 1");
    }
}

float IcnnParams::min_constrained_entry() const {
    float m = std::numeric_limits<float>::infinity();
    for (std::size_t k = 0; k < A.size(); ++k) {
        if (!a_constrained[k]) continue;
        for (std::size_t i = 0; i < A[k].numel(); ++i) m = std::min(m, A[k].data()[i]);
    }
    return m;
}

std::vector<Tensor*> IcnnParams::trainable() {
    std::vector<Tensor*> out;
    for (std::size_t k = 0; k < A.size(); ++k) {
        out.push_back(&A[k]);
        out.push_back(&b[k]);
        if (passthrough && k >= 1) out.push_back(&C[k]);
    }
    return out;
}

std::vector<const Tensor*> IcnnParams::trainable() const {
    std::vector<const Tensor*> out;
    for (std::size_t k = 0; k < A.size(); ++k) {
        out.push_back(&A[k]);
        out.push_back(&b[k]);
        if (passthrough && k >= 1) out.push_back(&C[k]);
    }
    return out;
}

IcnnParams icnn_init(const IcnnSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::vector<std::size_t> d = spec.dims();
    const std::size_t L = spec.layers();
    const std::size_t q = spec.input_dim;

    IcnnParams p;
    p.passthrough = spec.passthrough;
    p.A.reserve(L);
    p.b.reserve(L);
    p.C.resize(L); // C[0] stays empty
    p.a_constrained.assign(L, 1);
    p.a_constrained[0] = 0;

    for (std::size_t k = 0; k < L; ++k) {
        const std::size_t rows = d[k + 1], cols = d[k];
        Tensor A = Tensor::zeros(rows, cols);
        if (k == 0) {
            const float bound = 1.0f / std::sqrt(static_cast<float>(cols));
            for (std::size_t i = 0; i < A.numel(); ++i) A.data()[i] = rng.uniform(-bound, bound);
        } else {
            for (std::size_t i = 0; i < A.numel(); ++i) A.data()[i] = rng.uniform(0.0f, kConstrainedInitMax);
        }
        p.A.push_back(std::move(A));
        p.b.push_back(Tensor::zeros(rows));
        if (spec.passthrough && k >= 1) {
            Tensor C = Tensor::zeros(rows, q);
            const float bound = 1.0f / std::sqrt(static_cast<float>(q));
            for (std::size_t i = 0; i < C.numel(); ++i) C.data()[i] = rng.uniform(-bound, bound);
            p.C[k] = std::move(C);
        }
    }
    return p;
}

void icnn_validate(const IcnnSpec& spec, const IcnnParams& params) {
    spec.validate();
    const std::vector<std::size_t> d = spec.dims();
    const std::size_t L = spec.layers();
    if (params.A.size() != L || params.b.size() != L || params.C.size() != L ||
        params.a_constrained.size() != L || params.passthrough != spec.passthrough) {
        throw contract_error("icnn_validate: layer count or passthrough flag mismatch");
    }
    for (std::size_t k = 0; k < L; ++k) {
        if (params.A[k].rank() != 2 || params.A[k].rows() != d[k + 1] || params.A[k].cols() != d[k]) {
            throw contract_error("icnn_validate: A[" + std::to_string(k) + "] has shape " +
                                 params.A[k].shape_string());
        }
        if (params.b[k].rank() != 1 || params.b[k].size() != d[k + 1]) {
            throw contract_error("icnn_validate: b[" + std::to_string(k) + "] has shape " +
                                 params.b[k].shape_string());
        }
        const bool expect_c = spec.passthrough && k >= 1;
        if (expect_c) {
            if (params.C[k].rank() != 2 || params.C[k].rows() != d[k + 1] ||
                params.C[k].cols() != spec.input_dim) {
                throw contract_error("icnn_validate: C[" + std::to_string(k) + "] has shape " +
                                     params.C[k].shape_string());
            }
        } else if (params.C[k].numel() != 0) {
            throw contract_error("icnn_validate: unexpected passthrough matrix at layer " + std::to_string(k));
        }
        if (static_cast<bool>(params.a_constrained[k]) != (k >= 1)) {
            throw contract_error("icnn_validate: constraint mask must mark exactly layers 2..L");
        }
    }
}

namespace {

void check_input(const IcnnParams& params, const Tensor& z) {
    if (params.A.empty()) throw contract_error("icnn: empty parameter set");
    if (z.rank() != 1 || z.size() != params.input_dim()) {
        throw contract_error("icnn: input has shape " + z.shape_string() + ", expected (" +
                             std::to_string(params.input_dim()) + ")");
    }
    if (!z.all_finite()) throw contract_error("icnn: input contains non-finite entries");
}

void relu_inplace(Tensor& t) {
    for (std::size_t i = 0; i < t.numel(); ++i) {
        t.data()[i] = t.data()[i] > 0.0f ? t.data()[i] : 0.0f;
    }
}

// Records one forward pass on the tape, reusing already-registered
// parameter leaves. Composition order matches icnn_forward exactly.
int record_forward(Tape& tape, const IcnnParams& params, const std::vector<int>& param_ids, int z_id) {
    // param_ids follows the trainable order; walk it layer by layer.
    std::size_t pi = 0;
    const std::size_t L = params.layers();
    int h = -1;
    for (std::size_t k = 0; k < L; ++k) {
        const int a_id = param_ids[pi++];
        const int b_id = param_ids[pi++];
        int t = tape.matvec(a_id, k == 0 ? z_id : h);
        t = tape.add(t, b_id);
        if (params.passthrough && k >= 1) {
            const int c_id = param_ids[pi++];
            t = tape.add(t, tape.matvec(c_id, z_id));
        }
        h = (k + 1 < L) ? tape.relu(t) : t;
    }
    return h; // scalar logit node
}

} // namespace

float icnn_forward(const IcnnParams& params, const Tensor& z) {
    check_input(params, z);
    const std::size_t L = params.layers();
    Tensor h;
    for (std::size_t k = 0; k < L; ++k) {
        Tensor t = matvec(params.A[k], k == 0 ? z : h);
        axpy(1.0f, params.b[k], t);
        if (params.passthrough && k >= 1) {
            const Tensor cz = matvec(params.C[k], z);
            axpy(1.0f, cz, t);
        }
        if (k + 1 < L) relu_inplace(t);
        h = std::move(t);
    }
    if (h.numel() != 1) throw contract_error("icnn: output layer is not scalar");
    return h[0];
}

IcnnGraph icnn_graph(const IcnnParams& params, const Tensor& z) {
    check_input(params, z);
    IcnnGraph g;
    for (const Tensor* t : params.trainable()) g.param_ids.push_back(g.tape.leaf(*t));
    g.z_id = g.tape.leaf(z);
    g.logit_id = record_forward(g.tape, params, g.param_ids, g.z_id);
    return g;
}

IcnnGraph icnn_graph2(const IcnnParams& params, const Tensor& z, const Tensor& z2) {
    check_input(params, z);
    check_input(params, z2);
    IcnnGraph g;
    for (const Tensor* t : params.trainable()) g.param_ids.push_back(g.tape.leaf(*t));
    g.z_id = g.tape.leaf(z);
    g.z2_id = g.tape.leaf(z2);
    g.logit_id = record_forward(g.tape, params, g.param_ids, g.z_id);
    g.logit2_id = record_forward(g.tape, params, g.param_ids, g.z2_id);
    return g;
}

LogitAndGrad icnn_value_and_input_gradient(const IcnnParams& params, const Tensor& z) {
    IcnnGraph g = icnn_graph(params, z);
    const std::vector<int> wanted{g.z_id};
    std::vector<Tensor> adj = g.tape.gradient({{g.logit_id, 1.0f}}, &wanted);
    return {g.tape.value(g.logit_id)[0], std::move(adj[g.z_id])};
}

Tensor icnn_input_gradient(const IcnnParams& params, const Tensor& z) {
    return icnn_value_and_input_gradient(params, z).grad_z;
}

void project_nonnegative(IcnnParams& params) {
    for (std::size_t k = 0; k < params.A.size(); ++k) {
        if (!params.a_constrained[k]) continue;
        Tensor& A = params.A[k];
        for (std::size_t i = 0; i < A.numel(); ++i) {
            if (A.data()[i] < 0.0f) A.data()[i] = 0.0f;
        }
    }
}

} // namespace fcc
