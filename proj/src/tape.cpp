#include "fcc/tape.hpp"

#include <cmath>
#include <cstdlib>

namespace fcc {

int Tape::check(int id) const {
    if (id < 0 || id >= node_count()) {
        throw contract_error("Tape: node id " + std::to_string(id) + " out of range");
    }
    return id;
}

int Tape::push(Node n, Tensor value) {
    nodes_.push_back(n);
    values_.push_back(std::move(value));
    return node_count() - 1;
}

int Tape::leaf(Tensor value) {
    return push({Op::leaf}, std::move(value));
}

int Tape::matvec(int W, int x) {
    Tensor y = fcc::matvec(value(W), value(x)); // shape-checks internally
    return push({Op::matvec, W, x}, std::move(y));
}

int Tape::add(int a, int b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!va.same_shape(vb)) {
        throw contract_error("Tape::add: shape mismatch " + va.shape_string() + " vs " + vb.shape_string());
    }
    Tensor out = va;
    axpy(1.0f, vb, out);
    return push({Op::add, a, b}, std::move(out));
}

int Tape::sub(int a, int b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!va.same_shape(vb)) {
        throw contract_error("Tape::sub: shape mismatch " + va.shape_string() + " vs " + vb.shape_string());
    }
    Tensor out = va;
    axpy(-1.0f, vb, out);
    return push({Op::sub, a, b}, std::move(out));
}

int Tape::scale(int a, float c) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] *= c;
    return push({Op::scale, a, -1, c}, std::move(out));
}

int Tape::relu(int a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out.data()[i] = out.data()[i] > 0.0f ? out.data()[i] : 0.0f;
    }
    return push({Op::relu, a}, std::move(out));
}

int Tape::abs(int a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = std::fabs(out.data()[i]);
    return push({Op::abs, a}, std::move(out));
}

int Tape::sum(int a) {
    const Tensor& va = value(a);
    float acc = 0.0f;
    for (std::size_t i = 0; i < va.numel(); ++i) acc += va.data()[i];
    return push({Op::sum, a}, Tensor::vec({acc}));
}

std::vector<int> Tape::leaf_ids() const {
    std::vector<int> out;
    for (int i = 0; i < node_count(); ++i) {
        if (nodes_[i].op == Op::leaf) out.push_back(i);
    }
    return out;
}

void Tape::set_leaf(int id, const Tensor& v) {
    if (!is_leaf(id)) throw contract_error("Tape::set_leaf: node is not a leaf");
    if (!values_[id].same_shape(v)) {
        throw contract_error("Tape::set_leaf: shape mismatch " + values_[id].shape_string() + " vs " + v.shape_string());
    }
    values_[id] = v;
}

void Tape::replay() {
    for (int i = 0; i < node_count(); ++i) {
        const Node& n = nodes_[i];
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::matvec:
                values_[i] = fcc::matvec(values_[n.a], values_[n.b]);
                break;
            case Op::add: {
                Tensor out = values_[n.a];
                axpy(1.0f, values_[n.b], out);
                values_[i] = std::move(out);
                break;
            }
            case Op::sub: {
                Tensor out = values_[n.a];
                axpy(-1.0f, values_[n.b], out);
                values_[i] = std::move(out);
                break;
            }
            case Op::scale: {
                Tensor out = values_[n.a];
                for (std::size_t k = 0; k < out.numel(); ++k) out.data()[k] *= n.c;
                values_[i] = std::move(out);
                break;
            }
            case Op::relu: {
                Tensor out = values_[n.a];
                for (std::size_t k = 0; k < out.numel(); ++k) {
                    out.data()[k] = out.data()[k] > 0.0f ? out.data()[k] : 0.0f;
                }
                values_[i] = std::move(out);
                break;
            }
            case Op::abs: {
                Tensor out = values_[n.a];
                for (std::size_t k = 0; k < out.numel(); ++k) out.data()[k] = std::fabs(out.data()[k]);
                values_[i] = std::move(out);
                break;
            }
            case Op::sum: {
                const Tensor& va = values_[n.a];
                float acc = 0.0f;
                for (std::size_t k = 0; k < va.numel(); ++k) acc += va.data()[k];
                values_[i] = Tensor::vec({acc});
                break;
            }
        }
    }
}

std::vector<Tensor> Tape::gradient(const std::vector<Seed>& seeds,
                                   const std::vector<int>* wanted_leaves) const {
    const int n = node_count();
    // need[i]: accumulate an adjoint for node i. Interior nodes always
    // propagate; leaves can be opted out to skip their accumulation cost.
    std::vector<char> need(n, 1);
    if (wanted_leaves) {
        for (int i = 0; i < n; ++i) {
            if (nodes_[i].op == Op::leaf) need[i] = 0;
        }
        for (int id : *wanted_leaves) {
            if (!is_leaf(check(id))) throw contract_error("Tape::gradient: wanted node is not a leaf");
            need[id] = 1;
        }
    }

    std::vector<Tensor> adj(n);
    std::vector<char> active(n, 0);
    for (int i = 0; i < n; ++i) {
        if (!need[i]) continue;
        const Tensor& v = values_[i];
        adj[i] = v.rank() == 2 ? Tensor::zeros(v.rows(), v.cols()) : Tensor::zeros(v.numel());
    }
    for (const Seed& s : seeds) {
        check(s.node);
        if (!is_scalar(s.node)) {
            throw contract_error("Tape::gradient: seeded node is not scalar");
        }
        adj[s.node][0] += s.weight;
        active[s.node] = 1;
    }
    for (int i = n - 1; i >= 0; --i) {
        if (!active[i]) continue;
        const Node& nd = nodes_[i];
        const Tensor& g = adj[i];
        switch (nd.op) {
            case Op::leaf:
                break;
            case Op::matvec:
                if (need[nd.a]) {
                    outer_add(g, values_[nd.b], adj[nd.a]); // dW += g x^T
                    active[nd.a] = 1;
                }
                if (need[nd.b]) {
                    matvec_transpose_add(values_[nd.a], g, adj[nd.b]); // dx += W^T g
                    active[nd.b] = 1;
                }
                break;
            case Op::add:
                if (need[nd.a]) {
                    axpy(1.0f, g, adj[nd.a]);
                    active[nd.a] = 1;
                }
                if (need[nd.b]) {
                    axpy(1.0f, g, adj[nd.b]);
                    active[nd.b] = 1;
                }
                break;
            case Op::sub:
                if (need[nd.a]) {
                    axpy(1.0f, g, adj[nd.a]);
                    active[nd.a] = 1;
                }
                if (need[nd.b]) {
                    axpy(-1.0f, g, adj[nd.b]);
                    active[nd.b] = 1;
                }
                break;
            case Op::scale:
                if (need[nd.a]) {
                    axpy(nd.c, g, adj[nd.a]);
                    active[nd.a] = 1;
                }
                break;
            case Op::relu: {
                if (!need[nd.a]) break;
                const Tensor& x = values_[nd.a];
                Tensor& da = adj[nd.a];
                for (std::size_t k = 0; k < x.numel(); ++k) {
                    if (x.data()[k] > 0.0f) da.data()[k] += g.data()[k];
                }
                active[nd.a] = 1;
                break;
            }
            case Op::abs: {
                if (!need[nd.a]) break;
                const Tensor& x = values_[nd.a];
                Tensor& da = adj[nd.a];
                for (std::size_t k = 0; k < x.numel(); ++k) {
                    const float xv = x.data()[k];
                    if (xv > 0.0f) {
                        da.data()[k] += g.data()[k];
                    } else if (xv < 0.0f) {
                        da.data()[k] -= g.data()[k];
                    } // sign(0) = 0: no contribution
                }
                active[nd.a] = 1;
                break;
            }
            case Op::sum: {
                if (!need[nd.a]) break;
                Tensor& da = adj[nd.a];
                const float gv = g[0];
                for (std::size_t k = 0; k < da.numel(); ++k) da.data()[k] += gv;
                active[nd.a] = 1;
                break;
            }
        }
    }
    return adj;
}

std::vector<Tensor> Tape::gradient(int root, float seed) const {
    return gradient(std::vector<Seed>{{root, seed}});
}

double Tape::replay_f64(int root, int leaf_id, std::size_t coord, double delta,
                        std::vector<std::uint8_t>* kinks) const {
    check(root);
    if (leaf_id >= 0 && !is_leaf(check(leaf_id))) {
        throw contract_error("Tape::replay_f64: perturbed node is not a leaf");
    }
    const auto bucket = [](double v) -> std::uint8_t { return v > 0.0 ? 1 : (v < 0.0 ? 0 : 2); };

    const int n = node_count();
    std::vector<std::vector<double>> vals(n);
    for (int i = 0; i < n; ++i) {
        const Node& nd = nodes_[i];
        const Tensor& stored = values_[i];
        std::vector<double>& out = vals[i];
        switch (nd.op) {
            case Op::leaf: {
                out.assign(stored.data(), stored.data() + stored.numel());
                if (i == leaf_id) {
                    if (coord >= out.size()) throw contract_error("Tape::replay_f64: coord out of range");
                    out[coord] += delta;
                }
                break;
            }
            case Op::matvec: {
                const Tensor& W = values_[nd.a]; // shape only; data comes from vals
                const std::size_t m = W.rows(), c = W.cols();
                const std::vector<double>& w = vals[nd.a];
                const std::vector<double>& x = vals[nd.b];
                out.assign(m, 0.0);
                for (std::size_t r = 0; r < m; ++r) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < c; ++j) acc += w[r * c + j] * x[j];
                    out[r] = acc;
                }
                break;
            }
            case Op::add: {
                const std::vector<double>& a = vals[nd.a];
                const std::vector<double>& b = vals[nd.b];
                out.resize(a.size());
                for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
                break;
            }
            case Op::sub: {
                const std::vector<double>& a = vals[nd.a];
                const std::vector<double>& b = vals[nd.b];
                out.resize(a.size());
                for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
                break;
            }
            case Op::scale: {
                const std::vector<double>& a = vals[nd.a];
                const double c = static_cast<double>(nd.c);
                out.resize(a.size());
                for (std::size_t k = 0; k < a.size(); ++k) out[k] = c * a[k];
                break;
            }
            case Op::relu: {
                const std::vector<double>& a = vals[nd.a];
                out.resize(a.size());
                for (std::size_t k = 0; k < a.size(); ++k) {
                    if (kinks) kinks->push_back(bucket(a[k]));
                    out[k] = a[k] > 0.0 ? a[k] : 0.0;
                }
                break;
            }
            case Op::abs: {
                const std::vector<double>& a = vals[nd.a];
                out.resize(a.size());
                for (std::size_t k = 0; k < a.size(); ++k) {
                    if (kinks) kinks->push_back(bucket(a[k]));
                    out[k] = std::fabs(a[k]);
                }
                break;
            }
            case Op::sum: {
                const std::vector<double>& a = vals[nd.a];
                double acc = 0.0;
                for (double v : a) acc += v;
                out.assign(1, acc);
                break;
            }
        }
    }
    if (vals[root].size() != 1) throw contract_error("Tape::replay_f64: root is not scalar");
    return vals[root][0];
}

Evaluation evaluate(const TapeBuilder& build, const std::vector<Tensor>& inputs) {
    Evaluation ev;
    ev.input_ids.reserve(inputs.size());
    for (const Tensor& t : inputs) ev.input_ids.push_back(ev.tape.leaf(t));
    ev.output_ids = build(ev.tape, ev.input_ids);
    return ev;
}

GradReport grad_check(const TapeBuilder& build, const std::vector<Tensor>& inputs,
                      double tol, double fd_step, std::size_t max_coords_per_leaf) {
    if (tol <= 0.0) throw contract_error("grad_check: tol must be positive");
    if (fd_step <= 0.0) throw contract_error("grad_check: fd_step must be positive");

    Evaluation ev = evaluate(build, inputs);
    if (ev.output_ids.size() != 1 || !ev.tape.is_scalar(ev.output_ids[0])) {
        throw contract_error("grad_check: builder must produce exactly one scalar output");
    }
    const int root = ev.output_ids[0];
    const std::vector<Tensor> adj = ev.tape.gradient(root);

    GradReport report;
    report.tol = tol;
    report.fd_step = fd_step;

    std::vector<std::uint8_t> base_kinks;
    ev.tape.replay_f64(root, -1, 0, 0.0, &base_kinks);

    std::vector<std::uint8_t> kp, km;
    for (int leaf : ev.tape.leaf_ids()) {
        const std::size_t n = ev.tape.value(leaf).numel();
        std::vector<std::size_t> coords;
        if (max_coords_per_leaf == 0 || n <= max_coords_per_leaf) {
            coords.resize(n);
            for (std::size_t k = 0; k < n; ++k) coords[k] = k;
        } else {
            const double stride = static_cast<double>(n) / static_cast<double>(max_coords_per_leaf);
            coords.reserve(max_coords_per_leaf);
            for (std::size_t k = 0; k < max_coords_per_leaf; ++k) {
                coords.push_back(static_cast<std::size_t>(static_cast<double>(k) * stride));
            }
        }
        for (std::size_t c : coords) {
            kp.clear();
            km.clear();
            const double fp = ev.tape.replay_f64(root, leaf, c, fd_step, &kp);
            const double fm = ev.tape.replay_f64(root, leaf, c, -fd_step, &km);

            GradCheckEntry e;
            e.leaf = leaf;
            e.coord = c;
            e.analytic = static_cast<double>(adj[leaf].data()[c]);
            e.fd = (fp - fm) / (2.0 * fd_step);
            e.excluded = (kp != base_kinks) || (km != base_kinks);
            const double scale = std::max({1.0, std::fabs(e.analytic), std::fabs(e.fd)});
            e.rel_err = std::fabs(e.analytic - e.fd) / scale;

            ++report.checked;
            if (e.excluded) {
                ++report.excluded;
            } else if (e.rel_err > report.max_rel_err) {
                report.max_rel_err = e.rel_err;
            }
            report.entries.push_back(e);
        }
    }
    report.pass = report.max_rel_err <= tol;
    return report;
}

} // namespace fcc
