// Binary model container shared by icnn_save/icnn_load and the classifier
// artifact. Layout (all integers little-endian):
//
//   bytes 0..7   magic "FCNNMDL1"
//   bytes 8..11  u32 format version (currently 1)
//   bytes 12..19 u64 manifest length in bytes
//   manifest     UTF-8 JSON: kind ("icnn"/"classifier"), spec fields,
//                constraint mask, blob directory (name, rows, cols), and for
//                classifiers the feature-map kind. No floats live in the
//                JSON — every numeric payload is a blob, so round-trips are
//                bit-exact by construction.
//   blobs        raw little-endian float32 in directory order: the trainable
//                tensors (layer-major A, b, C), then mu and tau for
//                classifiers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fcc/certify.hpp"
#include "fcc/icnn.hpp"

namespace fcc {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'F', 'C', 'N', 'N', 'M', 'D', 'L', '1'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw parse_error("model file: cannot open for writing: " + path);
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }

    void u32(std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
        bytes(b, 4);
    }

    void u64(std::uint64_t v) {
        u32(static_cast<std::uint32_t>(v));
        u32(static_cast<std::uint32_t>(v >> 32));
    }

    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    void tensor(const Tensor& t) {
        for (std::size_t i = 0; i < t.numel(); ++i) f32(t.data()[i]);
    }

    void close(const std::string& path) {
        out_.flush();
        if (!out_) throw parse_error("model file: write failed: " + path);
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw parse_error("model file: cannot open: " + path);
    }

    long long offset() const noexcept { return offset_; }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        const std::streamsize got = in_.gcount();
        if (static_cast<std::size_t>(got) != n) {
            throw parse_error("model file truncated: " + path_, offset_ + got);
        }
        offset_ += static_cast<long long>(n);
    }

    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        const std::uint64_t hi = u32();
        return lo | (hi << 32);
    }

    float f32() { return std::bit_cast<float>(u32()); }

    void tensor(Tensor& t) {
        for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = f32();
    }

private:
    std::ifstream in_;
    std::string path_;
    long long offset_ = 0;
};

json spec_to_json(const IcnnSpec& spec) {
    return json{{"input_dim", spec.input_dim},
                {"hidden_dims", spec.hidden_dims},
                {"passthrough", spec.passthrough},
                {"seed", spec.seed}};
}

IcnnSpec spec_from_json(const json& j) {
    IcnnSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
    spec.passthrough = j.at("passthrough").get<bool>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

json blob_entry(const std::string& name, const Tensor& t) {
    return json{{"name", name},
                {"rows", t.rank() == 2 ? t.rows() : t.numel()},
                {"cols", t.rank() == 2 ? t.cols() : 0}};
}

void save_container(const std::string& path, const std::string& kind, const IcnnSpec& spec,
                    const IcnnParams& params, const FeatureMap* map, const float* tau) {
    icnn_validate(spec, params);

    json manifest;
    manifest["kind"] = kind;
    manifest["spec"] = spec_to_json(spec);
    json mask = json::array();
    for (char c : params.a_constrained) mask.push_back(static_cast<bool>(c));
    manifest["constraint_mask"] = mask;

    json blobs = json::array();
    std::vector<const Tensor*> payload;
    const auto add = [&](const std::string& name, const Tensor& t) {
        blobs.push_back(blob_entry(name, t));
        payload.push_back(&t);
    };
    const std::size_t L = params.layers();
    for (std::size_t k = 0; k < L; ++k) {
        add("A" + std::to_string(k), params.A[k]);
        add("b" + std::to_string(k), params.b[k]);
        if (params.passthrough && k >= 1) add("C" + std::to_string(k), params.C[k]);
    }

    Tensor tau_tensor;
    if (map) {
        manifest["feature_map"] = json{{"kind", map->kind == FeatureMap::Kind::identity
                                                    ? "identity"
                                                    : "mean_offset_abs_concat"},
                                       {"input_dim", map->input_dim}};
        if (map->kind == FeatureMap::Kind::mean_offset_abs_concat) add("mu", map->mu);
        tau_tensor = Tensor::vec({*tau});
        add("tau", tau_tensor);
    }
    manifest["blobs"] = blobs;

    const std::string text = manifest.dump();
    Writer w(path);
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kFormatVersion);
    w.u64(text.size());
    w.bytes(text.data(), text.size());
    for (const Tensor* t : payload) w.tensor(*t);
    w.close(path);
}

struct Container {
    std::string kind;
    IcnnSpec spec;
    IcnnParams params;
    FeatureMap map;
    bool has_map = false;
    float tau = 0.0f;
};

Container load_container(const std::string& path) {
    Reader r(path);

    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw version_error("model file: unrecognized magic string in " + path);
    }
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw version_error("model file: format version " + std::to_string(version) +
                            " not supported (this build reads version " +
                            std::to_string(kFormatVersion) + ")");
    }

    const std::uint64_t manifest_len = r.u64();
    const long long manifest_start = r.offset();
    std::string text(manifest_len, '\0');
    r.bytes(text.data(), text.size());

    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error("model file: bad manifest JSON: " + std::string(e.what()),
                          manifest_start + static_cast<long long>(e.byte) - 1);
    }

    Container c;
    try {
        c.kind = manifest.at("kind").get<std::string>();
        c.spec = spec_from_json(manifest.at("spec"));
        c.spec.validate();

        const std::size_t L = c.spec.layers();
        const std::vector<std::size_t> d = c.spec.dims();
        c.params.passthrough = c.spec.passthrough;
        c.params.a_constrained.assign(L, 1);
        c.params.a_constrained[0] = 0;

        const auto mask = manifest.at("constraint_mask").get<std::vector<bool>>();
        if (mask.size() != L) throw parse_error("model file: constraint mask length mismatch");
        for (std::size_t k = 0; k < L; ++k) {
            if (mask[k] != (k >= 1)) throw parse_error("model file: unexpected constraint mask");
        }

        c.params.A.reserve(L);
        c.params.b.reserve(L);
        c.params.C.resize(L);
        for (std::size_t k = 0; k < L; ++k) {
            c.params.A.push_back(Tensor::zeros(d[k + 1], d[k]));
            c.params.b.push_back(Tensor::zeros(d[k + 1]));
            if (c.spec.passthrough && k >= 1) c.params.C[k] = Tensor::zeros(d[k + 1], c.spec.input_dim);
        }

        if (manifest.contains("feature_map")) {
            c.has_map = true;
            const json& fm = manifest.at("feature_map");
            const std::string kind = fm.at("kind").get<std::string>();
            const std::size_t dim = fm.at("input_dim").get<std::size_t>();
            if (kind == "identity") {
                c.map = identity_map(dim);
            } else if (kind == "mean_offset_abs_concat") {
                c.map.kind = FeatureMap::Kind::mean_offset_abs_concat;
                c.map.input_dim = dim;
                c.map.mu = Tensor::zeros(dim); // blob fills it below
            } else {
                throw parse_error("model file: unknown feature map kind '" + kind + "'");
            }
        }

        // Walk the blob directory; shapes must match what the spec dictates.
        std::vector<const json*> entries;
        for (const json& e : manifest.at("blobs")) entries.push_back(&e);
        std::size_t next = 0;
        const auto take = [&](const std::string& name, Tensor& t) {
            if (next >= entries.size()) throw parse_error("model file: missing blob " + name);
            const json& e = *entries[next++];
            const std::string got = e.at("name").get<std::string>();
            const std::size_t rows = e.at("rows").get<std::size_t>();
            const std::size_t cols = e.at("cols").get<std::size_t>();
            const std::size_t t_rows = t.rank() == 2 ? t.rows() : t.numel();
            const std::size_t t_cols = t.rank() == 2 ? t.cols() : 0;
            if (got != name || rows != t_rows || cols != t_cols) {
                throw parse_error("model file: blob directory mismatch at " + name + " (found " + got + ")");
            }
            r.tensor(t);
        };
        for (std::size_t k = 0; k < L; ++k) {
            take("A" + std::to_string(k), c.params.A[k]);
            take("b" + std::to_string(k), c.params.b[k]);
            if (c.spec.passthrough && k >= 1) take("C" + std::to_string(k), c.params.C[k]);
        }
        if (c.has_map) {
            if (c.map.kind == FeatureMap::Kind::mean_offset_abs_concat) take("mu", c.map.mu);
            Tensor tau_tensor = Tensor::zeros(1);
            take("tau", tau_tensor);
            c.tau = tau_tensor[0];
        }
        if (next != entries.size()) throw parse_error("model file: unexpected trailing blob entries");
    } catch (const json::exception& e) {
        throw parse_error("model file: manifest field error: " + std::string(e.what()), manifest_start);
    }

    icnn_validate(c.spec, c.params);
    return c;
}

} // namespace

void icnn_save(const IcnnParams& params, const IcnnSpec& spec, const std::string& path) {
    save_container(path, "icnn", spec, params, nullptr, nullptr);
}

IcnnFile icnn_load(const std::string& path) {
    Container c = load_container(path);
    if (c.kind != "icnn") {
        throw parse_error("model file: expected a bare network file, found kind '" + c.kind + "'");
    }
    return {std::move(c.params), std::move(c.spec)};
}

void model_save(const FeatureConvexClassifier& clf, const std::string& path) {
    clf.validate();
    save_container(path, "classifier", clf.spec, clf.params, &clf.map, &clf.tau);
}

FeatureConvexClassifier model_load(const std::string& path) {
    Container c = load_container(path);
    if (c.kind != "classifier" || !c.has_map) {
        throw parse_error("model file: expected a classifier artifact, found kind '" + c.kind + "'");
    }
    FeatureConvexClassifier clf;
    clf.map = std::move(c.map);
    clf.spec = std::move(c.spec);
    clf.params = std::move(c.params);
    clf.tau = c.tau;
    clf.validate();
    return clf;
}

} // namespace fcc
