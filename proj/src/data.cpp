#include "fcc/data.hpp"

#include <cmath>
#include <fstream>

#include "fcc/csv.hpp"

namespace fcc {

void Dataset::validate() const {
    if (inputs.size() != labels.size()) {
        throw contract_error("Dataset: " + std::to_string(inputs.size()) + " inputs vs " +
                             std::to_string(labels.size()) + " labels");
    }
    const std::size_t d = dim();
    for (const Tensor& t : inputs) {
        if (t.rank() != 1 || t.size() != d) {
            throw contract_error("Dataset: inconsistent sample shape " + t.shape_string());
        }
        if (!t.all_finite()) throw contract_error("Dataset: non-finite sample entries");
    }
}

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

class IdxReader {
public:
    explicit IdxReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw parse_error("idx: cannot open " + path);
    }

    std::uint32_t u32_be() {
        unsigned char b[4];
        bytes(b, 4);
        return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
               (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        const std::streamsize got = in_.gcount();
        if (static_cast<std::size_t>(got) != n) {
            throw parse_error("idx: truncated file " + path_, offset_ + got);
        }
        offset_ += static_cast<long long>(n);
    }

    const std::string& path() const noexcept { return path_; }

private:
    std::ifstream in_;
    std::string path_;
    long long offset_ = 0;
};

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    IdxReader images(images_path);
    const std::uint32_t img_magic = images.u32_be();
    if (img_magic != kImagesMagic) {
        throw version_error("idx: bad image magic in " + images_path + " (got " +
                            std::to_string(img_magic) + ")");
    }
    const std::uint32_t n_images = images.u32_be();
    const std::uint32_t rows = images.u32_be();
    const std::uint32_t cols = images.u32_be();
    const std::size_t d = static_cast<std::size_t>(rows) * cols;
    if (d == 0) throw parse_error("idx: zero-sized images in " + images_path);

    IdxReader labels(labels_path);
    const std::uint32_t lab_magic = labels.u32_be();
    if (lab_magic != kLabelsMagic) {
        throw version_error("idx: bad label magic in " + labels_path + " (got " +
                            std::to_string(lab_magic) + ")");
    }
    const std::uint32_t n_labels = labels.u32_be();
    if (n_images != n_labels) {
        throw parse_error("idx: " + std::to_string(n_images) + " images but " +
                          std::to_string(n_labels) + " labels");
    }

    Dataset ds;
    ds.provenance = images_path + " + " + labels_path;
    ds.inputs.reserve(n_images);
    ds.labels.reserve(n_images);
    std::vector<unsigned char> buf(d);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        images.bytes(buf.data(), d);
        Tensor t = Tensor::zeros(d);
        for (std::size_t k = 0; k < d; ++k) t[k] = static_cast<float>(buf[k]) / 255.0f;
        ds.inputs.push_back(std::move(t));
        unsigned char lab;
        labels.bytes(&lab, 1);
        ds.labels.push_back(static_cast<int>(lab));
    }
    ds.validate();
    return ds;
}

Dataset select_pair(const Dataset& ds, int class_a, int class_b) {
    if (class_a == class_b) throw contract_error("select_pair: classes must differ");
    Dataset out;
    out.split_tag = ds.split_tag;
    out.provenance = ds.provenance + " | pair " + std::to_string(class_a) + " vs " + std::to_string(class_b);
    bool saw_a = false, saw_b = false;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] == class_a) {
            out.inputs.push_back(ds.inputs[i]);
            out.labels.push_back(1);
            saw_a = true;
        } else if (ds.labels[i] == class_b) {
            out.inputs.push_back(ds.inputs[i]);
            out.labels.push_back(2);
            saw_b = true;
        }
    }
    if (!saw_a || !saw_b) {
        throw contract_error("select_pair: class " + std::to_string(saw_a ? class_b : class_a) +
                             " absent from dataset");
    }
    return out;
}

Dataset make_ring(std::size_t n_inner, std::size_t n_outer, float r_inner, float r_ring,
                  float noise, std::uint64_t seed, bool inner_sensitive) {
    if (!(0.0f < r_inner && r_inner < r_ring)) {
        throw contract_error("make_ring: need 0 < r_inner < r_ring");
    }
    Rng rng(seed);
    Dataset ds;
    ds.provenance = "ring(n_inner=" + std::to_string(n_inner) + ", n_outer=" + std::to_string(n_outer) + ")";
    const int inner_label = inner_sensitive ? 1 : 2;
    const int outer_label = inner_sensitive ? 2 : 1;
    for (std::size_t i = 0; i < n_inner; ++i) {
        const float r = r_inner * std::sqrt(rng.uniform());
        const float t = 6.28318530717958647692f * rng.uniform();
        ds.inputs.push_back(Tensor::vec({r * std::cos(t), r * std::sin(t)}));
        ds.labels.push_back(inner_label);
    }
    for (std::size_t i = 0; i < n_outer; ++i) {
        const float r = r_ring + noise * rng.normal();
        const float t = 6.28318530717958647692f * rng.uniform();
        ds.inputs.push_back(Tensor::vec({r * std::cos(t), r * std::sin(t)}));
        ds.labels.push_back(outer_label);
    }
    ds.validate();
    return ds;
}

Tensor augment_pad_crop(const Tensor& image, std::size_t h, std::size_t w, std::size_t pad, Rng& rng) {
    if (image.rank() != 1 || image.size() != h * w) {
        throw contract_error("augment_pad_crop: image shape " + image.shape_string() + " is not " +
                             std::to_string(h) + "x" + std::to_string(w));
    }
    if (pad == 0) return image;
    const std::size_t r0 = rng.index(2 * pad + 1);
    const std::size_t c0 = rng.index(2 * pad + 1);
    Tensor out = Tensor::zeros(h * w);
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            // Window position (i + r0, j + c0) in the padded image maps back
            // to (i + r0 - pad, j + c0 - pad) in the original; outside = 0.
            const long long src_r = static_cast<long long>(i + r0) - static_cast<long long>(pad);
            const long long src_c = static_cast<long long>(j + c0) - static_cast<long long>(pad);
            if (src_r >= 0 && src_r < static_cast<long long>(h) && src_c >= 0 &&
                src_c < static_cast<long long>(w)) {
                out[i * w + j] = image[static_cast<std::size_t>(src_r) * w + static_cast<std::size_t>(src_c)];
            }
        }
    }
    return out;
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("dataset csv: cannot open for writing: " + path);
    out << "label";
    for (std::size_t k = 0; k < ds.dim(); ++k) out << ",v" << k;
    out << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.labels[i];
        for (std::size_t k = 0; k < ds.dim(); ++k) out << ',' << csv_num(ds.inputs[i][k]);
        out << '\n';
    }
    if (!out) throw parse_error("dataset csv: write failed: " + path);
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("dataset csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw parse_error("dataset csv: empty file " + path, 0);

    Dataset ds;
    ds.provenance = path;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<float> vals;
        int label = 0;
        std::size_t pos = 0;
        bool first = true;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                                 : comma - pos);
            try {
                if (first) {
                    label = std::stoi(cell);
                    first = false;
                } else {
                    vals.push_back(std::stof(cell));
                }
            } catch (const std::exception&) {
                throw parse_error("dataset csv: bad cell '" + cell + "' on line " + std::to_string(lineno));
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        ds.labels.push_back(label);
        ds.inputs.push_back(Tensor::vec(std::move(vals)));
    }
    ds.validate();
    return ds;
}

} // namespace fcc
