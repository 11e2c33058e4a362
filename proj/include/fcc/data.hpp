#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcc/rng.hpp"
#include "fcc/tensor.hpp"

namespace fcc {

// Labeled sample collection. Labels are raw digits straight after load_idx;
// select_pair and the synthetic generators emit binary labels {1, 2} with
// class 1 the sensitive one.
struct Dataset {
    std::vector<Tensor> inputs;
    std::vector<int> labels;
    std::string split_tag;   // "train" / "test" / "" for synthetic
    std::string provenance;  // where the samples came from

    std::size_t size() const noexcept { return inputs.size(); }
    std::size_t dim() const { return inputs.empty() ? 0 : inputs[0].size(); }
    void validate() const; // parallel arrays, consistent dims, finite entries
};

// Reads the big-endian IDX pair (images magic 0x00000803, labels magic
// 0x00000801), scales pixels from [0,255] into [0,1], and enforces
// image/label count consistency.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Keeps only two classes and relabels: class_a -> 1 (sensitive), class_b -> 2.
// Sample data is carried over bit-exactly; only labels change.
Dataset select_pair(const Dataset& ds, int class_a, int class_b);

// 2-D two-class set: n_inner points uniform in the disk of radius r_inner
// around the origin, n_outer points on the circle of radius r_ring with
// radial Gaussian noise. inner_sensitive picks which class is labeled 1.
Dataset make_ring(std::size_t n_inner, std::size_t n_outer, float r_inner, float r_ring,
                  float noise, std::uint64_t seed, bool inner_sensitive);

// Zero-pads an h x w image (flattened row-major) by `pad` pixels on every
// side and crops a uniformly random h x w window (two rng draws). pad = 0
// returns the input unchanged and draws nothing.
Tensor augment_pad_crop(const Tensor& image, std::size_t h, std::size_t w, std::size_t pad, Rng& rng);

// Simple CSV round-trip for synthetic datasets: header, then one row per
// sample (label, then d value columns). Values survive bit-exactly.
void save_dataset_csv(const Dataset& ds, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

} // namespace fcc
