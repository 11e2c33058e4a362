#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "fcc/data.hpp"
#include "fcc/errors.hpp"
#include "fcc/rng.hpp"

using namespace fcc;

namespace {

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void push_u32_be(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

// Two 2x2 images with known pixel bytes plus their label file.
struct IdxFixture {
    std::string images = "idx_fixture_images";
    std::string labels = "idx_fixture_labels";

    IdxFixture() {
        std::vector<std::uint8_t> img;
        push_u32_be(img, 0x00000803);
        push_u32_be(img, 2); // count
        push_u32_be(img, 2); // rows
        push_u32_be(img, 2); // cols
        for (std::uint8_t px : {0, 51, 102, 255, 255, 204, 153, 0}) img.push_back(px);
        write_bytes(images, img);

        std::vector<std::uint8_t> lab;
        push_u32_be(lab, 0x00000801);
        push_u32_be(lab, 2);
        lab.push_back(3);
        lab.push_back(8);
        write_bytes(labels, lab);
    }
    ~IdxFixture() {
        std::remove(images.c_str());
        std::remove(labels.c_str());
    }
};

} // namespace

TEST_CASE("idx loader scales the known fixture bytes into [0,1]") {
    IdxFixture fx;
    const Dataset ds = load_idx(fx.images, fx.labels);
    REQUIRE(ds.size() == 2);
    REQUIRE(ds.dim() == 4);
    CHECK(ds.inputs[0][0] == 0.0f);
    CHECK(ds.inputs[0][1] == 51.0f / 255.0f);
    CHECK(ds.inputs[0][2] == 102.0f / 255.0f);
    CHECK(ds.inputs[0][3] == 1.0f);
    CHECK(ds.inputs[1][0] == 1.0f);
    CHECK(ds.inputs[1][3] == 0.0f);
    CHECK(ds.labels[0] == 3);
    CHECK(ds.labels[1] == 8);
    ds.validate();
}

TEST_CASE("idx loader rejects wrong magic as a version error") {
    IdxFixture fx;
    std::vector<std::uint8_t> bad;
    push_u32_be(bad, 0x00000804); // wrong type byte
    push_u32_be(bad, 1);
    push_u32_be(bad, 2);
    push_u32_be(bad, 2);
    for (int i = 0; i < 4; ++i) bad.push_back(0);
    write_bytes(fx.images, bad);
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), version_error);
}

TEST_CASE("idx loader reports truncation as a parse error") {
    IdxFixture fx;
    std::vector<std::uint8_t> img;
    push_u32_be(img, 0x00000803);
    push_u32_be(img, 2);
    push_u32_be(img, 2);
    push_u32_be(img, 2);
    for (int i = 0; i < 5; ++i) img.push_back(7); // 8 pixel bytes promised, 5 delivered
    write_bytes(fx.images, img);
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), parse_error);
}

TEST_CASE("idx loader enforces image and label count consistency") {
    IdxFixture fx;
    std::vector<std::uint8_t> lab;
    push_u32_be(lab, 0x00000801);
    push_u32_be(lab, 3); // three labels vs two images
    lab.push_back(1);
    lab.push_back(2);
    lab.push_back(3);
    write_bytes(fx.labels, lab);
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), parse_error);
}

TEST_CASE("bundled MNIST 3-8 subset loads with the documented shape") {
    const std::string dir = std::string(FCC_SOURCE_DIR) + "/data/mnist38/";
    const Dataset train = load_idx(dir + "train-images-idx3-ubyte", dir + "train-labels-idx1-ubyte");
    const Dataset test = load_idx(dir + "test-images-idx3-ubyte", dir + "test-labels-idx1-ubyte");
    CHECK(train.size() == 1580);
    CHECK(test.size() == 396);
    CHECK(train.dim() == 784);
    CHECK(test.dim() == 784);
    for (const Dataset* ds : {&train, &test}) {
        for (int lab : ds->labels) CHECK((lab == 3 || lab == 8));
        for (std::size_t i = 0; i < ds->size(); i += 97) {
            for (std::size_t j = 0; j < 784; ++j) {
                CHECK(ds->inputs[i][j] >= 0.0f);
                CHECK(ds->inputs[i][j] <= 1.0f);
            }
        }
    }
}

TEST_CASE("select_pair relabels and carries sample data bit-exactly") {
    IdxFixture fx;
    const Dataset ds = load_idx(fx.images, fx.labels);
    const Dataset pair = select_pair(ds, 3, 8);
    REQUIRE(pair.size() == 2);
    CHECK(pair.labels[0] == 1);
    CHECK(pair.labels[1] == 2);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(pair.inputs[0][j] == ds.inputs[0][j]);
        CHECK(pair.inputs[1][j] == ds.inputs[1][j]);
    }
    CHECK_THROWS_AS(select_pair(ds, 3, 3), contract_error);
    CHECK_THROWS_AS(select_pair(ds, 3, 9), contract_error); // class 9 absent
}

TEST_CASE("ring generator places classes at the advertised radii") {
    const Dataset ring = make_ring(50, 100, 1.0f, 4.0f, 0.1f, 11, /*inner_sensitive=*/true);
    REQUIRE(ring.size() == 150);
    REQUIRE(ring.dim() == 2);
    std::size_t inner_count = 0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const float r = std::hypot(ring.inputs[i][0], ring.inputs[i][1]);
        if (ring.labels[i] == 1) {
            ++inner_count;
            CHECK(r <= 1.0f + 1e-6f);
        } else {
            CHECK(r >= 4.0f - 1.0f); // noise is 0.1; a wide sanity band
            CHECK(r <= 4.0f + 1.0f);
        }
    }
    CHECK(inner_count == 50);

    const Dataset flipped = make_ring(50, 100, 1.0f, 4.0f, 0.1f, 11, /*inner_sensitive=*/false);
    std::size_t outer_sensitive = 0;
    for (std::size_t i = 0; i < flipped.size(); ++i) {
        if (flipped.labels[i] == 1) ++outer_sensitive;
    }
    CHECK(outer_sensitive == 100);
}

TEST_CASE("ring is deterministic per seed") {
    const Dataset a = make_ring(10, 10, 1, 4, 0.2f, 3, true);
    const Dataset b = make_ring(10, 10, 1, 4, 0.2f, 3, true);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.inputs[i][0] == b.inputs[i][0]);
        CHECK(a.inputs[i][1] == b.inputs[i][1]);
    }
}

TEST_CASE("pad-and-crop with pad zero is the identity and draws nothing") {
    Rng rng(55);
    Tensor img = Tensor::zeros(9);
    for (std::size_t i = 0; i < 9; ++i) img[i] = static_cast<float>(i);
    const Tensor out = augment_pad_crop(img, 3, 3, 0, rng);
    for (std::size_t i = 0; i < 9; ++i) CHECK(out[i] == img[i]);
    Rng untouched(55);
    CHECK(rng.next_u32() == untouched.next_u32()); // no draws were consumed
}

TEST_CASE("pad-and-crop windows contain the original shifted by the drawn offsets") {
    // With pad=1 there are 9 possible windows; every pixel of the crop is
    // either zero padding or an original pixel at the shifted location.
    Tensor img = Tensor::zeros(4);
    img[0] = 1.0f;
    img[1] = 2.0f;
    img[2] = 3.0f;
    img[3] = 4.0f; // 2x2 image
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const Tensor crop = augment_pad_crop(img, 2, 2, 1, rng);
        REQUIRE(crop.size() == 4);
        // Reconstruct the offset by brute force: exactly one (dr, dc) must explain the crop.
        int matches = 0;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                bool ok = true;
                for (int r = 0; r < 2 && ok; ++r) {
                    for (int c = 0; c < 2 && ok; ++c) {
                        const int sr = r + dr, sc = c + dc;
                        const float expect =
                            (sr >= 0 && sr < 2 && sc >= 0 && sc < 2)
                                ? img[static_cast<std::size_t>(sr * 2 + sc)]
                                : 0.0f;
                        ok = crop[static_cast<std::size_t>(r * 2 + c)] == expect;
                    }
                }
                if (ok) ++matches;
            }
        }
        CHECK(matches >= 1);
    }
}

TEST_CASE("pad-and-crop consumes exactly two index draws") {
    Tensor img = Tensor::zeros(4);
    Rng a(77), b(77);
    (void)augment_pad_crop(img, 2, 2, 1, a);
    (void)b.index(3);
    (void)b.index(3);
    CHECK(a.next_u32() == b.next_u32());
}

TEST_CASE("dataset CSV round-trips float values bit-exactly") {
    Dataset ds;
    Rng rng(1234);
    for (int i = 0; i < 20; ++i) {
        Tensor x = Tensor::zeros(3);
        for (std::size_t j = 0; j < 3; ++j) x[j] = rng.uniform(-10, 10) * 1e-3f;
        ds.inputs.push_back(x);
        ds.labels.push_back(1 + static_cast<int>(rng.index(2)));
    }
    ds.split_tag = "synthetic";
    const std::string path = "dataset_roundtrip.csv";
    save_dataset_csv(ds, path);
    const Dataset back = load_dataset_csv(path);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.labels[i] == ds.labels[i]);
        for (std::size_t j = 0; j < 3; ++j) CHECK(back.inputs[i][j] == ds.inputs[i][j]);
    }
    std::remove(path.c_str());
}

TEST_CASE("dataset validation catches ragged and non-finite rows") {
    Dataset ds;
    ds.inputs = {Tensor::vec({1, 2}), Tensor::vec({3})};
    ds.labels = {1, 2};
    CHECK_THROWS_AS(ds.validate(), contract_error);
    ds.inputs[1] = Tensor::vec({3, std::numeric_limits<float>::quiet_NaN()});
    CHECK_THROWS_AS(ds.validate(), contract_error);
    ds.inputs[1] = Tensor::vec({3, 4});
    ds.labels.pop_back();
    CHECK_THROWS_AS(ds.validate(), contract_error);
}
