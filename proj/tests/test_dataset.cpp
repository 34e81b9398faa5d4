#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "testutil.hpp"
#include "wdncnn/dataset.hpp"
#include "wdncnn/errors.hpp"
#include "wdncnn/image_io.hpp"
#include "wdncnn/wavelet.hpp"

using namespace wdncnn;
using testutil::bit_identical;
using testutil::random_tensor;
using testutil::TempDir;

TEST_SUITE_BEGIN("dataset");

namespace {

Tensor ramp_image(int c, int h, int w) {
    Tensor t({c, h, w});
    for (std::int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<double>((i * 7) % 256) / 255.0;
    return t;
}

}  // namespace

TEST_CASE("pgm and ppm encode/decode round-trip exactly on 8-bit grids") {
    const Tensor gray = ramp_image(1, 5, 7);
    const Tensor rt_gray = decode_image(encode_image(gray), "<memory>");
    CHECK(bit_identical(gray, rt_gray));

    const Tensor color = ramp_image(3, 4, 6);
    const Tensor rt_color = decode_image(encode_image(color), "<memory>");
    CHECK(bit_identical(color, rt_color));
}

TEST_CASE("image write/read file round-trip and quantization bound") {
    TempDir dir;
    Rng rng(41);
    const Tensor img = random_tensor({1, 9, 11}, rng, 0.0, 1.0);
    write_image(dir.file("x.pgm"), img);
    const Tensor back = read_image(dir.file("x.pgm"));
    REQUIRE(back.shape() == img.shape());
    // Round-to-nearest on a 1/255 grid.
    CHECK(max_abs_diff(back, img) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("image write clamps out-of-range intensities") {
    Tensor img({1, 1, 3});
    img[0] = -0.5;
    img[1] = 0.5;
    img[2] = 1.5;
    const Tensor back = decode_image(encode_image(img), "<memory>");
    CHECK(back[0] == 0.0);
    CHECK(back[1] == doctest::Approx(0.5).epsilon(1e-2));
    CHECK(back[2] == 1.0);
}

TEST_CASE("pgm header accepts comments and flexible whitespace") {
    const std::string bytes =
        std::string("P5 # comment\n# another comment\n 3\t2\n255\n") +
        std::string("\x00\x40\x80\xc0\xff\x20", 6);
    const Tensor img = decode_image(bytes, "<memory>");
    REQUIRE(img.shape() == Shape{1, 2, 3});
    CHECK(img.at(0, 0, 0) == 0.0);
    CHECK(img.at(0, 1, 1) == 1.0);
}

TEST_CASE("image decode rejects malformed inputs") {
    CHECK_THROWS_AS(decode_image("P7\n1 1\n255\nx", "<m>"), IoError);
    CHECK_THROWS_AS(decode_image("P5\n2 2\n15\nabcd", "<m>"), IoError);
    const std::string truncated = "P5\n4 4\n255\nabc";
    CHECK_THROWS_AS(decode_image(truncated, "<m>"), IoError);
    CHECK_THROWS_AS(read_image("/nonexistent/path/img.pgm"), IoError);
}

TEST_CASE("sample_patches is deterministic and respects count") {
    const std::vector<Tensor> images{ramp_image(1, 20, 24)};
    CHECK(sample_patches(images, 0, 8, 7).empty());

    const auto a = sample_patches(images, 6, 8, 7);
    const auto b = sample_patches(images, 6, 8, 7);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].shape() == Shape{1, 8, 8});
        CHECK(bit_identical(a[i], b[i]));
    }
    const auto c = sample_patches(images, 6, 8, 8);
    bool any_diff = false;
    for (std::size_t i = 0; i < c.size(); ++i)
        any_diff = any_diff || !bit_identical(a[i], c[i]);
    CHECK(any_diff);
}

TEST_CASE("sample_patches with a single exact-size source returns it") {
    const Tensor img = ramp_image(1, 10, 10);
    const auto patches = sample_patches({img}, 4, 10, 123);
    REQUIRE(patches.size() == 4);
    for (const Tensor& p : patches) CHECK(bit_identical(p, img));
}

TEST_CASE("sample_patches skips too-small sources and errors when none fit") {
    const Tensor big = Tensor::full({1, 16, 16}, 0.25);
    const Tensor small = Tensor::full({1, 4, 4}, 0.75);
    const auto patches = sample_patches({small, big}, 5, 8, 3);
    REQUIRE(patches.size() == 5);
    for (const Tensor& p : patches)
        for (std::int64_t i = 0; i < p.numel(); ++i) CHECK(p[i] == 0.25);

    CHECK_THROWS_AS(sample_patches({small}, 1, 8, 3), DomainError);
    CHECK_THROWS_AS(sample_patches({}, 1, 8, 3), DomainError);
    CHECK_THROWS_AS(sample_patches({big}, -1, 8, 3), DomainError);
    CHECK_THROWS_AS(sample_patches({big}, 1, 0, 3), DomainError);
}

TEST_CASE("add_awgn with sigma 0 is the identity and validates range") {
    const Tensor patch = ramp_image(1, 6, 6);
    CHECK(bit_identical(add_awgn(patch, 0.0, 99), patch));
    CHECK_THROWS_AS(add_awgn(patch, -1.0, 99), DomainError);
    CHECK_THROWS_AS(add_awgn(patch, 75.5, 99), DomainError);
    CHECK(bit_identical(add_awgn(patch, 30.0, 5), add_awgn(patch, 30.0, 5)));
}

TEST_CASE("add_awgn noise statistics match sigma/255") {
    const double sigma = 25.0;
    const Tensor zero({1, 1000, 1000});
    const Tensor noisy = add_awgn(zero, sigma, 2024);
    const auto n = static_cast<double>(noisy.numel());
    double mean = 0.0;
    for (std::int64_t i = 0; i < noisy.numel(); ++i) mean += noisy[i];
    mean /= n;
    double var = 0.0;
    for (std::int64_t i = 0; i < noisy.numel(); ++i)
        var += (noisy[i] - mean) * (noisy[i] - mean);
    var /= n;

    const double target = sigma / 255.0;
    CHECK(std::sqrt(var) == doctest::Approx(target).epsilon(0.01));
    const double stderr_mean = target / std::sqrt(n);
    CHECK(std::abs(mean) < 3.0 * stderr_mean);
}

TEST_CASE("augment implements the dihedral group of the square") {
    Tensor patch({2, 3, 4});
    for (std::int64_t i = 0; i < patch.numel(); ++i)
        patch[i] = static_cast<double>(i);

    CHECK(bit_identical(augment(patch, 0), patch));
    CHECK_THROWS_AS(augment(patch, -1), DomainError);
    CHECK_THROWS_AS(augment(patch, 8), DomainError);

    std::vector<Tensor> images;
    for (int op = 0; op < 8; ++op) {
        const Tensor out = augment(patch, op);
        CHECK(sum_squares(out) == doctest::Approx(sum_squares(patch))
                                      .epsilon(1e-15));
        if (op % 2 == 1)
            CHECK(out.shape() == Shape{2, 4, 3});
        else
            CHECK(out.shape() == Shape{2, 3, 4});
        images.push_back(out);
    }
    // All eight results are distinct on an asymmetric patch ...
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j)
            CHECK_FALSE((images[static_cast<std::size_t>(i)].shape() ==
                             images[static_cast<std::size_t>(j)].shape() &&
                         bit_identical(images[static_cast<std::size_t>(i)],
                                       images[static_cast<std::size_t>(j)])));
    // ... and every op has an inverse inside the set.
    for (int op = 0; op < 8; ++op) {
        int inverses = 0;
        for (int inv = 0; inv < 8; ++inv) {
            const Tensor back =
                augment(images[static_cast<std::size_t>(op)], inv);
            if (back.shape() == patch.shape() &&
                bit_identical(back, patch))
                ++inverses;
        }
        CHECK(inverses == 1);
    }
}

TEST_CASE("make_training_pair ties input, target, and clean together") {
    const FilterBank haar = load_filterbank("haar");
    Rng rng(17);
    const Tensor clean = random_tensor({1, 16, 16}, rng, 0.0, 1.0);

    const TrainingPair quiet = make_training_pair(clean, 0.0, haar, 31);
    for (int k = 0; k < 4; ++k)
        CHECK(max_abs(quiet.target_residual.band(k)) == 0.0);

    const std::uint64_t noise_seed = 77;
    const double sigma = 25.0;
    const TrainingPair pair =
        make_training_pair(clean, sigma, haar, noise_seed);
    CHECK(pair.sigma_n == sigma);

    const SubbandSet w = dwt2(clean, haar);
    for (int k = 0; k < 4; ++k) {
        const Tensor recovered =
            sub(pair.input.band(k), pair.target_residual.band(k));
        CHECK(max_abs_diff(recovered, w.band(k)) < 1e-15);
    }

    // haar is orthonormal and 16x16 is even, so the band-domain noise energy
    // equals the pixel-domain noise energy.
    const Tensor noisy = add_awgn(clean, sigma, noise_seed);
    const double pixel_energy = sum_squares(sub(noisy, clean));
    double band_energy = 0.0;
    for (int k = 0; k < 4; ++k)
        band_energy += sum_squares(pair.target_residual.band(k));
    CHECK(band_energy == doctest::Approx(pixel_energy).epsilon(1e-12));
}

TEST_SUITE_END();
