#include <doctest.h>

#include <cmath>
#include <string>

#include "testutil.hpp"
#include "wdncnn/errors.hpp"
#include "wdncnn/image_io.hpp"
#include "wdncnn/wavelet.hpp"

using namespace wdncnn;
using testutil::random_tensor;

namespace {

const double kInvSqrt2 = 0.70710678118654752440;

SubbandSet random_subbands(int c, int h, int w, const FilterBank& bank,
                           Rng& rng) {
    SubbandSet s;
    const int h0 = dwt_output_size(h, bank.length());
    const int w0 = dwt_output_size(w, bank.length());
    s.ll = random_tensor({c, h0, w0}, rng);
    s.lh = random_tensor({c, h0, w0}, rng);
    s.hl = random_tensor({c, h0, w0}, rng);
    s.hh = random_tensor({c, h0, w0}, rng);
    s.original_height = h;
    s.original_width = w;
    s.filter_name = bank.name;
    return s;
}

double subband_energy(const SubbandSet& s) {
    return sum_squares(s.ll) + sum_squares(s.lh) + sum_squares(s.hl) +
           sum_squares(s.hh);
}

}  // namespace

TEST_SUITE_BEGIN("wavelet");

TEST_CASE("haar bank is the analytic pair") {
    FilterBank haar = load_filterbank("haar");
    REQUIRE(haar.length() == 2);
    CHECK(std::abs(haar.lo_dec[0] - kInvSqrt2) < 1e-16);
    CHECK(std::abs(haar.lo_dec[1] - kInvSqrt2) < 1e-16);
    CHECK(std::abs(haar.hi_dec[0] + kInvSqrt2) < 1e-16);
    CHECK(std::abs(haar.hi_dec[1] - kInvSqrt2) < 1e-16);
}

TEST_CASE("shipped banks load with their declared lengths") {
    CHECK(load_filterbank("sym8").length() == 16);
    CHECK(load_filterbank("dmey").length() == 62);
    CHECK_THROWS_AS(load_filterbank("unknown"), LookupError);
}

TEST_CASE("malformed filter tables are rejected") {
    CHECK_THROWS_AS(parse_filterbank_text("bad 3\n0.1\n0.2\n"),
                    IntegrityError);
    CHECK_THROWS_AS(parse_filterbank_text(""), IntegrityError);
    // A detuned haar fails the round-trip tolerance.
    CHECK_THROWS_AS(parse_filterbank_text("haar 2\n0.7071\n0.7071\n"),
                    IntegrityError);
}

TEST_CASE("haar on a constant 2x2 block concentrates in LL") {
    const double c = 1.3;
    FilterBank haar = load_filterbank("haar");
    SubbandSet s = dwt2(Tensor::full({1, 2, 2}, c), haar);
    REQUIRE(s.band_height() == 1);
    REQUIRE(s.band_width() == 1);
    CHECK(s.ll[0] == doctest::Approx(2 * c).epsilon(1e-14));
    CHECK(std::abs(s.lh[0]) < 1e-14);
    CHECK(std::abs(s.hl[0]) < 1e-14);
    CHECK(std::abs(s.hh[0]) < 1e-14);
}

TEST_CASE("perfect reconstruction across banks, sizes, and parities") {
    Rng rng(41);
    for (const std::string name : {"haar", "sym8", "dmey"}) {
        FilterBank bank = load_filterbank(name);
        const int L = bank.length();
        for (int trial = 0; trial < 12; ++trial) {
            const int h = L + static_cast<int>(rng.uniform_int(0, 64 - L));
            const int w = L + static_cast<int>(rng.uniform_int(0, 64 - L));
            const int c = trial % 3 == 0 ? 3 : 1;
            Tensor x = random_tensor({c, h, w}, rng);
            Tensor back = idwt2(dwt2(x, bank), bank);
            CHECK(max_abs_diff(back, x) < bank.roundtrip_tol);
        }
    }
}

TEST_CASE("band sizes follow the declared formula") {
    FilterBank dmey = load_filterbank("dmey");
    Rng rng(42);
    Tensor x = random_tensor({1, 63, 70}, rng);
    SubbandSet s = dwt2(x, dmey);
    CHECK(s.band_height() == (63 + 62 - 1) / 2);
    CHECK(s.band_width() == (70 + 62 - 1) / 2);
    CHECK(s.original_height == 63);
    CHECK(s.original_width == 70);
}

TEST_CASE("haar satisfies Parseval on even sizes") {
    FilterBank haar = load_filterbank("haar");
    Rng rng(43);
    for (int trial = 0; trial < 8; ++trial) {
        const int h = 2 * (2 + static_cast<int>(rng.uniform_int(0, 30)));
        const int w = 2 * (2 + static_cast<int>(rng.uniform_int(0, 30)));
        Tensor x = random_tensor({1, h, w}, rng);
        EnergyReport r = subband_energy_ratio(x, haar);
        CHECK(std::abs(r.coeff_to_pixel_ratio - 1.0) < 1e-12);
    }
}

TEST_CASE("odd sizes make the symmetric-extension transform redundant") {
    // The reflected edge sample is analyzed twice, so coefficient energy
    // strictly exceeds pixel energy while reconstruction stays exact.
    FilterBank haar = load_filterbank("haar");
    Rng rng(44);
    Tensor x = random_tensor({1, 31, 45}, rng);
    EnergyReport r = subband_energy_ratio(x, haar);
    CHECK(r.coeff_to_pixel_ratio > 1.0);
    CHECK(max_abs_diff(idwt2(dwt2(x, haar), haar), x) < 1e-12);
}

TEST_CASE("coefficient-space distances equal pixel-space distances (haar)") {
    FilterBank haar = load_filterbank("haar");
    Rng rng(45);
    for (int trial = 0; trial < 5; ++trial) {
        SubbandSet s1 = random_subbands(1, 32, 48, haar, rng);
        SubbandSet s2 = random_subbands(1, 32, 48, haar, rng);
        const Tensor x1 = idwt2(s1, haar);
        const Tensor x2 = idwt2(s2, haar);
        const double dc = subband_energy(subband_sub(s1, s2));
        const double dp = sum_squares(sub(x1, x2));
        CHECK(std::abs(dc - dp) / dc < 1e-10);
    }
}

TEST_CASE("all-zero subbands reconstruct to an all-zero image") {
    FilterBank sym8 = load_filterbank("sym8");
    SubbandSet s;
    const int h0 = dwt_output_size(20, 16), w0 = dwt_output_size(24, 16);
    s.ll = Tensor({1, h0, w0});
    s.lh = Tensor({1, h0, w0});
    s.hl = Tensor({1, h0, w0});
    s.hh = Tensor({1, h0, w0});
    s.original_height = 20;
    s.original_width = 24;
    s.filter_name = "sym8";
    CHECK(sum_squares(idwt2(s, sym8)) == 0.0);
}

TEST_CASE("dwt2 and idwt2 are linear") {
    FilterBank sym8 = load_filterbank("sym8");
    Rng rng(46);
    const double a = 1.9, b = -0.6;

    Tensor x1 = random_tensor({2, 26, 21}, rng);
    Tensor x2 = random_tensor({2, 26, 21}, rng);
    Tensor mix(x1.shape());
    for (std::int64_t i = 0; i < x1.numel(); ++i)
        mix[i] = a * x1[i] + b * x2[i];
    SubbandSet s1 = dwt2(x1, sym8), s2 = dwt2(x2, sym8), sm = dwt2(mix, sym8);
    for (int band = 0; band < 4; ++band) {
        const Tensor& t1 = s1.band(band);
        const Tensor& t2 = s2.band(band);
        const Tensor& tm = sm.band(band);
        for (std::int64_t i = 0; i < t1.numel(); ++i)
            CHECK(std::abs(tm[i] - (a * t1[i] + b * t2[i])) < 1e-10);
    }

    SubbandSet r1 = random_subbands(1, 30, 30, sym8, rng);
    SubbandSet r2 = random_subbands(1, 30, 30, sym8, rng);
    SubbandSet rm = r1;
    for (int band = 0; band < 4; ++band) {
        Tensor& t = rm.band(band);
        const Tensor& u1 = r1.band(band);
        const Tensor& u2 = r2.band(band);
        for (std::int64_t i = 0; i < t.numel(); ++i)
            t[i] = a * u1[i] + b * u2[i];
    }
    Tensor y1 = idwt2(r1, sym8), y2 = idwt2(r2, sym8), ym = idwt2(rm, sym8);
    for (std::int64_t i = 0; i < y1.numel(); ++i)
        CHECK(std::abs(ym[i] - (a * y1[i] + b * y2[i])) < 1e-10);
}

TEST_CASE("white noise keeps its std in every haar band") {
    FilterBank haar = load_filterbank("haar");
    const double sigma = 0.13;
    Rng rng(47);
    Tensor noise({1, 316, 316});
    for (std::int64_t i = 0; i < noise.numel(); ++i)
        noise[i] = sigma * rng.normal();
    SubbandSet s = dwt2(noise, haar);
    for (int band = 0; band < 4; ++band) {
        const Tensor& t = s.band(band);
        double mean = 0.0;
        for (std::int64_t i = 0; i < t.numel(); ++i) mean += t[i];
        mean /= static_cast<double>(t.numel());
        double var = 0.0;
        for (std::int64_t i = 0; i < t.numel(); ++i)
            var += (t[i] - mean) * (t[i] - mean);
        var /= static_cast<double>(t.numel());
        CHECK(std::abs(std::sqrt(var) - sigma) / sigma < 0.03);
    }
}

TEST_CASE("energy report edge cases") {
    FilterBank haar = load_filterbank("haar");
    EnergyReport zero = subband_energy_ratio(Tensor({1, 8, 8}), haar);
    CHECK(zero.coeff_to_pixel_ratio == 1.0);
    CHECK(zero.ll_share == 1.0);

    EnergyReport flat =
        subband_energy_ratio(Tensor::full({1, 16, 16}, 0.5), haar);
    CHECK(flat.ll_share == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("stripe images pin the band-naming convention") {
    // Horizontal stripes vary along height only: constant under the
    // horizontal (width) filter, captured by the vertical high-pass, so the
    // energy lands in LH. Vertical stripes land in HL.
    FilterBank haar = load_filterbank("haar");
    Tensor horiz({1, 16, 16});
    Tensor vert({1, 16, 16});
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            horiz.at(0, y, x) = y % 2 == 0 ? 1.0 : -1.0;
            vert.at(0, y, x) = x % 2 == 0 ? 1.0 : -1.0;
        }
    SubbandSet sh = dwt2(horiz, haar);
    CHECK(sum_squares(sh.lh) > 0.9 * subband_energy(sh));
    CHECK(sum_squares(sh.hl) < 1e-20);
    SubbandSet sv = dwt2(vert, haar);
    CHECK(sum_squares(sv.hl) > 0.9 * subband_energy(sv));
    CHECK(sum_squares(sv.lh) < 1e-20);
}

TEST_CASE("domain and mismatch errors") {
    FilterBank dmey = load_filterbank("dmey");
    FilterBank haar = load_filterbank("haar");
    Rng rng(48);
    CHECK_THROWS_AS(dwt2(random_tensor({1, 32, 32}, rng), dmey), DomainError);
    SubbandSet s = dwt2(random_tensor({1, 8, 8}, rng), haar);
    CHECK_THROWS_AS(idwt2(s, dmey), DomainError);
}

TEST_CASE("shipped sample images concentrate their energy in LL") {
    FilterBank haar = load_filterbank("haar");
    const char* names[] = {"blobs.pgm", "gradient.pgm", "rings.pgm",
                           "odd_blobs.pgm", "color_blobs.ppm"};
    for (const char* name : names) {
        CAPTURE(name);
        Tensor img = read_image(std::string(WDNCNN_DATA_DIR "/images/") +
                                name);
        EnergyReport report = subband_energy_ratio(img, haar);
        CHECK(report.ll_share > 0.9);
    }
}

TEST_SUITE_END();
