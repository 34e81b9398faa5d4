#pragma once

#include <string>
#include <vector>

#include "wdncnn/tensor.hpp"

namespace wdncnn {

// Orthogonal two-channel filter bank. Only the analysis low-pass filter is
// stored on disk; the other three follow the quadrature-mirror convention
//   hi_dec[j] = (-1)^(j+1) * lo_dec[L-1-j]
//   lo_rec    = reverse(lo_dec)
//   hi_rec    = reverse(hi_dec)
// which for haar gives hi_dec = [-1/sqrt2, +1/sqrt2].
struct FilterBank {
    std::string name;
    std::vector<double> lo_dec;
    std::vector<double> hi_dec;
    std::vector<double> lo_rec;
    std::vector<double> hi_rec;
    // Declared max-abs round-trip error bound, verified at load time.
    double roundtrip_tol = 1e-8;

    int length() const { return static_cast<int>(lo_dec.size()); }
};

// Derives the full bank from analysis low-pass taps and verifies the
// round-trip invariant on seeded random signals.
FilterBank make_filterbank(std::string name, std::vector<double> lo_dec,
                           double roundtrip_tol);

// Parses the plain-text asset format: a header line "<name> <taps>" followed
// by one decimal coefficient per line.
FilterBank parse_filterbank_text(const std::string& text);

// Shipped banks: haar, sym8, dmey. Tables are embedded from the text assets
// under data/filters/ at build time.
FilterBank load_filterbank(const std::string& name);

// Single-level 2-D decomposition of one image. Band letters give the filter
// per axis, horizontal first: lh = low-pass along width, high-pass along
// height. Half-point symmetric extension makes the per-axis coefficient
// count floor((N + L - 1) / 2).
struct SubbandSet {
    Tensor ll, lh, hl, hh;
    int original_height = 0;
    int original_width = 0;
    std::string filter_name;

    int band_height() const { return ll.dim(1); }
    int band_width() const { return ll.dim(2); }
    int channels() const { return ll.dim(0); }
    const Tensor& band(int k) const;  // 0=ll, 1=lh, 2=hl, 3=hh
    Tensor& band(int k);
};

int dwt_output_size(int n, int filter_length);

SubbandSet dwt2(const Tensor& image, const FilterBank& bank);
Tensor idwt2(const SubbandSet& subbands, const FilterBank& bank);

struct EnergyReport {
    // Total coefficient energy over total pixel energy; 1 for orthonormal
    // banks on even-sized images. Odd sizes duplicate reflected edge samples
    // (the transform is slightly redundant there), so the ratio exceeds 1.
    double coeff_to_pixel_ratio = 1.0;
    // LL-band fraction of total coefficient energy.
    double ll_share = 1.0;
};

EnergyReport subband_energy_ratio(const Tensor& image, const FilterBank& bank);

// Per-band elementwise difference; shapes and filter names must agree.
SubbandSet subband_sub(const SubbandSet& a, const SubbandSet& b);

}  // namespace wdncnn
