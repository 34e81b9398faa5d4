#include "wdncnn/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wdncnn/errors.hpp"
#include "wdncnn/rng.hpp"

namespace wdncnn {

namespace {

#include "filter_tables.inc"

// Half-point symmetric index fold: ... x2 x1 x0 | x0 x1 ... xn-1 | xn-1 ... ;
// the signal extended this way has period 2n.
int fold_sym(int k, int n) {
    int m = k % (2 * n);
    if (m < 0) m += 2 * n;
    return m < n ? m : 2 * n - 1 - m;
}

// One analysis pass: lo[i] = sum_j f_lo[j] * x~[2i+1-j] (likewise hi), where
// x~ is the symmetric extension. Produces floor((n+L-1)/2) coefficients.
void dwt1(const double* x, int n, int stride, const FilterBank& bank,
          double* lo, double* hi, int out_stride) {
    const int L = bank.length();
    const int n_out = dwt_output_size(n, L);
    for (int i = 0; i < n_out; ++i) {
        double alo = 0.0, ahi = 0.0;
        for (int j = 0; j < L; ++j) {
            const double v = x[fold_sym(2 * i + 1 - j, n) * stride];
            alo += bank.lo_dec[static_cast<std::size_t>(j)] * v;
            ahi += bank.hi_dec[static_cast<std::size_t>(j)] * v;
        }
        lo[i * out_stride] = alo;
        hi[i * out_stride] = ahi;
    }
}

// One synthesis pass, cropped to n_out samples:
// out[m] = sum_i lo[i]*f_lo_rec[m+L-2-2i] + hi[i]*f_hi_rec[m+L-2-2i].
void idwt1(const double* lo, const double* hi, int n_coeff, int in_stride,
           const FilterBank& bank, double* out, int n_out, int out_stride) {
    const int L = bank.length();
    for (int m = 0; m < n_out; ++m) {
        double acc = 0.0;
        // Filter index k = base - 2i must lie in [0, L).
        const int base = m + L - 2;
        const int a = base - L + 1;
        const int i_lo = a <= 0 ? 0 : (a + 1) / 2;
        const int i_hi = std::min(n_coeff - 1, base / 2);
        for (int i = i_lo; i <= i_hi; ++i) {
            const int k = base - 2 * i;
            acc += lo[i * in_stride] * bank.lo_rec[static_cast<std::size_t>(k)] +
                   hi[i * in_stride] * bank.hi_rec[static_cast<std::size_t>(k)];
        }
        out[m * out_stride] = acc;
    }
}

void verify_roundtrip(const FilterBank& bank) {
    const int L = bank.length();
    Rng rng(0x9d2c5680u ^ static_cast<std::uint64_t>(fnv1a64(bank.name)));
    for (int trial = 0; trial < 8; ++trial) {
        const int n = L + static_cast<int>(rng.uniform_int(0, 17));
        std::vector<double> x(static_cast<std::size_t>(n));
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        const int nc = dwt_output_size(n, L);
        std::vector<double> lo(static_cast<std::size_t>(nc));
        std::vector<double> hi(static_cast<std::size_t>(nc));
        std::vector<double> back(static_cast<std::size_t>(n));
        dwt1(x.data(), n, 1, bank, lo.data(), hi.data(), 1);
        idwt1(lo.data(), hi.data(), nc, 1, bank, back.data(), n, 1);
        for (int i = 0; i < n; ++i) {
            if (std::abs(back[static_cast<std::size_t>(i)] -
                         x[static_cast<std::size_t>(i)]) > bank.roundtrip_tol)
                throw IntegrityError(
                    "filter bank '" + bank.name +
                    "' fails its round-trip tolerance " +
                    std::to_string(bank.roundtrip_tol));
        }
    }
}

double declared_tolerance(const std::string& name) {
    if (name == "haar") return 1e-12;
    if (name == "sym8") return 1e-10;
    return 1e-8;
}

}  // namespace

int dwt_output_size(int n, int filter_length) {
    return (n + filter_length - 1) / 2;
}

FilterBank make_filterbank(std::string name, std::vector<double> lo_dec,
                           double roundtrip_tol) {
    const int L = static_cast<int>(lo_dec.size());
    if (L < 2 || L % 2 != 0)
        throw IntegrityError("filter bank '" + name +
                             "': tap count must be even and >= 2, got " +
                             std::to_string(L));
    for (double v : lo_dec)
        if (!std::isfinite(v))
            throw IntegrityError("filter bank '" + name +
                                 "': non-finite coefficient");
    FilterBank bank;
    bank.name = std::move(name);
    bank.lo_dec = std::move(lo_dec);
    bank.roundtrip_tol = roundtrip_tol;
    bank.hi_dec.resize(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) {
        const double sign = (j % 2 == 0) ? -1.0 : 1.0;
        bank.hi_dec[static_cast<std::size_t>(j)] =
            sign * bank.lo_dec[static_cast<std::size_t>(L - 1 - j)];
    }
    bank.lo_rec.assign(bank.lo_dec.rbegin(), bank.lo_dec.rend());
    bank.hi_rec.assign(bank.hi_dec.rbegin(), bank.hi_dec.rend());

    if (bank.name == "haar") {
        // Haar is exactly orthonormal; check it to full precision.
        double norm = 0.0, dot = 0.0;
        for (int j = 0; j < L; ++j) {
            norm += bank.lo_dec[static_cast<std::size_t>(j)] *
                    bank.lo_dec[static_cast<std::size_t>(j)];
            dot += bank.lo_dec[static_cast<std::size_t>(j)] *
                   bank.hi_dec[static_cast<std::size_t>(j)];
        }
        if (std::abs(norm - 1.0) > 1e-15 || std::abs(dot) > 1e-15)
            throw IntegrityError("haar bank is not orthonormal");
    }
    verify_roundtrip(bank);
    return bank;
}

FilterBank parse_filterbank_text(const std::string& text) {
    std::istringstream is(text);
    std::string name;
    int taps = 0;
    if (!(is >> name >> taps) || taps <= 0)
        throw IntegrityError("filter table: malformed header line");
    std::vector<double> lo;
    lo.reserve(static_cast<std::size_t>(taps));
    double v;
    while (is >> v) lo.push_back(v);
    if (static_cast<int>(lo.size()) != taps)
        throw IntegrityError("filter table '" + name + "': header declares " +
                             std::to_string(taps) + " taps, found " +
                             std::to_string(lo.size()));
    return make_filterbank(name, std::move(lo), declared_tolerance(name));
}

FilterBank load_filterbank(const std::string& name) {
    if (name == "haar") return parse_filterbank_text(kHaarTable);
    if (name == "sym8") return parse_filterbank_text(kSym8Table);
    if (name == "dmey") return parse_filterbank_text(kDmeyTable);
    throw LookupError("unknown filter bank '" + name +
                      "' (expected haar, sym8, or dmey)");
}

const Tensor& SubbandSet::band(int k) const {
    switch (k) {
        case 0: return ll;
        case 1: return lh;
        case 2: return hl;
        case 3: return hh;
        default: throw LookupError("band index must be 0..3");
    }
}

Tensor& SubbandSet::band(int k) {
    return const_cast<Tensor&>(static_cast<const SubbandSet*>(this)->band(k));
}

SubbandSet dwt2(const Tensor& image, const FilterBank& bank) {
    if (image.rank() != 3)
        throw ShapeError("dwt2: image must be [C,H,W], got " +
                         shape_str(image.shape()));
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const int L = bank.length();
    if (h < L || w < L)
        throw DomainError("dwt2: image " + std::to_string(h) + "x" +
                          std::to_string(w) +
                          " is smaller than the filter length " +
                          std::to_string(L));
    const int h0 = dwt_output_size(h, L);
    const int w0 = dwt_output_size(w, L);

    SubbandSet out;
    out.ll = Tensor({c, h0, w0});
    out.lh = Tensor({c, h0, w0});
    out.hl = Tensor({c, h0, w0});
    out.hh = Tensor({c, h0, w0});
    out.original_height = h;
    out.original_width = w;
    out.filter_name = bank.name;

    // Row pass (along width), then column pass (along height).
    std::vector<double> row_lo(static_cast<std::size_t>(h) * w0);
    std::vector<double> row_hi(static_cast<std::size_t>(h) * w0);
    for (int ch = 0; ch < c; ++ch) {
        const double* plane = image.data() +
                              static_cast<std::int64_t>(ch) * h * w;
        for (int y = 0; y < h; ++y)
            dwt1(plane + static_cast<std::int64_t>(y) * w, w, 1, bank,
                 row_lo.data() + static_cast<std::int64_t>(y) * w0,
                 row_hi.data() + static_cast<std::int64_t>(y) * w0, 1);
        for (int x = 0; x < w0; ++x) {
            dwt1(row_lo.data() + x, h, w0, bank,
                 out.ll.data() + static_cast<std::int64_t>(ch) * h0 * w0 + x,
                 out.lh.data() + static_cast<std::int64_t>(ch) * h0 * w0 + x,
                 w0);
            dwt1(row_hi.data() + x, h, w0, bank,
                 out.hl.data() + static_cast<std::int64_t>(ch) * h0 * w0 + x,
                 out.hh.data() + static_cast<std::int64_t>(ch) * h0 * w0 + x,
                 w0);
        }
    }
    return out;
}

Tensor idwt2(const SubbandSet& subbands, const FilterBank& bank) {
    if (subbands.filter_name != bank.name)
        throw DomainError("idwt2: subbands were produced with '" +
                          subbands.filter_name + "', bank is '" + bank.name +
                          "'");
    if (!subbands.ll.same_shape(subbands.lh) ||
        !subbands.ll.same_shape(subbands.hl) ||
        !subbands.ll.same_shape(subbands.hh))
        throw ShapeError("idwt2: bands differ in shape");
    const int c = subbands.channels();
    const int h0 = subbands.band_height(), w0 = subbands.band_width();
    const int h = subbands.original_height, w = subbands.original_width;
    const int L = bank.length();
    if (h0 != dwt_output_size(h, L) || w0 != dwt_output_size(w, L))
        throw ShapeError("idwt2: band shape does not match original size");

    Tensor out({c, h, w});
    std::vector<double> row_lo(static_cast<std::size_t>(h) * w0);
    std::vector<double> row_hi(static_cast<std::size_t>(h) * w0);
    for (int ch = 0; ch < c; ++ch) {
        const std::int64_t boff = static_cast<std::int64_t>(ch) * h0 * w0;
        for (int x = 0; x < w0; ++x) {
            idwt1(subbands.ll.data() + boff + x, subbands.lh.data() + boff + x,
                  h0, w0, bank, row_lo.data() + x, h, w0);
            idwt1(subbands.hl.data() + boff + x, subbands.hh.data() + boff + x,
                  h0, w0, bank, row_hi.data() + x, h, w0);
        }
        double* plane = out.data() + static_cast<std::int64_t>(ch) * h * w;
        for (int y = 0; y < h; ++y)
            idwt1(row_lo.data() + static_cast<std::int64_t>(y) * w0,
                  row_hi.data() + static_cast<std::int64_t>(y) * w0, w0, 1,
                  bank, plane + static_cast<std::int64_t>(y) * w, w, 1);
    }
    return out;
}

EnergyReport subband_energy_ratio(const Tensor& image,
                                  const FilterBank& bank) {
    const SubbandSet s = dwt2(image, bank);
    const double pixels = sum_squares(image);
    const double ell = sum_squares(s.ll);
    const double total = ell + sum_squares(s.lh) + sum_squares(s.hl) +
                         sum_squares(s.hh);
    EnergyReport r;
    if (pixels == 0.0) return r;  // zero image: defined as ratio 1, share 1
    r.coeff_to_pixel_ratio = total / pixels;
    r.ll_share = total == 0.0 ? 1.0 : ell / total;
    return r;
}

SubbandSet subband_sub(const SubbandSet& a, const SubbandSet& b) {
    if (a.filter_name != b.filter_name)
        throw DomainError("subband_sub: filter mismatch '" + a.filter_name +
                          "' vs '" + b.filter_name + "'");
    if (a.original_height != b.original_height ||
        a.original_width != b.original_width)
        throw ShapeError("subband_sub: original sizes differ");
    SubbandSet out;
    out.ll = sub(a.ll, b.ll);
    out.lh = sub(a.lh, b.lh);
    out.hl = sub(a.hl, b.hl);
    out.hh = sub(a.hh, b.hh);
    out.original_height = a.original_height;
    out.original_width = a.original_width;
    out.filter_name = a.filter_name;
    return out;
}

}  // namespace wdncnn
