#include "wdncnn/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wdncnn/errors.hpp"

namespace wdncnn {

namespace {

// Reads the next header token, skipping whitespace and '#' comment lines.
std::string next_token(const std::string& bytes, std::size_t& pos,
                       const std::string& origin) {
    while (pos < bytes.size()) {
        const char c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() &&
           !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
           bytes[pos] != '#')
        ++pos;
    if (start == pos)
        throw IoError(origin + ": truncated image header");
    return bytes.substr(start, pos - start);
}

int parse_int(const std::string& token, const std::string& origin) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw IoError(origin + ": malformed header value '" + token + "'");
    }
}

}  // namespace

Tensor decode_image(const std::string& bytes, const std::string& origin) {
    std::size_t pos = 0;
    const std::string magic = next_token(bytes, pos, origin);
    int channels;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw IoError(origin + ": expected P5 (PGM) or P6 (PPM), got '" +
                      magic + "'");
    const int w = parse_int(next_token(bytes, pos, origin), origin);
    const int h = parse_int(next_token(bytes, pos, origin), origin);
    const int maxval = parse_int(next_token(bytes, pos, origin), origin);
    if (w <= 0 || h <= 0)
        throw IoError(origin + ": non-positive image dimensions");
    if (maxval != 255)
        throw IoError(origin + ": only maxval 255 is supported, got " +
                      std::to_string(maxval));
    if (pos >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw IoError(origin + ": missing separator after header");
    ++pos;  // single whitespace byte between header and raster

    const std::size_t need =
        static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
        static_cast<std::size_t>(channels);
    if (bytes.size() - pos < need)
        throw IoError(origin + ": raster truncated (need " +
                      std::to_string(need) + " bytes, have " +
                      std::to_string(bytes.size() - pos) + ")");

    // Raster is interleaved; tensors are planar [C,H,W].
    Tensor img({channels, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c) {
                const auto byte = static_cast<unsigned char>(
                    bytes[pos + (static_cast<std::size_t>(y) * w + x) *
                                    channels +
                          c]);
                img.at(c, y, x) = static_cast<double>(byte) / 255.0;
            }
    return img;
}

std::string encode_image(const Tensor& image) {
    if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3))
        throw ShapeError("write_image: image must be [1,H,W] or [3,H,W], "
                         "got " +
                         shape_str(image.shape()));
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    std::ostringstream os;
    os << (c == 1 ? "P5" : "P6") << '\n' << w << ' ' << h << '\n' << 255
       << '\n';
    std::string raster(static_cast<std::size_t>(c) * h * w, '\0');
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                const double v =
                    std::clamp(image.at(ch, y, x), 0.0, 1.0) * 255.0;
                raster[(static_cast<std::size_t>(y) * w + x) * c + ch] =
                    static_cast<char>(
                        static_cast<unsigned char>(std::lround(v)));
            }
    return os.str() + raster;
}

Tensor read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_image(buf.str(), path);
}

void write_image(const std::string& path, const Tensor& image) {
    const std::string bytes = encode_image(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing image '" + path + "'");
}

}  // namespace wdncnn
