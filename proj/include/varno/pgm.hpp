#pragma once
// Binary PGM export (P5, 16-bit, big-endian sample order) so image previews
// need no plotting dependency.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "varno/tensor.hpp"

namespace varno {

// Write a rank-2 real tensor as a 16-bit grayscale PGM, mapping [lo, hi] to
// [0, 65535] with clamping.  NaNs render as black.
inline void write_pgm16(const std::filesystem::path& path, const RTensor& img, double lo,
                        double hi) {
    if (img.rank() != 2) throw InvalidArgument("pgm: want an (H,W) image");
    if (!(hi > lo)) throw InvalidArgument("pgm: need hi > lo");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("pgm: cannot open " + path.string() + " for writing");
    const int64_t H = img.dim(0), W = img.dim(1);
    f << "P5\n" << W << " " << H << "\n65535\n";
    std::string bytes;
    bytes.reserve(static_cast<size_t>(2 * H * W));
    const double scale = 65535.0 / (hi - lo);
    for (double v : img.data) {
        double t = std::isnan(v) ? 0.0 : std::clamp((v - lo) * scale, 0.0, 65535.0);
        const auto s = static_cast<uint16_t>(std::lround(t));
        bytes.push_back(static_cast<char>(s >> 8));
        bytes.push_back(static_cast<char>(s & 0xff));
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw InvalidArgument("pgm: write failed for " + path.string());
}

// Auto-ranged variant over the image's own min/max (flat images render black).
inline void write_pgm16(const std::filesystem::path& path, const RTensor& img) {
    double lo = 0, hi = 0;
    bool first = true;
    for (double v : img.data) {
        if (std::isnan(v)) continue;
        if (first) {
            lo = hi = v;
            first = false;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(hi > lo)) hi = lo + 1.0;
    write_pgm16(path, img, lo, hi);
}

}  // namespace varno
