// SPDX-License-Identifier: Apache-2.0

#include "glint/image_io.h"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace glint {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

bool little_endian_host() {
    const uint16_t probe = 1;
    uint8_t byte;
    std::memcpy(&byte, &probe, 1);
    return byte == 1;
}

// ---------------------------------------------------------------------------
// PFM

std::string read_pfm_token(std::istream& in) {
    std::string tok;
    in >> tok;
    return tok;
}

ImageRgb read_pfm_stream(std::istream& in, const std::string& path) {
    const std::string magic = read_pfm_token(in);
    if (magic != "PF" && magic != "Pf") fail(path, "not a PFM file (bad magic)");
    const bool color = magic == "PF";

    int w = 0, h = 0;
    double scale = 0.0;
    if (!(in >> w >> h >> scale)) fail(path, "malformed PFM header");
    if (w < 1 || h < 1) fail(path, "malformed PFM header (bad dimensions)");
    in.get();  // single whitespace byte after the scale

    const bool file_le = scale < 0.0;
    const int ch = color ? 3 : 1;
    std::vector<float> row(static_cast<size_t>(w) * ch);

    ImageRgb img(w, h);
    // PFM scanlines run bottom-to-top.
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!in) fail(path, "truncated PFM pixel data");
        if (file_le != little_endian_host()) {
            for (float& f : row) {
                uint32_t u;
                std::memcpy(&u, &f, 4);
                u = ((u & 0xFF000000u) >> 24) | ((u & 0x00FF0000u) >> 8) |
                    ((u & 0x0000FF00u) << 8) | ((u & 0x000000FFu) << 24);
                std::memcpy(&f, &u, 4);
            }
        }
        for (int x = 0; x < w; ++x) {
            if (color) {
                img.at(x, y) = Rgb(row[3 * x], row[3 * x + 1], row[3 * x + 2]);
            } else {
                img.at(x, y) = Rgb(row[x]);
            }
        }
    }
    return img;
}

// ---------------------------------------------------------------------------
// Radiance RGBE

Rgb decode_rgbe(const uint8_t rgbe[4]) {
    if (rgbe[3] == 0) return Rgb{};
    const double f = std::ldexp(1.0, static_cast<int>(rgbe[3]) - 136);  // 2^(e-128)/256
    return Rgb(rgbe[0] * f, rgbe[1] * f, rgbe[2] * f);
}

void read_hdr_scanline(std::istream& in, int width, std::vector<uint8_t>& rgbe,
                       const std::string& path) {
    uint8_t head[4];
    in.read(reinterpret_cast<char*>(head), 4);
    if (!in) fail(path, "truncated HDR scanline");

    const bool rle = head[0] == 2 && head[1] == 2 &&
                     ((head[2] << 8) | head[3]) == width && width >= 8;
    if (!rle) {
        // Flat scanline; the four bytes already read are the first pixel.
        std::memcpy(rgbe.data(), head, 4);
        in.read(reinterpret_cast<char*>(rgbe.data() + 4),
                static_cast<std::streamsize>(4 * (width - 1)));
        if (!in) fail(path, "truncated HDR scanline");
        return;
    }

    // New-style RLE: four channel planes, each run-length encoded.
    for (int c = 0; c < 4; ++c) {
        int x = 0;
        while (x < width) {
            int code = in.get();
            if (code == EOF) fail(path, "truncated HDR RLE data");
            if (code > 128) {
                const int run = code - 128;
                const int value = in.get();
                if (value == EOF) fail(path, "truncated HDR RLE data");
                if (x + run > width) fail(path, "HDR RLE run overflows scanline");
                for (int i = 0; i < run; ++i) rgbe[4 * (x + i) + c] = static_cast<uint8_t>(value);
                x += run;
            } else {
                const int run = code;
                if (run == 0 || x + run > width) fail(path, "HDR RLE run overflows scanline");
                for (int i = 0; i < run; ++i) {
                    const int value = in.get();
                    if (value == EOF) fail(path, "truncated HDR RLE data");
                    rgbe[4 * (x + i) + c] = static_cast<uint8_t>(value);
                }
                x += run;
            }
        }
    }
}

ImageRgb read_hdr_stream(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line) || (line.rfind("#?", 0) != 0))
        fail(path, "not a Radiance HDR file (missing #? signature)");

    bool format_ok = false;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") break;  // blank line ends the header
        if (line.rfind("FORMAT=", 0) == 0) {
            if (line.find("32-bit_rle_rgbe") == std::string::npos)
                fail(path, "unsupported HDR format: " + line);
            format_ok = true;
        }
    }
    if (!in) fail(path, "malformed HDR header");
    if (!format_ok) fail(path, "malformed HDR header (no FORMAT line)");

    if (!std::getline(in, line)) fail(path, "malformed HDR header (no resolution line)");
    int w = 0, h = 0;
    if (std::sscanf(line.c_str(), "-Y %d +X %d", &h, &w) != 2 || w < 1 || h < 1)
        fail(path, "unsupported HDR resolution line: " + line);

    ImageRgb img(w, h);
    std::vector<uint8_t> rgbe(static_cast<size_t>(4) * w);
    for (int y = 0; y < h; ++y) {
        read_hdr_scanline(in, w, rgbe, path);
        for (int x = 0; x < w; ++x) img.at(x, y) = decode_rgbe(&rgbe[4 * x]);
    }
    return img;
}

void write_all(const std::string& path, const void* data, size_t size) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) fail(path, "write failure");
}

// ---------------------------------------------------------------------------
// PNG

void append_be32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x >> 24));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

void append_chunk(std::vector<uint8_t>& png, const char type[4],
                  const std::vector<uint8_t>& payload) {
    append_be32(png, static_cast<uint32_t>(payload.size()));
    const size_t crc_start = png.size();
    png.insert(png.end(), type, type + 4);
    png.insert(png.end(), payload.begin(), payload.end());
    const uLong crc = crc32(0, png.data() + crc_start, static_cast<uInt>(png.size() - crc_start));
    append_be32(png, static_cast<uint32_t>(crc));
}

}  // namespace

uint8_t encode_srgb_byte(double linear) {
    const double v = std::pow(clamp01(linear), 1.0 / 2.2);
    return static_cast<uint8_t>(std::lround(255.0 * v));
}

ImageRgb load_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");
    return read_pfm_stream(in, path);
}

EquirectImage load_hdr(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");

    EquirectImage env;
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pfm") == 0) {
        env.pixels = read_pfm_stream(in, path);
    } else {
        env.pixels = read_hdr_stream(in, path);
    }
    for (const Rgb& p : env.pixels.data) {
        if (!is_finite(p)) fail(path, "non-finite radiance value");
    }
    return env;
}

void write_pfm(const ImageRgb& image, const std::string& path) {
    std::ostringstream head;
    head << "PF\n" << image.width << " " << image.height << "\n"
         << (little_endian_host() ? "-1.0" : "1.0") << "\n";
    std::string header = head.str();

    std::vector<uint8_t> out(header.begin(), header.end());
    std::vector<float> row(static_cast<size_t>(image.width) * 3);
    for (int y = image.height - 1; y >= 0; --y) {
        for (int x = 0; x < image.width; ++x) {
            const Rgb& p = image.at(x, y);
            row[3 * x] = static_cast<float>(p.r);
            row[3 * x + 1] = static_cast<float>(p.g);
            row[3 * x + 2] = static_cast<float>(p.b);
        }
        const uint8_t* bytes = reinterpret_cast<const uint8_t*>(row.data());
        out.insert(out.end(), bytes, bytes + row.size() * sizeof(float));
    }
    write_all(path, out.data(), out.size());
}

void write_pfm(const GridF& image, const std::string& path) {
    std::ostringstream head;
    head << "Pf\n" << image.width << " " << image.height << "\n"
         << (little_endian_host() ? "-1.0" : "1.0") << "\n";
    std::string header = head.str();

    std::vector<uint8_t> out(header.begin(), header.end());
    std::vector<float> row(static_cast<size_t>(image.width));
    for (int y = image.height - 1; y >= 0; --y) {
        for (int x = 0; x < image.width; ++x) row[x] = static_cast<float>(image.at(x, y));
        const uint8_t* bytes = reinterpret_cast<const uint8_t*>(row.data());
        out.insert(out.end(), bytes, bytes + row.size() * sizeof(float));
    }
    write_all(path, out.data(), out.size());
}

void write_png(const ImageRgb& image, const std::string& path) {
    const int w = image.width;
    const int h = image.height;

    // Raw scanlines with filter byte 0.
    std::vector<uint8_t> raw(static_cast<size_t>(h) * (1 + 3 * w));
    size_t k = 0;
    for (int y = 0; y < h; ++y) {
        raw[k++] = 0;
        for (int x = 0; x < w; ++x) {
            const Rgb& p = image.at(x, y);
            raw[k++] = encode_srgb_byte(p.r);
            raw[k++] = encode_srgb_byte(p.g);
            raw[k++] = encode_srgb_byte(p.b);
        }
    }

    uLongf zsize = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> zdata(zsize);
    if (compress2(zdata.data(), &zsize, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        fail(path, "zlib compression failure");
    zdata.resize(zsize);

    std::vector<uint8_t> png = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    std::vector<uint8_t> ihdr;
    append_be32(ihdr, static_cast<uint32_t>(w));
    append_be32(ihdr, static_cast<uint32_t>(h));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // color type: truecolor
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // interlace
    append_chunk(png, "IHDR", ihdr);
    append_chunk(png, "IDAT", zdata);
    append_chunk(png, "IEND", {});
    write_all(path, png.data(), png.size());
}

void write_image(const ImageRgb& image, const std::string& path, ImageFormat format) {
    for (const Rgb& p : image.data) {
        if (!is_finite(p)) fail(path, "refusing to write non-finite image");
    }
    if (format == ImageFormat::Png) {
        write_png(image, path);
    } else {
        write_pfm(image, path);
    }
}

}  // namespace glint
