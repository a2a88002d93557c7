// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "glint/image.h"

namespace glint {

// Loads a Radiance RGBE (.hdr) or PFM (.pfm) file as linear radiance.
// Throws std::runtime_error on malformed or unsupported input.
EquirectImage load_hdr(const std::string& path);

ImageRgb load_pfm(const std::string& path);
void write_pfm(const ImageRgb& image, const std::string& path);
void write_pfm(const GridF& image, const std::string& path);

// PNG: gamma 2.2 encoding, clamped to [0,1], 8-bit RGB.
void write_png(const ImageRgb& image, const std::string& path);

enum class ImageFormat { Png, Pfm };

void write_image(const ImageRgb& image, const std::string& path, ImageFormat format);

// PNG transfer function for one linear value.
uint8_t encode_srgb_byte(double linear);

}  // namespace glint
