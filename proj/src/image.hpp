// Copyright 2026  The sfv developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SFV_IMAGE_HPP_
#define SFV_IMAGE_HPP_

#include <string>
#include <vector>

namespace sfv {

// RGB image with float pixels in [0, 1], HWC row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // height * width * 3

  Image() = default;
  Image(int h, int w) : height(h), width(w), pixels(size_t(h) * w * 3, 0.0f) {}

  float& at(int y, int x, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  float at(int y, int x, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

// Decodes a PNG or JPEG file (sniffed from its leading bytes) to RGB floats
// in [0, 1]. Grayscale, palette and alpha inputs are converted to RGB.
Image read_image(const std::string& path);

// Writes an 8-bit RGB PNG; pixels are clamped to [0, 1] and rounded.
// Output bytes are deterministic for identical pixel data.
void write_png(const std::string& path, const Image& img);

Image resize_bilinear(const Image& src, int out_height, int out_width);

}  // namespace sfv

#endif  // SFV_IMAGE_HPP_
