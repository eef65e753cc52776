// Copyright 2026 The AWA Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "awa/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace awa {

void write_pnm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
    throw ShapeError("write_pnm: need [1|3, H, W], got " +
                     shape_string(image.shape()));
  }
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out << (c == 3 ? "P6" : "P5") << '\n' << w << ' ' << h << "\n255\n";
  std::vector<unsigned char> pixels(c * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k) {
        const double v = std::clamp(image[(k * h + y) * w + x], 0.0, 1.0);
        pixels[(y * w + x) * c + k] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw ImageIoError("write failed: " + path.string());
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string token(std::istream& in, const std::filesystem::path& path) {
  std::string t;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!t.empty()) break;
      continue;
    }
    t.push_back(static_cast<char>(ch));
  }
  if (t.empty()) throw ImageIoError("truncated PNM header: " + path.string());
  return t;
}

std::size_t number(std::istream& in, const std::filesystem::path& path) {
  const std::string t = token(in, path);
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw ImageIoError("bad PNM header field '" + t + "' in " + path.string());
  }
}

}  // namespace

Tensor read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot read " + path.string());
  const std::string magic = token(in, path);
  std::size_t c;
  if (magic == "P6") {
    c = 3;
  } else if (magic == "P5") {
    c = 1;
  } else {
    throw ImageIoError("unsupported image format '" + magic + "' in " +
                       path.string() + " (need binary P5/P6)");
  }
  const std::size_t w = number(in, path);
  const std::size_t h = number(in, path);
  const std::size_t maxval = number(in, path);
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) {
    throw ImageIoError("unsupported PNM geometry in " + path.string());
  }
  std::vector<unsigned char> pixels(c * h * w);
  in.read(reinterpret_cast<char*>(pixels.data()),
          static_cast<std::streamsize>(pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != pixels.size()) {
    throw ImageIoError("truncated pixel data in " + path.string());
  }
  Tensor image(Shape{c, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k)
        image[(k * h + y) * w + x] =
            pixels[(y * w + x) * c + k] / static_cast<double>(maxval);
  return image;
}

Tensor mosaic(const Tensor& batch) {
  if (batch.rank() != 4 || batch.dim(0) == 0) {
    throw ShapeError("mosaic: need non-empty [N,C,H,W], got " +
                     shape_string(batch.shape()));
  }
  const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2),
                    w = batch.dim(3);
  const std::size_t W = n * w + (n - 1);
  Tensor out(Shape{c, h, W}, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          out[(k * h + y) * W + i * (w + 1) + x] =
              batch[((i * c + k) * h + y) * w + x];
  return out;
}

}  // namespace awa
