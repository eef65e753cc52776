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

#include "awa/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace awa::kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = std::size_t{1} << 16;

using Index = std::ptrdiff_t;

// Valid kernel taps [lo, hi) for output coordinate o along one axis.
inline void tap_range(std::size_t o, const ConvGeometry& g, std::size_t extent,
                      std::size_t kernel, std::size_t& lo, std::size_t& hi) {
  const Index base = static_cast<Index>(o * g.stride) -
                     static_cast<Index>(g.padding);
  lo = base < 0 ? static_cast<std::size_t>(-base) : 0;
  const Index room = static_cast<Index>(extent) - base;
  hi = room <= 0 ? 0
                 : std::min(kernel, static_cast<std::size_t>(room));
  if (hi < lo) hi = lo;
}

// Kernel tap k paired with the output coordinate it reaches from one input
// coordinate; listed in increasing k.
struct Tap {
  std::size_t k;
  std::size_t out;
};

std::vector<std::vector<Tap>> input_taps(std::size_t extent, std::size_t kernel,
                                         std::size_t out_extent,
                                         const ConvGeometry& g) {
  std::vector<std::vector<Tap>> taps(extent);
  const Index stride = static_cast<Index>(g.stride);
  for (std::size_t i = 0; i < extent; ++i) {
    for (std::size_t k = 0; k < kernel; ++k) {
      const Index t = static_cast<Index>(i + g.padding) - static_cast<Index>(k);
      if (t < 0 || t % stride) continue;
      const std::size_t o = static_cast<std::size_t>(t / stride);
      if (o < out_extent) taps[i].push_back({k, o});
    }
  }
  return taps;
}

// Outputs [lo, hi) whose receptive field includes tap k inside the input.
struct OutRange {
  std::size_t lo = 0, hi = 0;
};

std::vector<OutRange> output_ranges(std::size_t extent, std::size_t kernel,
                                    std::size_t out_extent,
                                    const ConvGeometry& g) {
  std::vector<OutRange> r(kernel);
  for (std::size_t k = 0; k < kernel; ++k) {
    bool open = false;
    for (std::size_t o = 0; o < out_extent; ++o) {
      const Index i = static_cast<Index>(o * g.stride + k) -
                      static_cast<Index>(g.padding);
      const bool inside = i >= 0 && i < static_cast<Index>(extent);
      if (inside && !open) {
        r[k].lo = o;
        open = true;
      }
      if (inside) r[k].hi = o + 1;
    }
  }
  return r;
}

}  // namespace

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  }
}

void conv2d(const ConvGeometry& g, std::span<const double> x,
            std::span<const double> w, std::span<double> y) {
  const Index H = static_cast<Index>(g.height);
  const Index W = static_cast<Index>(g.width);
  const std::size_t Ho = g.out_h(), Wo = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t o = 0; o < g.out_channels; ++o)
      for (std::size_t oh = 0; oh < Ho; ++oh)
        for (std::size_t ow = 0; ow < Wo; ++ow) {
          double s = 0.0;
          for (std::size_t c = 0; c < g.in_channels; ++c)
            for (std::size_t kh = 0; kh < g.kernel_h; ++kh)
              for (std::size_t kw = 0; kw < g.kernel_w; ++kw) {
                const Index ih = static_cast<Index>(oh * g.stride + kh) -
                                 static_cast<Index>(g.padding);
                const Index iw = static_cast<Index>(ow * g.stride + kw) -
                                 static_cast<Index>(g.padding);
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                s += x[((n * g.in_channels + c) * g.height + ih) * g.width +
                       iw] *
                     w[((o * g.in_channels + c) * g.kernel_h + kh) *
                           g.kernel_w +
                       kw];
              }
          y[((n * g.out_channels + o) * Ho + oh) * Wo + ow] = s;
        }
}

void conv2d_input_grad(const ConvGeometry& g, std::span<const double> gy,
                       std::span<const double> w, std::span<double> gx) {
  const std::size_t Ho = g.out_h(), Wo = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t c = 0; c < g.in_channels; ++c)
      for (std::size_t ih = 0; ih < g.height; ++ih)
        for (std::size_t iw = 0; iw < g.width; ++iw) {
          double s = 0.0;
          for (std::size_t o = 0; o < g.out_channels; ++o)
            for (std::size_t kh = 0; kh < g.kernel_h; ++kh)
              for (std::size_t kw = 0; kw < g.kernel_w; ++kw) {
                const Index th = static_cast<Index>(ih + g.padding) -
                                 static_cast<Index>(kh);
                const Index tw = static_cast<Index>(iw + g.padding) -
                                 static_cast<Index>(kw);
                if (th < 0 || tw < 0) continue;
                if (th % static_cast<Index>(g.stride) ||
                    tw % static_cast<Index>(g.stride))
                  continue;
                const std::size_t oh = static_cast<std::size_t>(th) / g.stride;
                const std::size_t ow = static_cast<std::size_t>(tw) / g.stride;
                if (oh >= Ho || ow >= Wo) continue;
                s += gy[((n * g.out_channels + o) * Ho + oh) * Wo + ow] *
                     w[((o * g.in_channels + c) * g.kernel_h + kh) *
                           g.kernel_w +
                       kw];
              }
          gx[((n * g.in_channels + c) * g.height + ih) * g.width + iw] = s;
        }
}

void conv2d_weight_grad(const ConvGeometry& g, std::span<const double> x,
                        std::span<const double> gy, std::span<double> gw) {
  const Index H = static_cast<Index>(g.height);
  const Index W = static_cast<Index>(g.width);
  const std::size_t Ho = g.out_h(), Wo = g.out_w();
  for (std::size_t o = 0; o < g.out_channels; ++o)
    for (std::size_t c = 0; c < g.in_channels; ++c)
      for (std::size_t kh = 0; kh < g.kernel_h; ++kh)
        for (std::size_t kw = 0; kw < g.kernel_w; ++kw) {
          double s = 0.0;
          for (std::size_t n = 0; n < g.batch; ++n)
            for (std::size_t oh = 0; oh < Ho; ++oh)
              for (std::size_t ow = 0; ow < Wo; ++ow) {
                const Index ih = static_cast<Index>(oh * g.stride + kh) -
                                 static_cast<Index>(g.padding);
                const Index iw = static_cast<Index>(ow * g.stride + kw) -
                                 static_cast<Index>(g.padding);
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                s += gy[((n * g.out_channels + o) * Ho + oh) * Wo + ow] *
                     x[((n * g.in_channels + c) * g.height + ih) * g.width +
                       iw];
              }
          gw[((o * g.in_channels + c) * g.kernel_h + kh) * g.kernel_w + kw] =
              s;
        }
}

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> c, std::size_t m, std::size_t k, std::size_t n) {
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  const std::int64_t rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::int64_t i = 0; i < rows; ++i) {
    double* ci = C + i * n;
    std::fill(ci, ci + n, 0.0);
    const double* ai = A + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = B + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void conv2d(const ConvGeometry& g, std::span<const double> x,
            std::span<const double> w, std::span<double> y) {
  const std::size_t Ho = g.out_h(), Wo = g.out_w();
  const std::size_t C = g.in_channels, H = g.height, W = g.width;
  const std::size_t KH = g.kernel_h, KW = g.kernel_w;
  const std::int64_t planes = static_cast<std::int64_t>(g.batch * g.out_channels);
  const std::size_t work = g.output_size() * C * KH * KW;
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t plane = 0; plane < planes; ++plane) {
    const std::size_t n = static_cast<std::size_t>(plane) / g.out_channels;
    const std::size_t o = static_cast<std::size_t>(plane) % g.out_channels;
    const double* xn = x.data() + n * C * H * W;
    const double* wo = w.data() + o * C * KH * KW;
    double* yp = y.data() + static_cast<std::size_t>(plane) * Ho * Wo;
    for (std::size_t oh = 0; oh < Ho; ++oh) {
      std::size_t kh0, kh1;
      tap_range(oh, g, H, KH, kh0, kh1);
      const std::size_t ih0 = oh * g.stride - g.padding;  // wraps; offset by kh
      for (std::size_t ow = 0; ow < Wo; ++ow) {
        std::size_t kw0, kw1;
        tap_range(ow, g, W, KW, kw0, kw1);
        const std::size_t iw0 = ow * g.stride - g.padding;
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          const double* xc = xn + c * H * W;
          const double* wc = wo + c * KH * KW;
          for (std::size_t kh = kh0; kh < kh1; ++kh) {
            const double* xr = xc + (ih0 + kh) * W;
            const double* wr = wc + kh * KW;
            for (std::size_t kw = kw0; kw < kw1; ++kw) s += xr[iw0 + kw] * wr[kw];
          }
        }
        yp[oh * Wo + ow] = s;
      }
    }
  }
}

void conv2d_input_grad(const ConvGeometry& g, std::span<const double> gy,
                       std::span<const double> w, std::span<double> gx) {
  const std::size_t Ho = g.out_h(), Wo = g.out_w();
  const std::size_t C = g.in_channels, H = g.height, W = g.width;
  const std::size_t O = g.out_channels, KH = g.kernel_h, KW = g.kernel_w;
  const std::int64_t planes = static_cast<std::int64_t>(g.batch * C);
  const std::size_t work = g.output_size() * C * KH * KW;
  const std::vector<std::vector<Tap>> rows = input_taps(g.height, KH, Ho, g);
  const std::vector<std::vector<Tap>> cols = input_taps(g.width, KW, Wo, g);
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t plane = 0; plane < planes; ++plane) {
    const std::size_t n = static_cast<std::size_t>(plane) / C;
    const std::size_t c = static_cast<std::size_t>(plane) % C;
    double* gp = gx.data() + static_cast<std::size_t>(plane) * H * W;
    const double* gyn = gy.data() + n * O * Ho * Wo;
    for (std::size_t ih = 0; ih < H; ++ih) {
      const std::vector<Tap>& rt = rows[ih];
      for (std::size_t iw = 0; iw < W; ++iw) {
        const std::vector<Tap>& ct = cols[iw];
        double s = 0.0;
        for (std::size_t o = 0; o < O; ++o) {
          const double* gyo = gyn + o * Ho * Wo;
          const double* wp = w.data() + (o * C + c) * KH * KW;
          for (const Tap& r : rt) {
            const double* gr = gyo + r.out * Wo;
            const double* wr = wp + r.k * KW;
            for (const Tap& q : ct) s += gr[q.out] * wr[q.k];
          }
        }
        gp[ih * W + iw] = s;
      }
    }
  }
}

void conv2d_weight_grad(const ConvGeometry& g, std::span<const double> x,
                        std::span<const double> gy, std::span<double> gw) {
  const std::size_t Ho = g.out_h(), Wo = g.out_w();
  const std::size_t C = g.in_channels, H = g.height, W = g.width;
  const std::size_t O = g.out_channels, KH = g.kernel_h, KW = g.kernel_w;
  const std::int64_t planes = static_cast<std::int64_t>(O * C);
  const std::size_t work = g.output_size() * C * KH * KW;
  const std::vector<OutRange> rows = output_ranges(g.height, KH, Ho, g);
  const std::vector<OutRange> cols = output_ranges(g.width, KW, Wo, g);
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t plane = 0; plane < planes; ++plane) {
    const std::size_t o = static_cast<std::size_t>(plane) / C;
    const std::size_t c = static_cast<std::size_t>(plane) % C;
    double* gp = gw.data() + static_cast<std::size_t>(plane) * KH * KW;
    for (std::size_t kh = 0; kh < KH; ++kh) {
      const OutRange rr = rows[kh];
      for (std::size_t kw = 0; kw < KW; ++kw) {
        const OutRange cr = cols[kw];
        double s = 0.0;
        for (std::size_t n = 0; n < g.batch; ++n) {
          const double* gyo = gy.data() + (n * O + o) * Ho * Wo;
          const double* xc = x.data() + (n * C + c) * H * W;
          for (std::size_t oh = rr.lo; oh < rr.hi; ++oh) {
            const double* gr = gyo + oh * Wo;
            const double* xr = xc + (oh * g.stride + kh - g.padding) * W;
            for (std::size_t ow = cr.lo; ow < cr.hi; ++ow)
              s += gr[ow] * xr[ow * g.stride + kw - g.padding];
          }
        }
        gp[kh * KW + kw] = s;
      }
    }
  }
}

}  // namespace parallel

}  // namespace awa::kernels
