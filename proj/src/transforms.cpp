// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#include "codial/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "codial/errors.hpp"

namespace codial {
namespace {

// Symmetric reflection: -1 -> 0, -2 -> 1, n -> n-1, n+1 -> n-2.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  CODIAL_REQUIRE(n > 0, DimensionError, "reflect on empty axis");
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * static_cast<std::ptrdiff_t>(n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

float sample_bilinear_reflect(const Image& img, double r, double c,
                              std::size_t ch) {
  const double rf = std::floor(r);
  const double cf = std::floor(c);
  const double wr = r - rf;
  const double wc = c - cf;
  const auto r0 = static_cast<std::ptrdiff_t>(rf);
  const auto c0 = static_cast<std::ptrdiff_t>(cf);
  const std::size_t ra = reflect_index(r0, img.height);
  const std::size_t rb = reflect_index(r0 + 1, img.height);
  const std::size_t ca = reflect_index(c0, img.width);
  const std::size_t cb = reflect_index(c0 + 1, img.width);
  const double top = (1.0 - wc) * img.at(ra, ca, ch) + wc * img.at(ra, cb, ch);
  const double bot = (1.0 - wc) * img.at(rb, ca, ch) + wc * img.at(rb, cb, ch);
  return static_cast<float>((1.0 - wr) * top + wr * bot);
}

float clamp01(double v) {
  return static_cast<float>(std::min(1.0, std::max(0.0, v)));
}

Image crop_exact(const Image& img, const CropRect& rect) {
  CODIAL_REQUIRE(rect.height > 0 && rect.width > 0 &&
                   rect.top + rect.height <= img.height &&
                   rect.left + rect.width <= img.width,
               DimensionError, "crop rectangle out of bounds");
  Image out(rect.height, rect.width, img.channels);
  for (std::size_t r = 0; r < rect.height; ++r)
    for (std::size_t c = 0; c < rect.width; ++c)
      for (std::size_t ch = 0; ch < img.channels; ++ch)
        out.at(r, c, ch) = img.at(rect.top + r, rect.left + c, ch);
  return out;
}

// h in turns [0,1), s,v in [0,1].
void rgb_to_hsv(double r, double g, double b, double& h, double& s,
                double& v) {
  const double cmax = std::max(r, std::max(g, b));
  const double cmin = std::min(r, std::min(g, b));
  const double delta = cmax - cmin;
  v = cmax;
  s = cmax > 0.0 ? delta / cmax : 0.0;
  if (delta <= 0.0) {
    h = 0.0;
    return;
  }
  if (cmax == r)
    h = (g - b) / delta;
  else if (cmax == g)
    h = (b - r) / delta + 2.0;
  else
    h = (r - g) / delta + 4.0;
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g,
                double& b) {
  if (s <= 0.0) {
    r = g = b = v;
    return;
  }
  const double hh = (h - std::floor(h)) * 6.0;
  const int sector = std::min(5, static_cast<int>(hh));
  const double f = hh - sector;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

void apply_jitter_op(Image& img, JitterOp op, double factor) {
  const std::size_t n = img.height * img.width;
  switch (op) {
    case JitterOp::kBrightness: {
      for (float& v : img.pixels) v = clamp01(static_cast<double>(v) * factor);
      return;
    }
    case JitterOp::kContrast: {
      // Blend toward the mean gray of the current image.
      double mean = 0.0;
      if (img.channels == 3) {
        for (std::size_t i = 0; i < n; ++i)
          mean += 0.299 * img.pixels[3 * i] + 0.587 * img.pixels[3 * i + 1] +
                  0.114 * img.pixels[3 * i + 2];
        mean /= static_cast<double>(n);
      } else {
        for (const float v : img.pixels) mean += v;
        mean /= static_cast<double>(img.pixels.size());
      }
      for (float& v : img.pixels)
        v = clamp01(mean + (static_cast<double>(v) - mean) * factor);
      return;
    }
    case JitterOp::kSaturation: {
      if (img.channels != 3) return;
      for (std::size_t i = 0; i < n; ++i) {
        float* px = &img.pixels[3 * i];
        const double gray = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        for (int ch = 0; ch < 3; ++ch)
          px[ch] =
              clamp01(gray + (static_cast<double>(px[ch]) - gray) * factor);
      }
      return;
    }
    case JitterOp::kHue: {
      if (img.channels != 3) return;
      const double rot = (factor - 1.0) * 0.5;  // (f-1)*180deg, in turns
      if (rot == 0.0) return;
      for (std::size_t i = 0; i < n; ++i) {
        float* px = &img.pixels[3 * i];
        double h, s, v, r, g, b;
        rgb_to_hsv(px[0], px[1], px[2], h, s, v);
        hsv_to_rgb(h + rot, s, v, r, g, b);
        px[0] = clamp01(r);
        px[1] = clamp01(g);
        px[2] = clamp01(b);
      }
      return;
    }
  }
}

std::vector<double> gaussian_kernel(int taps, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(taps));
  const int half = taps / 2;
  double sum = 0.0;
  for (int i = 0; i < taps; ++i) {
    const double x = static_cast<double>(i - half);
    k[static_cast<std::size_t>(i)] = std::exp(-0.5 * x * x / (sigma * sigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

// One auxiliary chain (crop, jitter, blur as enabled). Draws happen in a
// fixed order so the stream layout per view never shifts.
Image aux_chain(const Image& src, const AuxConfig& aux, RngStream& rng) {
  const auto out_h = static_cast<std::size_t>(aux.out_size);
  const auto out_w = static_cast<std::size_t>(aux.out_size);
  Image view = aux.enable_crop
                   ? random_crop(src, aux.crop_area_lo, aux.crop_area_hi,
                                 aux.crop_aspect_lo, aux.crop_aspect_hi,
                                 out_h, out_w, rng)
                   : resize_bilinear(src, out_h, out_w);
  if (aux.enable_jitter)
    view = color_jitter(view, aux.jitter_lo, aux.jitter_hi, rng);
  if (aux.enable_blur)
    view = gaussian_blur(view, aux.blur_kernel_frac, aux.blur_sigma_lo,
                         aux.blur_sigma_hi, rng);
  return view;
}

}  // namespace

WarpField WarpField::random(std::size_t h, std::size_t w, double max_frac,
                            int grid, RngStream& rng) {
  CODIAL_REQUIRE(h > 1 && w > 1, DimensionError, "warp field needs a 2x2 image");
  CODIAL_REQUIRE(grid >= 2, ConfigError, "warp grid needs 2+ points per side");
  WarpField f;
  f.height = h;
  f.width = w;
  const double d = max_frac * static_cast<double>(std::min(h, w));
  f.max_offset = static_cast<float>(d);
  const auto g = static_cast<std::size_t>(grid);
  std::vector<double> adr(g * g), adc(g * g);
  for (double& v : adr) v = rng.uniform(-d, d);
  for (double& v : adc) v = rng.uniform(-d, d);
  f.dr.resize(h * w);
  f.dc.resize(h * w);
  // Bilinear interpolation of the anchor grid over the pixel lattice keeps
  // every dense offset inside [-d, d].
  for (std::size_t r = 0; r < h; ++r) {
    const double gr = static_cast<double>(r) / static_cast<double>(h - 1) *
                      static_cast<double>(g - 1);
    const auto r0 = std::min(g - 2, static_cast<std::size_t>(gr));
    const double wr = gr - static_cast<double>(r0);
    for (std::size_t c = 0; c < w; ++c) {
      const double gc = static_cast<double>(c) / static_cast<double>(w - 1) *
                        static_cast<double>(g - 1);
      const auto c0 = std::min(g - 2, static_cast<std::size_t>(gc));
      const double wc = gc - static_cast<double>(c0);
      const auto lerp2 = [&](const std::vector<double>& a) {
        const double top = a[r0 * g + c0] * (1 - wc) + a[r0 * g + c0 + 1] * wc;
        const double bot =
            a[(r0 + 1) * g + c0] * (1 - wc) + a[(r0 + 1) * g + c0 + 1] * wc;
        return top * (1 - wr) + bot * wr;
      };
      f.dr[r * w + c] = static_cast<float>(lerp2(adr));
      f.dc[r * w + c] = static_cast<float>(lerp2(adc));
    }
  }
  return f;
}

WarpField WarpField::constant(std::size_t h, std::size_t w, float dr,
                              float dc) {
  WarpField f;
  f.height = h;
  f.width = w;
  f.max_offset = std::max(std::fabs(dr), std::fabs(dc));
  f.dr.assign(h * w, dr);
  f.dc.assign(h * w, dc);
  return f;
}

Image rotate90(const Image& img, int quarter_turns) {
  int q = quarter_turns % 4;
  if (q < 0) q += 4;
  if (q == 0) return img;
  const std::size_t h = img.height, w = img.width, cc = img.channels;
  Image out(q == 2 ? h : w, q == 2 ? w : h, cc);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      std::size_t nr, nc;
      if (q == 1) {         // CCW: (r,c) -> (W-1-c, r)
        nr = w - 1 - c;
        nc = r;
      } else if (q == 2) {  // (r,c) -> (H-1-r, W-1-c)
        nr = h - 1 - r;
        nc = w - 1 - c;
      } else {              // CW: (r,c) -> (c, H-1-r)
        nr = c;
        nc = h - 1 - r;
      }
      for (std::size_t ch = 0; ch < cc; ++ch)
        out.at(nr, nc, ch) = img.at(r, c, ch);
    }
  }
  return out;
}

Image hflip(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c)
      for (std::size_t ch = 0; ch < img.channels; ++ch)
        out.at(r, img.width - 1 - c, ch) = img.at(r, c, ch);
  return out;
}

Image warp(const Image& img, const WarpField& field) {
  CODIAL_REQUIRE(field.height == img.height && field.width == img.width,
               DimensionError, "warp field size mismatch");
  Image out(img.height, img.width, img.channels);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const std::size_t i = r * img.width + c;
      const double sr = static_cast<double>(r) + field.dr[i];
      const double sc = static_cast<double>(c) + field.dc[i];
      for (std::size_t ch = 0; ch < img.channels; ++ch)
        out.at(r, c, ch) = clamp01(sample_bilinear_reflect(img, sr, sc, ch));
    }
  }
  return out;
}

Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w) {
  CODIAL_REQUIRE(out_h > 0 && out_w > 0, DimensionError, "resize to empty image");
  if (out_h == img.height && out_w == img.width) return img;
  Image out(out_h, out_w, img.channels);
  // Half-pixel-center convention: output center maps linearly into source.
  const double sr =
      static_cast<double>(img.height) / static_cast<double>(out_h);
  const double sc = static_cast<double>(img.width) / static_cast<double>(out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    const double src_r = (static_cast<double>(r) + 0.5) * sr - 0.5;
    for (std::size_t c = 0; c < out_w; ++c) {
      const double src_c = (static_cast<double>(c) + 0.5) * sc - 0.5;
      for (std::size_t ch = 0; ch < img.channels; ++ch)
        out.at(r, c, ch) = sample_bilinear_reflect(img, src_r, src_c, ch);
    }
  }
  return out;
}

CropRect sample_crop_rect(std::size_t img_h, std::size_t img_w, double area_lo,
                          double area_hi, double aspect_lo, double aspect_hi,
                          RngStream& rng) {
  CODIAL_REQUIRE(img_h > 0 && img_w > 0, DimensionError, "crop on empty image");
  CODIAL_REQUIRE(0.0 < area_lo && area_lo <= area_hi && area_hi <= 1.0,
               ConfigError, "crop area range must sit inside (0, 1]");
  CODIAL_REQUIRE(0.0 < aspect_lo && aspect_lo <= aspect_hi, ConfigError,
               "crop aspect range must be positive");
  const double full = static_cast<double>(img_h) * static_cast<double>(img_w);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double area = rng.uniform(area_lo, area_hi) * full;
    const double aspect = rng.log_uniform(aspect_lo, aspect_hi);
    const auto cw =
        static_cast<long long>(std::llround(std::sqrt(area * aspect)));
    const auto ch =
        static_cast<long long>(std::llround(std::sqrt(area / aspect)));
    if (cw < 1 || ch < 1 || cw > static_cast<long long>(img_w) ||
        ch > static_cast<long long>(img_h))
      continue;
    const auto w = static_cast<std::size_t>(cw);
    const auto h = static_cast<std::size_t>(ch);
    const std::size_t top = rng.uniform_int(img_h - h + 1);
    const std::size_t left = rng.uniform_int(img_w - w + 1);
    return CropRect{top, left, h, w};
  }
  // Fallback: centered square at the mid-range area.
  const double area = 0.5 * (area_lo + area_hi) * full;
  auto side = static_cast<std::size_t>(std::llround(std::sqrt(area)));
  side = std::max<std::size_t>(1, std::min(side, std::min(img_h, img_w)));
  return CropRect{(img_h - side) / 2, (img_w - side) / 2, side, side};
}

Image random_crop(const Image& img, double area_lo, double area_hi,
                  double aspect_lo, double aspect_hi, std::size_t out_h,
                  std::size_t out_w, RngStream& rng) {
  const CropRect rect = sample_crop_rect(img.height, img.width, area_lo,
                                         area_hi, aspect_lo, aspect_hi, rng);
  return resize_bilinear(crop_exact(img, rect), out_h, out_w);
}

Image color_jitter_ordered(const Image& img,
                           const std::array<double, 4>& factors,
                           const std::vector<int>& order) {
  Image out = img;
  for (const int op : order) {
    CODIAL_REQUIRE(op >= 0 && op < 4, ConfigError, "jitter op out of range");
    apply_jitter_op(out, static_cast<JitterOp>(op),
                    factors[static_cast<std::size_t>(op)]);
  }
  return out;
}

Image color_jitter(const Image& img, double lo, double hi, RngStream& rng) {
  CODIAL_REQUIRE(0.0 < lo && lo <= hi, ConfigError,
               "jitter range must be positive");
  std::array<double, 4> factors{};
  for (double& f : factors) f = rng.uniform(lo, hi);
  std::vector<int> order{0, 1, 2, 3};
  rng.shuffle(order);
  return color_jitter_ordered(img, factors, order);
}

Image gaussian_blur(const Image& img, double kernel_frac, double sigma_lo,
                    double sigma_hi, RngStream& rng) {
  CODIAL_REQUIRE(0.0 < sigma_lo && sigma_lo <= sigma_hi, ConfigError,
               "blur sigma range must be positive");
  const double sigma = rng.uniform(sigma_lo, sigma_hi);
  auto taps = static_cast<int>(std::llround(
      kernel_frac * static_cast<double>(std::min(img.height, img.width))));
  if (taps % 2 == 0) ++taps;
  taps = std::max(3, taps);
  const std::vector<double> k = gaussian_kernel(taps, sigma);
  const int half = taps / 2;
  // Separable: horizontal pass then vertical, reflect padding throughout.
  Image mid(img.height, img.width, img.channels);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c)
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        double acc = 0.0;
        for (int t = -half; t <= half; ++t)
          acc += k[static_cast<std::size_t>(t + half)] *
                 img.at(r,
                        reflect_index(static_cast<std::ptrdiff_t>(c) + t,
                                      img.width),
                        ch);
        mid.at(r, c, ch) = static_cast<float>(acc);
      }
  Image out(img.height, img.width, img.channels);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c)
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        double acc = 0.0;
        for (int t = -half; t <= half; ++t)
          acc += k[static_cast<std::size_t>(t + half)] *
                 mid.at(reflect_index(static_cast<std::ptrdiff_t>(r) + t,
                                      img.height),
                        c, ch);
        out.at(r, c, ch) = clamp01(acc);
      }
  return out;
}

std::vector<LabeledView> make_views(const Image& img, const AuxConfig& aux,
                                    RngStream& rng) {
  CODIAL_REQUIRE(aux.out_size >= 8, ConfigError, "view size must be at least 8");
  Image src = img;
  if (rng.uniform01() < aux.flip_prob) src = hflip(src);
  // Trim the boundary margin once so warp/crop sampling never feeds on
  // pixels dominated by reflection artifacts.
  const auto margin = static_cast<std::size_t>(std::max(0, aux.boundary_px));
  if (margin > 0 && src.height > 2 * margin + 8 && src.width > 2 * margin + 8)
    src = crop_exact(src, CropRect{margin, margin, src.height - 2 * margin,
                                   src.width - 2 * margin});
  std::vector<LabeledView> views;
  views.reserve(kPrimaryClassCount);
  // Each class draws its own auxiliary chain; the warp field for class 4
  // is drawn after that class's chain.
  for (int y = 0; y < kPrimaryClassCount; ++y) {
    Image view = aux_chain(src, aux, rng);
    if (y < 4) {
      view = rotate90(view, y);
    } else {
      const WarpField field = WarpField::random(
          view.height, view.width, aux.warp_max_frac, aux.warp_grid, rng);
      view = warp(view, field);
    }
    views.push_back(LabeledView{std::move(view), y});
  }
  return views;
}

}  // namespace codial
