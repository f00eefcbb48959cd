#include "relnet/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace relnet {

double iou(const Box& a, const Box& b) {
  const double ix = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double iy = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

RelGeom4 rel_geom(const Box& m, const Box& n, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("rel_geom: eps must be positive");
  return {std::log(std::max(std::abs(m.cx - n.cx) / m.w, eps)),
          std::log(std::max(std::abs(m.cy - n.cy) / m.h, eps)),
          std::log(n.w / m.w),
          std::log(n.h / m.h)};
}

std::vector<double> sinusoid_embed(double x, int dim, double wave_base) {
  if (dim <= 0 || dim % 2 != 0) {
    throw std::invalid_argument("sinusoid_embed: dim must be even and positive, got " +
                                std::to_string(dim));
  }
  if (wave_base <= 1.0) throw std::invalid_argument("sinusoid_embed: wave_base must be > 1");
  std::vector<double> out(static_cast<size_t>(dim));
  for (int i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(wave_base, 2.0 * i / dim);
    out[static_cast<size_t>(2 * i)] = std::sin(x / freq);
    out[static_cast<size_t>(2 * i + 1)] = std::cos(x / freq);
  }
  return out;
}

std::vector<double> embed_geom(const RelGeom4& g, int d_g, double wave_base) {
  if (d_g <= 0 || d_g % 8 != 0) {
    throw std::invalid_argument("embed_geom: d_g must be divisible by 8, got " +
                                std::to_string(d_g));
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(d_g));
  for (double coord : g) {
    std::vector<double> part = sinusoid_embed(coord, d_g / 4, wave_base);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

Tensor pair_geometry_embedding(const std::vector<Box>& boxes, int d_g, double wave_base,
                               double eps) {
  const int n = static_cast<int>(boxes.size());
  Tensor E({n * n, d_g});
  for (int m = 0; m < n; ++m) {
    for (int k = 0; k < n; ++k) {
      const std::vector<double> e = embed_geom(rel_geom(boxes[m], boxes[k], eps), d_g, wave_base);
      double* row = &E.at(m * n + k, 0);
      for (int j = 0; j < d_g; ++j) row[j] = e[static_cast<size_t>(j)];
    }
  }
  return E;
}

std::array<double, 4> encode_box_delta(const Box& proposal, const Box& target) {
  return {(target.cx - proposal.cx) / proposal.w, (target.cy - proposal.cy) / proposal.h,
          std::log(target.w / proposal.w), std::log(target.h / proposal.h)};
}

Box apply_box_delta(const Box& proposal, const std::array<double, 4>& delta) {
  return {proposal.cx + delta[0] * proposal.w, proposal.cy + delta[1] * proposal.h,
          proposal.w * std::exp(delta[2]), proposal.h * std::exp(delta[3])};
}

}  // namespace relnet
