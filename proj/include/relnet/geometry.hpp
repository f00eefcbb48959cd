#pragma once

#include <array>
#include <vector>

#include "relnet/tensor.hpp"

namespace relnet {

// Axis-aligned box in scene units, stored as center plus size. w, h > 0.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;

  double x0() const { return cx - 0.5 * w; }
  double x1() const { return cx + 0.5 * w; }
  double y0() const { return cy - 0.5 * h; }
  double y1() const { return cy + 0.5 * h; }
  double area() const { return w * h; }

  bool operator==(const Box&) const = default;
};

constexpr double kGeomClampEps = 1e-3;
constexpr double kWaveBase = 1000.0;

// Translation- and scale-invariant relative geometry of the pair (m, n):
//   (log(max(|Δx|/w_m, ε)), log(max(|Δy|/h_m, ε)), log(w_n/w_m), log(h_n/h_m))
using RelGeom4 = std::array<double, 4>;

double iou(const Box& a, const Box& b);

RelGeom4 rel_geom(const Box& m, const Box& n, double eps = kGeomClampEps);

// dim must be even: entry 2i = sin(x / wave_base^(2i/dim)), entry 2i+1 = cos(...).
std::vector<double> sinusoid_embed(double x, int dim, double wave_base = kWaveBase);

// Concatenated sinusoid embeddings of the 4 relative-geometry coordinates,
// d_g/4 dims each; d_g must be divisible by 8.
std::vector<double> embed_geom(const RelGeom4& g, int d_g, double wave_base = kWaveBase);

// Pairwise geometry embeddings for a box set, one row per ordered pair
// (m, n) at row m*N + n. Shared across relation heads.
Tensor pair_geometry_embedding(const std::vector<Box>& boxes, int d_g,
                               double wave_base = kWaveBase, double eps = kGeomClampEps);

// Class-agnostic box regression parameterization:
//   t = ((gx-px)/pw, (gy-py)/ph, log(gw/pw), log(gh/ph))
std::array<double, 4> encode_box_delta(const Box& proposal, const Box& target);
Box apply_box_delta(const Box& proposal, const std::array<double, 4>& delta);

}  // namespace relnet
