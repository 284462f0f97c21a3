// SPDX-License-Identifier: Apache-2.0

#include "blrqr/generators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace blrqr {

namespace {

Matrix uniform_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

void check_sizes(const GeneratorSpec& spec) {
  if (spec.b <= 0 || spec.m <= 0 || spec.n <= 0 || spec.m % spec.b != 0 || spec.n % spec.b != 0)
    throw std::invalid_argument("generator: block size must divide m and n");
}

ToleranceConfig tolerance(const GeneratorSpec& spec) {
  ToleranceConfig cfg{spec.epsilon, spec.fallback_fraction};
  cfg.validate();
  return cfg;
}

// Compresses admissible cells of a dense matrix. Weak and Strong keep every
// admissible cell low-rank; Auto reverts cells above the rank cutoff to dense.
BlrMatrix compress_with(const Matrix& dense, BlrStructure structure, const GeneratorSpec& spec) {
  const ToleranceConfig cfg = tolerance(spec);
  if (spec.admissibility == Admissibility::Auto) return compress_blr(dense, structure, cfg);
  const Index b = structure.b();
  BlrMatrix out(structure);
  for (Index i = 0; i < structure.p(); ++i) {
    for (Index j = 0; j < structure.q(); ++j) {
      Matrix tile = dense.block(i * b, j * b, b, b);
      if (structure.admissible(i, j)) out.set_block(i, j, Block(compress_lowrank(tile, cfg.epsilon)));
      else out.set_block(i, j, Block(std::move(tile)));
    }
  }
  return out;
}

std::uint64_t spread_bits(std::uint64_t x) {
  std::uint64_t out = 0;
  for (int bit = 0; bit < 21; ++bit) out |= ((x >> bit) & 1u) << (3 * bit);
  return out;
}

Index cube_side(Index n) {
  auto g = static_cast<Index>(std::llround(std::cbrt(static_cast<double>(n))));
  if (g < 1 || g * g * g != n) throw std::invalid_argument("exp kernel: n must be a perfect cube");
  return g;
}

}  // namespace

GeneratedMatrix gen_random_blr(const GeneratorSpec& spec) {
  check_sizes(spec);
  if (spec.admissibility != Admissibility::Weak) throw std::invalid_argument("random BLR is weakly admissible");
  if (spec.m < spec.n) throw std::invalid_argument("random BLR needs m >= n");
  if (spec.rank < 0 || spec.rank > spec.b) throw std::invalid_argument("random BLR rank must lie in [0, b]");
  std::mt19937_64 rng(spec.seed);
  const Index b = spec.b;
  GeneratedMatrix out{BlrMatrix(BlrStructure::weak(spec.m, spec.n, b)), Matrix::Zero(spec.m, spec.n)};
  for (Index i = 0; i < out.blr.block_rows(); ++i) {
    for (Index j = 0; j < out.blr.block_cols(); ++j) {
      if (i == j) {
        Matrix d = uniform_matrix(b, b, rng);
        out.dense.block(i * b, j * b, b, b) = d;
        out.blr.set_block(i, j, Block(std::move(d)));
        continue;
      }
      const Matrix x = uniform_matrix(b, spec.rank, rng);
      const Matrix y = uniform_matrix(spec.rank, b, rng);
      out.dense.block(i * b, j * b, b, b) = x * y;
      if (spec.rank == 0) continue;
      const ThinQr qr = thin_qr(x);
      out.blr.set_block(i, j, Block(LowRankBlock{qr.q, y.transpose() * qr.r.transpose()}));
    }
  }
  return out;
}

namespace {

// Gauss-Legendre nodes and weights on [0, 1].
std::pair<Vector, Vector> gauss_legendre(Index order) {
  using std::numbers::pi;
  Vector x(order), w(order);
  for (Index i = 0; i < order; ++i) {
    double t = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(order) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (Index k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(order) * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-16) break;
    }
    x(i) = 0.5 * (1.0 - t);
    w(i) = 1.0 / ((1.0 - t * t) * dp * dp);
  }
  return {x, w};
}

// int_0^len log|x - (a + s e)| ds for a unit direction e.
double segment_log_integral(double x0, double x1, double a0, double a1, double e0, double e1, double len) {
  const double d0 = x0 - a0, d1 = x1 - a1;
  const double xi = d0 * e0 + d1 * e1;
  const double eta = std::abs(d0 * e1 - d1 * e0);
  auto prim = [eta](double u) {
    const double r2 = u * u + eta * eta;
    const double log_part = r2 > 0.0 ? 0.5 * u * std::log(r2) : 0.0;
    const double atan_part = eta > 0.0 ? eta * std::atan(u / eta) : 0.0;
    return log_part - u + atan_part;
  };
  return prim(len - xi) - prim(-xi);
}

}  // namespace

Matrix slp_circle_dense(Index n) {
  using std::numbers::pi;
  // panel s runs from vertex s to vertex s + 1 of the inscribed regular n-gon
  Matrix vert(n + 1, 2);
  for (Index s = 0; s <= n; ++s) {
    const double theta = 2.0 * pi * static_cast<double>(s % n) / static_cast<double>(n);
    vert(s, 0) = std::cos(theta);
    vert(s, 1) = std::sin(theta);
  }
  const double h = 2.0 * std::sin(pi / static_cast<double>(n));
  const double scale = -1.0 / (2.0 * pi);

  // inner integral in closed form, outer by Gauss-Legendre; panels sharing a
  // vertex get more nodes since the outer integrand has a log kink there
  const auto [xf, wf] = gauss_legendre(8);
  const auto [xn, wn] = gauss_legendre(32);
  auto entry = [&](Index s, Index t) {
    const bool near = std::abs(s - t) == 1 || std::abs(s - t) == n - 1;
    const Vector& xq = near ? xn : xf;
    const Vector& wq = near ? wn : wf;
    const double e0 = (vert(t + 1, 0) - vert(t, 0)) / h, e1 = (vert(t + 1, 1) - vert(t, 1)) / h;
    double sum = 0.0;
    for (Index g = 0; g < xq.size(); ++g) {
      const double px = vert(s, 0) + xq(g) * (vert(s + 1, 0) - vert(s, 0));
      const double py = vert(s, 1) + xq(g) * (vert(s + 1, 1) - vert(s, 1));
      sum += wq(g) * segment_log_integral(px, py, vert(t, 0), vert(t, 1), e0, e1, h);
    }
    return scale * h * sum;
  };

  // exact double integral of log|x - y| over one straight panel with itself
  const double self = scale * h * h * (std::log(h) - 1.5);
  Matrix a(n, n);
  for (Index s = 0; s < n; ++s) {
    a(s, s) = self;
    for (Index t = s + 1; t < n; ++t) a(s, t) = a(t, s) = entry(s, t);
  }
  return a;
}

GeneratedMatrix gen_slp_circle(const GeneratorSpec& spec) {
  check_sizes(spec);
  if (spec.m != spec.n) throw std::invalid_argument("SLP matrices are square");
  if (spec.admissibility == Admissibility::Strong) throw std::invalid_argument("SLP uses weak or auto admissibility");
  GeneratedMatrix out;
  out.dense = slp_circle_dense(spec.n);
  out.blr = compress_with(out.dense, BlrStructure::weak(spec.n, spec.n, spec.b), spec);
  return out;
}

Matrix exp_kernel_points(Index n) {
  const Index g = cube_side(n);
  std::vector<std::pair<std::uint64_t, std::array<Index, 3>>> keyed;
  keyed.reserve(static_cast<std::size_t>(n));
  for (Index x = 0; x < g; ++x)
    for (Index y = 0; y < g; ++y)
      for (Index z = 0; z < g; ++z) {
        const std::uint64_t code = spread_bits(static_cast<std::uint64_t>(x)) |
                                   (spread_bits(static_cast<std::uint64_t>(y)) << 1) |
                                   (spread_bits(static_cast<std::uint64_t>(z)) << 2);
        keyed.push_back({code, {x, y, z}});
      }
  std::sort(keyed.begin(), keyed.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  Matrix pts(n, 3);
  for (Index s = 0; s < n; ++s)
    for (int c = 0; c < 3; ++c)
      pts(s, c) = (static_cast<double>(keyed[static_cast<std::size_t>(s)].second[static_cast<std::size_t>(c)]) + 0.5) /
                  static_cast<double>(g);
  return pts;
}

GeneratedMatrix gen_exp_kernel_3d(const GeneratorSpec& spec) {
  check_sizes(spec);
  if (spec.m != spec.n) throw std::invalid_argument("exp kernel matrices are square");
  if (!(spec.ell > 0.0)) throw std::invalid_argument("exp kernel: ell must be positive");
  const Index n = spec.n;
  const Index b = spec.b;
  const Matrix pts = exp_kernel_points(n);

  GeneratedMatrix out;
  out.dense.resize(n, n);
  for (Index s = 0; s < n; ++s)
    for (Index t = 0; t < n; ++t) out.dense(s, t) = std::exp(-(pts.row(s) - pts.row(t)).norm() / spec.ell);

  const Index p = n / b;
  Matrix lo(p, 3), hi(p, 3);
  for (Index i = 0; i < p; ++i) {
    lo.row(i) = pts.middleRows(i * b, b).colwise().minCoeff();
    hi.row(i) = pts.middleRows(i * b, b).colwise().maxCoeff();
  }
  BlrStructure structure(n, n, b);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (i == j) continue;
      if (spec.admissibility == Admissibility::Weak) {
        structure.set_admissible(i, j, true);
        continue;
      }
      double gap2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double gap = std::max({0.0, lo(j, c) - hi(i, c), lo(i, c) - hi(j, c)});
        gap2 += gap * gap;
      }
      const double diam = std::max((hi.row(i) - lo.row(i)).norm(), (hi.row(j) - lo.row(j)).norm());
      structure.set_admissible(i, j, std::sqrt(gap2) > spec.eta * diam);
    }
  }
  out.blr = compress_with(out.dense, structure, spec);
  return out;
}

GeneratedMatrix generate(const GeneratorSpec& spec) {
  switch (spec.family) {
    case Family::RandomBlr: return gen_random_blr(spec);
    case Family::SlpCircle: return gen_slp_circle(spec);
    case Family::ExpKernel3d: return gen_exp_kernel_3d(spec);
  }
  throw std::invalid_argument("unknown family");
}

Index default_block_size(Index n) {
  const double target = 2.0 * std::sqrt(static_cast<double>(n));
  Index best = 1;
  for (Index d = 1; d <= n; ++d) {
    if (n % d != 0) continue;
    if (std::abs(static_cast<double>(d) - target) < std::abs(static_cast<double>(best) - target)) best = d;
  }
  return best;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::RandomBlr: return "random";
    case Family::SlpCircle: return "slp";
    case Family::ExpKernel3d: return "exp3d";
  }
  return "unknown";
}

Family parse_family(const std::string& s) {
  if (s == "random") return Family::RandomBlr;
  if (s == "slp") return Family::SlpCircle;
  if (s == "exp3d" || s == "exp") return Family::ExpKernel3d;
  throw std::invalid_argument("unknown family '" + s + "'");
}

}  // namespace blrqr
