#include "dexp/scene.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dexp/error.hpp"

namespace dexp {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Smoothing inside centroid distances so every feature stays differentiable
// at coincident points.
constexpr double kRhoEps = 1e-12;

struct KindInfo {
  DomainKind kind;
  const char* name;
};

constexpr KindInfo kKinds[] = {
    {DomainKind::ellipse, "ellipse"},
    {DomainKind::square, "square"},
    {DomainKind::star5, "star5"},
    {DomainKind::spiky_ellipse, "spiky-ellipse"},
    {DomainKind::double_ring, "double-ring"},
};

double radial_profile(DomainKind kind, double t, std::size_t k) {
  switch (kind) {
    case DomainKind::ellipse:
      return 1.0;
    case DomainKind::square: {
      const double c = std::fabs(std::cos(t)), s = std::fabs(std::sin(t));
      return 1.0 / std::max(c, s);
    }
    case DomainKind::star5:
      return 1.0 + 0.4 * std::cos(5.0 * t);
    case DomainKind::spiky_ellipse: {
      // Small body with nine narrow outward spikes.
      const double c = std::cos(9.0 * t);
      return 0.55 + 0.3 * c * c * c * c;
    }
    case DomainKind::double_ring:
      return (k % 2 == 0) ? 1.55 : 0.45;
  }
  throw ConfigError("render: unknown domain kind");
}

}  // namespace

const char* to_string(DomainKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

DomainKind parse_domain_kind(const std::string& name) {
  for (const auto& k : kKinds) {
    if (name == k.name) return k.kind;
  }
  throw ConfigError("unknown domain kind: " + name);
}

const std::vector<DomainKind>& all_domain_kinds() {
  static const std::vector<DomainKind> kinds = {
      DomainKind::ellipse, DomainKind::square, DomainKind::star5,
      DomainKind::spiky_ellipse, DomainKind::double_ring};
  return kinds;
}

PointCloud render(DomainKind kind, const FactorVector& f,
                  std::size_t k_points) {
  if (k_points == 0) throw std::invalid_argument("render: K must be > 0");
  if (!std::isfinite(f.r) || !std::isfinite(f.cx) || !std::isfinite(f.cy) ||
      !std::isfinite(f.ecc)) {
    throw NumericError("render: non-finite factors");
  }
  const double a = f.r * (1.0 + f.ecc);
  const double b = f.r * (1.0 - f.ecc);
  PointCloud cloud = PointCloud::zeros(k_points);
  for (std::size_t k = 0; k < k_points; ++k) {
    const double t = kTwoPi * static_cast<double>(k) /
                     static_cast<double>(k_points);
    const double u = radial_profile(kind, t, k);
    cloud.points(k, 0) = f.cx + a * u * std::cos(t);
    cloud.points(k, 1) = f.cy + b * u * std::sin(t);
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// EmbeddingSpace

namespace {

// Fixed affine normalization (center, scale) per feature, frozen from a
// one-off calibration: centers are the feature means over the source
// (ellipse) factor prior, so source-domain embeddings scatter around the
// origin and anchor differences against the source reduce to the target
// anchor itself; scales are the pooled stds across all shape families,
// floored at 0.05. Centroid and angular-bin scales are widened 3x: those
// coordinates carry pose noise and no domain identity.
struct Affine {
  double center;
  double scale;
};

// Moment block, identical for every bin count.
constexpr Affine kMomentNorms[14] = {
    {0.0, 3.0},     // mu_x
    {0.0, 3.0},     // mu_y
    {0.56, 0.43},   // sigma_xx
    {0.0, 0.15},    // sigma_xy
    {0.56, 0.43},   // sigma_yy
    {1.01, 0.32},   // mean rho
    {1.12, 0.73},   // mean rho^2
    {1.34, 1.48},   // mean rho^3
    {0.0, 0.20},    // mu_30
    {0.0, 0.20},    // mu_21
    {0.0, 0.20},    // mu_12
    {0.0, 0.20},    // mu_03
    {0.0, 0.17},    // mean cos 2phi
    {0.0, 0.17},    // mean sin 2phi
};

constexpr Affine kRadial8[8] = {
    {0.13, 0.21}, {0.47, 0.28}, {0.66, 0.22}, {0.45, 0.26},
    {0.14, 0.19}, {0.02, 0.11}, {0.0, 0.05},  {0.0, 0.05},
};
constexpr Affine kAngular8 = {0.21, 0.15};

constexpr Affine kRadial12[12] = {
    {0.02, 0.13},  {0.16, 0.26}, {0.40, 0.27}, {0.49, 0.24},
    {0.43, 0.23},  {0.27, 0.22}, {0.09, 0.16}, {0.015, 0.10},
    {0.0, 0.07},   {0.0, 0.05},  {0.0, 0.05},  {0.0, 0.05},
};
constexpr Affine kAngular12 = {0.135, 0.15};

}  // namespace

EmbeddingSpace::EmbeddingSpace(std::size_t bins)
    : bins_(bins),
      radial_step_(3.2 / static_cast<double>(bins)),
      radial_width_(0.75 * 3.2 / static_cast<double>(bins)),
      angular_kappa_(static_cast<double>(bins * bins) / 16.0) {
  if (bins_ != 8 && bins_ != 12) {
    throw std::invalid_argument("embedding: only 8 or 12 bins are defined");
  }
  centers_.resize(dim());
  scales_.resize(dim());
  for (std::size_t i = 0; i < 14; ++i) {
    centers_[i] = kMomentNorms[i].center;
    scales_[i] = kMomentNorms[i].scale;
  }
  const Affine* radial = bins_ == 8 ? kRadial8 : kRadial12;
  const Affine angular = bins_ == 8 ? kAngular8 : kAngular12;
  for (std::size_t b = 0; b < bins_; ++b) {
    centers_[14 + b] = radial[b].center;
    scales_[14 + b] = radial[b].scale;
    centers_[14 + bins_ + b] = angular.center;
    scales_[14 + bins_ + b] = angular.scale;
  }
}

const EmbeddingSpace& EmbeddingSpace::standard() {
  static const EmbeddingSpace space(8);
  return space;
}

const EmbeddingSpace& EmbeddingSpace::heldout() {
  static const EmbeddingSpace space(12);
  return space;
}

void EmbeddingSpace::raw_features(const PointCloud& cloud,
                                  std::vector<double>& out) const {
  const std::size_t n = cloud.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  out.assign(dim(), 0.0);

  double mux = 0.0, muy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mux += cloud.x(k);
    muy += cloud.y(k);
  }
  mux *= inv_n;
  muy *= inv_n;
  out[0] = mux;
  out[1] = muy;

  for (std::size_t k = 0; k < n; ++k) {
    const double dx = cloud.x(k) - mux;
    const double dy = cloud.y(k) - muy;
    const double rho2 = dx * dx + dy * dy + kRhoEps;
    const double rho = std::sqrt(rho2);
    out[2] += dx * dx * inv_n;
    out[3] += dx * dy * inv_n;
    out[4] += dy * dy * inv_n;
    out[5] += rho * inv_n;
    out[6] += rho2 * inv_n;
    out[7] += rho2 * rho * inv_n;
    out[8] += dx * dx * dx * inv_n;
    out[9] += dx * dx * dy * inv_n;
    out[10] += dx * dy * dy * inv_n;
    out[11] += dy * dy * dy * inv_n;
    out[12] += (dx * dx - dy * dy) / rho2 * inv_n;
    out[13] += 2.0 * dx * dy / rho2 * inv_n;
    const double cphi = dx / rho, sphi = dy / rho;
    for (std::size_t b = 0; b < bins_; ++b) {
      const double cb = (static_cast<double>(b) + 0.5) * radial_step_;
      const double d = rho - cb;
      out[14 + b] +=
          std::exp(-d * d / (2.0 * radial_width_ * radial_width_)) * inv_n;
    }
    for (std::size_t b = 0; b < bins_; ++b) {
      const double ab = kTwoPi * (static_cast<double>(b) + 0.5) /
                        static_cast<double>(bins_);
      const double along = cphi * std::cos(ab) + sphi * std::sin(ab);
      out[14 + bins_ + b] += std::exp(angular_kappa_ * (along - 1.0)) * inv_n;
    }
  }
}

Tensor EmbeddingSpace::embed(const PointCloud& cloud) const {
  if (cloud.size() < 2) throw std::invalid_argument("embed: needs K >= 2");
  if (!all_finite(cloud.points)) throw NumericError("embed: non-finite cloud");
  std::vector<double> raw;
  raw_features(cloud, raw);
  Tensor f({dim()});
  for (std::size_t i = 0; i < dim(); ++i) {
    f[i] = (raw[i] - centers_[i]) / scales_[i];
  }
  return f;
}

Tensor EmbeddingSpace::embed_vjp(const PointCloud& cloud,
                                 const Tensor& cotangent) const {
  if (cotangent.size() != dim()) {
    throw std::invalid_argument("embed_vjp: cotangent length");
  }
  const std::size_t n = cloud.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Cotangent against raw features (undo the affine scales).
  std::vector<double> w(dim());
  for (std::size_t i = 0; i < dim(); ++i) w[i] = cotangent[i] / scales_[i];

  double mux = 0.0, muy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mux += cloud.x(k);
    muy += cloud.y(k);
  }
  mux *= inv_n;
  muy *= inv_n;

  // Every centered feature is (1/n) sum_j g(dx_j, dy_j), so
  //   dF/dx_k = (1/n) (g_x(k) - mean_j g_x(j)).
  // Accumulate per-point partials, then apply the mean correction once.
  std::vector<double> px(n, 0.0), py(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = cloud.x(k) - mux;
    const double dy = cloud.y(k) - muy;
    const double rho2 = dx * dx + dy * dy + kRhoEps;
    const double rho = std::sqrt(rho2);
    const double rho4 = rho2 * rho2;
    double gx = 0.0, gy = 0.0;

    gx += w[2] * 2.0 * dx;
    gx += w[3] * dy;
    gy += w[3] * dx;
    gy += w[4] * 2.0 * dy;
    gx += w[5] * dx / rho;
    gy += w[5] * dy / rho;
    gx += w[6] * 2.0 * dx;
    gy += w[6] * 2.0 * dy;
    gx += w[7] * 3.0 * rho * dx;
    gy += w[7] * 3.0 * rho * dy;
    gx += w[8] * 3.0 * dx * dx;
    gx += w[9] * 2.0 * dx * dy;
    gy += w[9] * dx * dx;
    gx += w[10] * dy * dy;
    gy += w[10] * 2.0 * dx * dy;
    gy += w[11] * 3.0 * dy * dy;
    gx += w[12] * 2.0 * dx * (2.0 * dy * dy + kRhoEps) / rho4;
    gy += w[12] * -2.0 * dy * (2.0 * dx * dx + kRhoEps) / rho4;
    gx += w[13] * 2.0 * dy * (dy * dy - dx * dx + kRhoEps) / rho4;
    gy += w[13] * 2.0 * dx * (dx * dx - dy * dy + kRhoEps) / rho4;

    for (std::size_t b = 0; b < bins_; ++b) {
      const double cb = (static_cast<double>(b) + 0.5) * radial_step_;
      const double d = rho - cb;
      const double g =
          std::exp(-d * d / (2.0 * radial_width_ * radial_width_));
      const double common =
          w[14 + b] * g * (-d / (radial_width_ * radial_width_)) / rho;
      gx += common * dx;
      gy += common * dy;
    }
    const double cphi = dx / rho, sphi = dy / rho;
    const double rho3 = rho2 * rho;
    for (std::size_t b = 0; b < bins_; ++b) {
      const double ab = kTwoPi * (static_cast<double>(b) + 0.5) /
                        static_cast<double>(bins_);
      const double ca = std::cos(ab), sa = std::sin(ab);
      const double g = std::exp(angular_kappa_ * (cphi * ca + sphi * sa - 1.0));
      const double scale = w[14 + bins_ + b] * g * angular_kappa_ / rho3;
      gx += scale * (ca * (dy * dy + kRhoEps) - sa * dx * dy);
      gy += scale * (-ca * dx * dy + sa * (dx * dx + kRhoEps));
    }

    px[k] = gx;
    py[k] = gy;
  }

  double mean_px = 0.0, mean_py = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mean_px += px[k];
    mean_py += py[k];
  }
  mean_px *= inv_n;
  mean_py *= inv_n;

  Tensor grad({n, 2});
  for (std::size_t k = 0; k < n; ++k) {
    grad(k, 0) = w[0] * inv_n + (px[k] - mean_px) * inv_n;
    grad(k, 1) = w[1] * inv_n + (py[k] - mean_py) * inv_n;
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Anchors

FactorVector sample_factor_prior(Rng& rng) {
  FactorVector f;
  f.r = rng.uniform(0.5, 1.5);
  f.cx = rng.uniform(-1.0, 1.0);
  f.cy = rng.uniform(-1.0, 1.0);
  f.ecc = rng.uniform(-0.3, 0.3);
  return f;
}

namespace {

std::uint64_t anchor_stream(DomainKind kind) {
  return 100 + static_cast<std::uint64_t>(kind);
}

}  // namespace

DomainAnchor make_anchor(const EmbeddingSpace& space, DomainKind kind,
                         std::size_t n, std::uint64_t seed,
                         std::size_t k_points) {
  if (n < 16) throw std::invalid_argument("make_anchor: needs n >= 16");
  Rng rng(seed, anchor_stream(kind));
  Tensor sum({space.dim()});
  for (std::size_t j = 0; j < n; ++j) {
    const FactorVector f = sample_factor_prior(rng);
    sum += space.embed(render(kind, f, k_points));
  }
  DomainAnchor anchor;
  anchor.kind = kind;
  anchor.n = n;
  anchor.seed = seed;
  anchor.value = sum * (1.0 / static_cast<double>(n));
  return anchor;
}

double anchor_standard_error(const EmbeddingSpace& space, DomainKind kind,
                             std::size_t n, std::uint64_t seed,
                             std::size_t k_points) {
  if (n < 2) throw std::invalid_argument("anchor_standard_error: n >= 2");
  Rng rng(seed, anchor_stream(kind));
  Tensor sum({space.dim()});
  Tensor sumsq({space.dim()});
  for (std::size_t j = 0; j < n; ++j) {
    const FactorVector f = sample_factor_prior(rng);
    const Tensor e = space.embed(render(kind, f, k_points));
    sum += e;
    sumsq += hadamard(e, e);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < space.dim(); ++i) {
    const double mean = sum[i] / static_cast<double>(n);
    const double var =
        std::max(0.0, sumsq[i] / static_cast<double>(n) - mean * mean);
    total += var / static_cast<double>(n);
  }
  return std::sqrt(total);
}

}  // namespace dexp
