#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dexp/rng.hpp"
#include "dexp/tensor.hpp"

namespace dexp {

// Shape factors: mean radius, center, eccentricity. Semi-axes are
// a = r * (1 + ecc), b = r * (1 - ecc). Sampled shapes keep r > 0 and
// |ecc| <= 0.5; the renderer itself is defined for any finite factors.
struct FactorVector {
  double r = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double ecc = 0.0;
};

enum class DomainKind { ellipse, square, star5, spiky_ellipse, double_ring };

const char* to_string(DomainKind kind);
DomainKind parse_domain_kind(const std::string& name);
const std::vector<DomainKind>& all_domain_kinds();

// A generated sample: K points, row-major K x 2.
struct PointCloud {
  Tensor points;
  PointCloud() = default;
  explicit PointCloud(Tensor pts) : points(std::move(pts)) {}
  static PointCloud zeros(std::size_t k) { return PointCloud(Tensor({k, 2})); }
  std::size_t size() const { return points.shape()[0]; }
  double x(std::size_t k) const { return points(k, 0); }
  double y(std::size_t k) const { return points(k, 1); }
};

// K points on the fixed angular grid t_k = 2 pi k / K mapped through the
// shape family: (cx + a * u_k cos t_k, cy + b * u_k sin t_k) with the
// radial profile u_k fixed per kind (ellipse u = 1, square traces the
// boundary, star5 u = 1 + 0.4 cos 5t, spiky-ellipse u = 0.55 + 0.3 cos^4 9t,
// double-ring alternates 1.55 / 0.45 by point parity).
PointCloud render(DomainKind kind, const FactorVector& f,
                  std::size_t k_points);

// The frozen feature map standing in for an image encoder. Fourteen moment
// features (centroid, central second and third moments, centroid-distance
// moments, second angular harmonics) plus two soft histograms with `bins`
// Gaussian bins each: radial over centroid-distance and angular with
// wrap-around (von Mises bumps). Every feature is an order-invariant sum,
// smooth in the point coordinates, and affinely normalized by fixed,
// documented constants. Frozen after construction; never trained.
class EmbeddingSpace {
 public:
  static const EmbeddingSpace& standard();  // 8 bins,  E = 30
  static const EmbeddingSpace& heldout();   // 12 bins, E = 38 (eval only)

  std::size_t bins() const { return bins_; }
  std::size_t dim() const { return 14 + 2 * bins_; }

  Tensor embed(const PointCloud& cloud) const;
  // Vector-Jacobian product: d(cotangent . embed)/d points, K x 2.
  Tensor embed_vjp(const PointCloud& cloud, const Tensor& cotangent) const;

  // The frozen affine normalization tables.
  const std::vector<double>& centers() const { return centers_; }
  const std::vector<double>& scales() const { return scales_; }

 private:
  explicit EmbeddingSpace(std::size_t bins);
  void raw_features(const PointCloud& cloud, std::vector<double>& out) const;

  std::size_t bins_;
  double radial_step_;    // radial bin spacing; centers (b + 0.5) * step
  double radial_width_;   // Gaussian width of radial bins
  double angular_kappa_;  // concentration of angular bins
  std::vector<double> centers_;  // per-feature affine normalization
  std::vector<double> scales_;
};

// Frozen mean embedding of a domain's procedural samples; the stand-in for
// a text-prompt embedding. Recomputable bit-exactly from (kind, n, seed).
struct DomainAnchor {
  DomainKind kind = DomainKind::ellipse;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  Tensor value;
};

// Factor prior for anchors and reference sets: r in [0.5, 1.5],
// cx, cy in [-1, 1], ecc in [-0.3, 0.3], all uniform, drawn in that order.
FactorVector sample_factor_prior(Rng& rng);

DomainAnchor make_anchor(const EmbeddingSpace& space, DomainKind kind,
                         std::size_t n, std::uint64_t seed,
                         std::size_t k_points);

// Monte-Carlo standard error of an anchor estimate (norm of the per-feature
// standard errors); used when validating fixture separation.
double anchor_standard_error(const EmbeddingSpace& space, DomainKind kind,
                             std::size_t n, std::uint64_t seed,
                             std::size_t k_points);

}  // namespace dexp
