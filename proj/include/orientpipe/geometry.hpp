#pragma once

// Points in the image, sensor (lat/lon) and field domains, planar homographies
// between them, and orientation compensation for camera perspective.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "orientpipe/angles.hpp"
#include "orientpipe/error.hpp"

namespace orientpipe::geometry {

enum class Domain { Image, Sensor, Field };

inline constexpr std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::Image: return "image";
    case Domain::Sensor: return "sensor";
    case Domain::Field: return "field";
  }
  return "?";
}

inline Domain domain_from_string(std::string_view s) {
  if (s == "image") return Domain::Image;
  if (s == "sensor") return Domain::Sensor;
  if (s == "field") return Domain::Field;
  throw Error(Errc::Parse, "unknown domain '" + std::string(s) + "'");
}

/// Pixels; x to the right, y downward.
struct ImagePoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const ImagePoint&) const = default;
};

/// Meters; origin at the top-left corner, x along the top sideline, y downward.
struct FieldPoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const FieldPoint&) const = default;
};

/// Degrees. As a planar point it is (lon, lat), i.e. easting then northing.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

inline Eigen::Vector2d planar(const ImagePoint& p) { return {p.x, p.y}; }
inline Eigen::Vector2d planar(const FieldPoint& p) { return {p.x, p.y}; }
inline Eigen::Vector2d planar(const GeoPoint& p) { return {p.lon, p.lat}; }

template <class P>
constexpr Domain domain_of() {
  if constexpr (std::is_same_v<P, ImagePoint>) return Domain::Image;
  else if constexpr (std::is_same_v<P, GeoPoint>) return Domain::Sensor;
  else return Domain::Field;
}

template <class P>
P from_planar(const Eigen::Vector2d& v) {
  if constexpr (std::is_same_v<P, GeoPoint>) return GeoPoint{v.y(), v.x()};
  else return P{v.x(), v.y()};
}

inline constexpr double kSingularDeterminant = 1e-12;
inline constexpr double kInfinityDenominator = 1e-12;

// 3x3 projective map between two planar domains, normalised so m(2,2) == 1.
class Homography {
 public:
  Homography(const Eigen::Matrix3d& m, Domain src, Domain dst) : m_(m), src_(src), dst_(dst) {
    if (!m_.allFinite()) throw Error(Errc::DegenerateConfiguration, "non-finite homography");
    if (std::fabs(m_(2, 2)) < 1e-15) throw Error(Errc::DegenerateConfiguration, "homography with m22 == 0");
    m_ /= m_(2, 2);
    if (std::fabs(m_.determinant()) <= kSingularDeterminant) {
      throw Error(Errc::DegenerateConfiguration, "singular homography");
    }
  }

  static Homography identity(Domain src, Domain dst) { return Homography(Eigen::Matrix3d::Identity(), src, dst); }

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  Domain src() const noexcept { return src_; }
  Domain dst() const noexcept { return dst_; }

  std::array<double, 9> row_major() const {
    std::array<double, 9> out{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(3 * r + c)] = m_(r, c);
    return out;
  }

  Homography inverse() const { return Homography(m_.inverse(), dst_, src_); }

  /// Composition: (*this) after `first`.
  Homography after(const Homography& first) const {
    if (first.dst_ != src_) throw Error(Errc::DomainMismatch, "cannot compose homographies");
    return Homography(m_ * first.m_, first.src_, dst_);
  }

 private:
  Eigen::Matrix3d m_;
  Domain src_;
  Domain dst_;
};

/// (hx/hw, hy/hw). Throws PointAtInfinity when |hw| < 1e-12.
inline Eigen::Vector2d apply(const Homography& h, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = h.matrix() * p.homogeneous();
  if (std::fabs(q.z()) < kInfinityDenominator) throw Error(Errc::PointAtInfinity, "point maps to infinity");
  return q.hnormalized();
}

/// Domain-checked application, e.g. ImagePoint -> FieldPoint through H_IF.
template <class Dst, class Src>
Dst map_point(const Homography& h, const Src& p) {
  if (h.src() != domain_of<Src>() || h.dst() != domain_of<Dst>()) {
    throw Error(Errc::DomainMismatch, std::string("homography maps ") + std::string(to_string(h.src())) + "->" +
                                          std::string(to_string(h.dst())));
  }
  return from_planar<Dst>(apply(h, planar(p)));
}

struct Correspondence {
  Eigen::Vector2d src;
  Eigen::Vector2d dst;
  std::optional<std::string> label;
};

namespace detail {

// Similarity taking the centroid to the origin and the mean distance to sqrt(2).
inline Eigen::Matrix3d isotropic_normalizer(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (mean_dist <= 0.0) throw Error(Errc::DegenerateConfiguration, "all points coincide");
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

inline bool collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                      double tol) {
  const Eigen::Vector2d u = b - a, v = c - a;
  return std::fabs(u.x() * v.y() - u.y() * v.x()) <= tol;
}

// True when some 4 of the (normalized) points have no 3 collinear.
inline bool has_general_position_quad(const std::vector<Eigen::Vector2d>& p, double tol) {
  const std::size_t n = p.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c) {
        if (collinear(p[a], p[b], p[c], tol)) continue;
        for (std::size_t d = c + 1; d < n; ++d) {
          if (!collinear(p[a], p[b], p[d], tol) && !collinear(p[a], p[c], p[d], tol) &&
              !collinear(p[b], p[c], p[d], tol))
            return true;
        }
      }
  return false;
}

}  // namespace detail

/// Normalized DLT: least-squares algebraic fit after Hartley normalisation of
/// both point sets, solved through the SVD nullspace of the 2N x 9 system.
inline Homography estimate_homography(const std::vector<Correspondence>& pairs, Domain src = Domain::Image,
                                      Domain dst = Domain::Field) {
  if (pairs.size() < 4) {
    throw Error(Errc::TooFewPoints, "need at least 4 correspondences, got " + std::to_string(pairs.size()));
  }
  std::vector<Eigen::Vector2d> from, to;
  from.reserve(pairs.size());
  to.reserve(pairs.size());
  for (const auto& c : pairs) {
    if (!c.src.allFinite() || !c.dst.allFinite()) throw Error(Errc::InvalidArgument, "non-finite correspondence");
    from.push_back(c.src);
    to.push_back(c.dst);
  }
  const Eigen::Matrix3d t_from = detail::isotropic_normalizer(from);
  const Eigen::Matrix3d t_to = detail::isotropic_normalizer(to);
  for (auto& p : from) p = (t_from * p.homogeneous()).hnormalized();
  for (auto& p : to) p = (t_to * p.homogeneous()).hnormalized();

  constexpr double kCollinearTol = 1e-9;
  if (!detail::has_general_position_quad(from, kCollinearTol) || !detail::has_general_position_quad(to, kCollinearTol)) {
    throw Error(Errc::DegenerateConfiguration, "no four points in general position");
  }

  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = from[static_cast<std::size_t>(i)].x(), y = from[static_cast<std::size_t>(i)].y();
    const double u = to[static_cast<std::size_t>(i)].x(), v = to[static_cast<std::size_t>(i)].y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() >= 8 && sv(7) <= 1e-12 * sv(0)) {
    throw Error(Errc::DegenerateConfiguration, "design matrix nullspace is not one-dimensional");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d m = t_to.inverse() * hn * t_from;
  if (std::fabs(m(2, 2)) < 1e-15) throw Error(Errc::DegenerateConfiguration, "estimated m22 vanishes");
  return Homography(m, src, dst);
}

/// Largest distance between apply(h, src) and dst over the pairs.
inline double max_reprojection_error(const Homography& h, const std::vector<Correspondence>& pairs) {
  double worst = 0.0;
  for (const auto& c : pairs) worst = std::max(worst, (apply(h, c.src) - c.dst).norm());
  return worst;
}

/// Angle of a field-domain vector in the field convention (0 right, 90 toward
/// the top sideline). Field y grows downward, hence the sign flip.
inline double field_vector_angle(const Eigen::Vector2d& v) {
  return angles::normalize(std::atan2(-v.y(), v.x()) * angles::kRadToDeg);
}

/// Expresses a raw orientation relative to the apparent zero direction at the
/// player's image position: maps P and P + (1, 0) through H_IF and subtracts
/// the field angle of the resulting vector.
inline double compensate_angle(double alpha_raw, const ImagePoint& player, const Homography& h_if) {
  if (h_if.src() != Domain::Image || h_if.dst() != Domain::Field) {
    throw Error(Errc::DomainMismatch, "compensation needs an image->field homography");
  }
  const Eigen::Vector2d p = planar(player);
  const Eigen::Vector2d f = apply(h_if, p);
  const Eigen::Vector2d f0 = apply(h_if, p + Eigen::Vector2d(1.0, 0.0));
  const Eigen::Vector2d zero_vector = f0 - f;
  if (zero_vector.norm() < 1e-9) throw Error(Errc::DegenerateZeroVector, "apparent zero-vector collapses");
  return angles::normalize(alpha_raw - field_vector_angle(zero_vector));
}

}  // namespace orientpipe::geometry
