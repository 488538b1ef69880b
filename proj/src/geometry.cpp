#include "xckit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "xckit/error.hpp"

namespace xckit {

namespace {

constexpr double kSliverArea = 1e-10;
constexpr double kOnEdgeTolerance = 1e-9;

double cross(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Intersection of segment p-q with the infinite line through a-b.
Point2 line_hit(Point2 p, Point2 q, Point2 a, Point2 b) {
  const double d1 = cross(a, b, p);
  const double d2 = cross(a, b, q);
  const double t = d1 / (d1 - d2);
  return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

}  // namespace

void GridMeta::validate() const {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs at least one pixel");
  }
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size) || !std::isfinite(origin_x) ||
      !std::isfinite(origin_y)) {
    throw Error(ErrorCode::kInvalidArgument, "grid pixel_size must be positive and finite");
  }
}

void Box3D::validate() const {
  for (double v : {cx, cy, cz, dx, dy, dz, yaw}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "box has non-finite field");
  }
  if (!(dx > 0 && dy > 0 && dz > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "box extents must be positive");
  }
  if (!(yaw > -std::numbers::pi && yaw <= std::numbers::pi)) {
    throw Error(ErrorCode::kInvalidArgument, "box yaw must lie in (-pi, pi]");
  }
}

double normalize_yaw(double yaw) {
  double r = std::remainder(yaw, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Box3D enlarge(const Box3D& box, double margin) {
  if (margin < 0.0 || !std::isfinite(margin)) {
    throw Error(ErrorCode::kNegativeMargin, "margin " + std::to_string(margin));
  }
  Box3D out = box;
  out.dx += 2.0 * margin;
  out.dy += 2.0 * margin;
  out.dz += 2.0 * margin;
  return out;
}

BevPolygon project_to_bev(const Box3D& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double hx = box.dx / 2.0, hy = box.dy / 2.0;
  constexpr std::array<std::array<double, 2>, 4> signs{{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};
  BevPolygon poly;
  for (std::size_t i = 0; i < 4; ++i) {
    const double lx = signs[i][0] * hx, ly = signs[i][1] * hy;
    poly.corners[i] = {box.cx + c * lx - s * ly, box.cy + s * lx + c * ly};
  }
  return poly;
}

double polygon_area(const std::vector<Point2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice) / 2.0;
}

bool contains(const BevPolygon& poly, Point2 p) {
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 a = poly.corners[i];
    const Point2 b = poly.corners[(i + 1) % 4];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (cross(a, b, p) < -kOnEdgeTolerance * std::max(1.0, len)) return false;
  }
  return true;
}

Mask membership_mask(const BevPolygon& poly, const GridMeta& grid) {
  grid.validate();
  Mask mask{grid.height, grid.width, std::vector<std::uint8_t>(grid.pixels(), 0)};
  double xmin = poly.corners[0].x, xmax = xmin, ymin = poly.corners[0].y, ymax = ymin;
  for (const Point2& p : poly.corners) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  // Candidate pixel range from the bounding box, padded by one pixel.
  auto lo_index = [&](double v, double origin, std::size_t n) -> std::size_t {
    const double f = std::floor((v - origin) / grid.pixel_size) - 1.0;
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(n)));
  };
  auto hi_index = [&](double v, double origin, std::size_t n) -> std::size_t {
    const double f = std::ceil((v - origin) / grid.pixel_size) + 1.0;
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(n)));
  };
  const std::size_t c0 = lo_index(xmin, grid.origin_x, grid.width);
  const std::size_t c1 = hi_index(xmax, grid.origin_x, grid.width);
  const std::size_t r0 = lo_index(ymin, grid.origin_y, grid.height);
  const std::size_t r1 = hi_index(ymax, grid.origin_y, grid.height);
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) {
      if (contains(poly, {grid.center_x(c), grid.center_y(r)})) mask.bits[r * grid.width + c] = 1;
    }
  }
  return mask;
}

double intersection_area(const BevPolygon& a, const BevPolygon& b) {
  std::vector<Point2> subject(a.corners.begin(), a.corners.end());
  for (std::size_t e = 0; e < 4 && !subject.empty(); ++e) {
    const Point2 ca = b.corners[e];
    const Point2 cb = b.corners[(e + 1) % 4];
    std::vector<Point2> clipped;
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Point2 p = subject[i];
      const Point2 q = subject[(i + 1) % subject.size()];
      const bool p_in = cross(ca, cb, p) >= 0.0;
      const bool q_in = cross(ca, cb, q) >= 0.0;
      if (p_in) clipped.push_back(p);
      if (p_in != q_in) clipped.push_back(line_hit(p, q, ca, cb));
    }
    subject = std::move(clipped);
  }
  if (subject.size() < 3) return 0.0;
  const double area = polygon_area(subject);
  return area < kSliverArea ? 0.0 : area;
}

double iou_bev(const Box3D& a, const Box3D& b) {
  const double inter = intersection_area(project_to_bev(a), project_to_bev(b));
  const double uni = a.dx * a.dy + b.dx * b.dy - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double z_overlap = std::min(a.cz + a.dz / 2, b.cz + b.dz / 2) -
                           std::max(a.cz - a.dz / 2, b.cz - b.dz / 2);
  if (z_overlap <= 0.0) return 0.0;
  const double inter_area = intersection_area(project_to_bev(a), project_to_bev(b));
  if (inter_area <= 0.0) return 0.0;
  const double inter = inter_area * z_overlap;
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

}  // namespace xckit
