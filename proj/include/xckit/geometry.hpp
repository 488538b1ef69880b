#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace xckit {

// Pixel (row, col) covers BEV x in [origin_x + col*pixel_size, +pixel_size)
// and BEV y in [origin_y + row*pixel_size, +pixel_size). Rows follow +y.
struct GridMeta {
  std::size_t height = 0;
  std::size_t width = 0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_size = 1.0;

  void validate() const;
  double center_x(std::size_t col) const { return origin_x + (static_cast<double>(col) + 0.5) * pixel_size; }
  double center_y(std::size_t row) const { return origin_y + (static_cast<double>(row) + 0.5) * pixel_size; }
  std::size_t pixels() const { return height * width; }

  friend bool operator==(const GridMeta&, const GridMeta&) = default;
};

// Center, extents and heading of an upright 3-D box. Extents are full
// lengths along the box's own x/y/z axes; yaw rotates about +z.
struct Box3D {
  double cx = 0, cy = 0, cz = 0;
  double dx = 1, dy = 1, dz = 1;
  double yaw = 0;

  void validate() const;
  double volume() const { return dx * dy * dz; }

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

// Wraps an angle into (-pi, pi].
double normalize_yaw(double yaw);

struct Point2 {
  double x = 0;
  double y = 0;
};

// Counter-clockwise quad.
struct BevPolygon {
  std::array<Point2, 4> corners;
};

struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0 or 1

  std::uint8_t at(std::size_t row, std::size_t col) const { return bits[row * width + col]; }
  std::size_t count() const;
};

Box3D enlarge(const Box3D& box, double margin);

BevPolygon project_to_bev(const Box3D& box);

double polygon_area(const std::vector<Point2>& poly);

// Inside-or-on-boundary test for a convex counter-clockwise polygon.
bool contains(const BevPolygon& poly, Point2 p);

// A pixel is set when its center lies inside or on the polygon.
Mask membership_mask(const BevPolygon& poly, const GridMeta& grid);

// Convex polygon intersection area by Sutherland-Hodgman clipping.
double intersection_area(const BevPolygon& a, const BevPolygon& b);

double iou_bev(const Box3D& a, const Box3D& b);
double iou_3d(const Box3D& a, const Box3D& b);

}  // namespace xckit
