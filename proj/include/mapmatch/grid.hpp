#ifndef MAPMATCH_GRID_HPP_
#define MAPMATCH_GRID_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mapmatch/types.hpp"

namespace mapmatch {

/// Uniform spatial grid over a rectangle.  Queries are conservative: the
/// visited set is a superset of the objects geometrically inside the
/// requested annulus; callers apply the exact predicate.
class UniformGrid2D {
public:
    UniformGrid2D() = default;

    UniformGrid2D(const std::vector<Point2>& points, const Rect& region, double cell_size)
        : region_(region), cell_(cell_size > 0.0 ? cell_size : 10.0) {
        nx_ = std::max<int>(1, static_cast<int>(std::ceil(region.width() / cell_)));
        ny_ = std::max<int>(1, static_cast<int>(std::ceil(region.height() / cell_)));
        cells_.resize(static_cast<std::size_t>(nx_) * ny_);
        for (std::size_t i = 0; i < points.size(); ++i)
            cells_[cell_index(points[i])].push_back(static_cast<int>(i));
    }

    /// Visits every point index whose cell intersects the annulus
    /// [r_min, r_max] about center.  Cells wholly inside the inner circle
    /// or wholly outside the outer circle are skipped.
    template <typename Fn>
    void for_each_in_annulus(const Point2& center, double r_min, double r_max, Fn&& fn) const {
        if (cells_.empty() || r_max <= 0.0) return;
        r_min = std::max(0.0, r_min);

        int cx0 = clamp_x(static_cast<int>(std::floor((center.x - r_max - region_.min.x) / cell_)));
        int cx1 = clamp_x(static_cast<int>(std::floor((center.x + r_max - region_.min.x) / cell_)));
        int cy0 = clamp_y(static_cast<int>(std::floor((center.y - r_max - region_.min.y) / cell_)));
        int cy1 = clamp_y(static_cast<int>(std::floor((center.y + r_max - region_.min.y) / cell_)));

        for (int cy = cy0; cy <= cy1; ++cy) {
            for (int cx = cx0; cx <= cx1; ++cx) {
                const double x0 = region_.min.x + cx * cell_;
                const double y0 = region_.min.y + cy * cell_;
                const double x1 = x0 + cell_;
                const double y1 = y0 + cell_;

                // Nearest / farthest distance from center to the cell box.
                const double dx = std::max({x0 - center.x, center.x - x1, 0.0});
                const double dy = std::max({y0 - center.y, center.y - y1, 0.0});
                const double near2 = dx * dx + dy * dy;
                if (near2 > r_max * r_max) continue;

                const double fx = std::max(center.x - x0, x1 - center.x);
                const double fy = std::max(center.y - y0, y1 - center.y);
                const double far2 = fx * fx + fy * fy;
                if (far2 < r_min * r_min) continue;

                for (int idx : cells_[static_cast<std::size_t>(cy) * nx_ + cx]) fn(idx);
            }
        }
    }

    /// Visits every point index in cells overlapping the square of the
    /// given half-width about center.  No per-cell distance culling: for
    /// queries a few cells wide the exact predicate in the caller is
    /// cheaper than the culling arithmetic.
    template <typename Fn>
    void for_each_near(const Point2& center, double radius, Fn&& fn) const {
        if (cells_.empty() || radius <= 0.0) return;
        const int cx0 = clamp_x(static_cast<int>(std::floor((center.x - radius - region_.min.x) / cell_)));
        const int cx1 = clamp_x(static_cast<int>(std::floor((center.x + radius - region_.min.x) / cell_)));
        const int cy0 = clamp_y(static_cast<int>(std::floor((center.y - radius - region_.min.y) / cell_)));
        const int cy1 = clamp_y(static_cast<int>(std::floor((center.y + radius - region_.min.y) / cell_)));
        for (int cy = cy0; cy <= cy1; ++cy)
            for (int cx = cx0; cx <= cx1; ++cx)
                for (int idx : cells_[static_cast<std::size_t>(cy) * nx_ + cx]) fn(idx);
    }

    double cell_size() const { return cell_; }

private:
    std::size_t cell_index(const Point2& p) const {
        const int cx = clamp_x(static_cast<int>(std::floor((p.x - region_.min.x) / cell_)));
        const int cy = clamp_y(static_cast<int>(std::floor((p.y - region_.min.y) / cell_)));
        return static_cast<std::size_t>(cy) * nx_ + cx;
    }
    int clamp_x(int c) const { return std::clamp(c, 0, nx_ - 1); }
    int clamp_y(int c) const { return std::clamp(c, 0, ny_ - 1); }

    Rect region_;
    double cell_ = 10.0;
    int nx_ = 0, ny_ = 0;
    std::vector<std::vector<int>> cells_;
};

}  // namespace mapmatch

#endif  // MAPMATCH_GRID_HPP_
