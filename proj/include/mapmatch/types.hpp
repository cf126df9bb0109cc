#ifndef MAPMATCH_TYPES_HPP_
#define MAPMATCH_TYPES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mapmatch {

/// A ground-object class name ("building", "intersection", ...).
/// Comparison is exact string equality.
using Label = std::string;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Point2& o) const { return x == o.x && y == o.y; }

    double norm() const { return std::hypot(x, y); }
};

inline double dist(const Point2& a, const Point2& b) { return (a - b).norm(); }

/// Axis-aligned rectangle, min corner inclusive, max corner inclusive.
struct Rect {
    Point2 min;
    Point2 max;

    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
    double diagonal() const { return std::hypot(width(), height()); }

    bool contains(const Point2& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
    }
    Rect expanded(double margin) const {
        return {{min.x - margin, min.y - margin}, {max.x + margin, max.y + margin}};
    }
    bool valid() const { return max.x >= min.x && max.y >= min.y; }
};

struct Disc {
    Point2 center;
    double radius = 0.0;

    bool contains(const Point2& p) const { return dist(center, p) <= radius; }
};

/// One ground object: a label and a 2-D position.  Positions are pixels
/// for image objects and meters for database objects.
struct LabeledPoint {
    std::string id;
    Label label;
    double x = 0.0;
    double y = 0.0;

    Point2 pos() const { return {x, y}; }
};

inline bool finite(double v) { return std::isfinite(v); }

/// Mapping Label -> Label used to coarsen the taxonomy (many classes to
/// fewer, or all to one).
using LabelMap = std::unordered_map<Label, Label>;

/// Applies a label map to a list of objects.  In strict mode every label
/// present must be mapped; otherwise unmapped labels pass through.
inline std::vector<LabeledPoint> apply_label_map(const std::vector<LabeledPoint>& objects,
                                                 const LabelMap& map, bool strict) {
    std::vector<LabeledPoint> out = objects;
    for (auto& o : out) {
        auto it = map.find(o.label);
        if (it != map.end()) {
            o.label = it->second;
        } else if (strict) {
            throw std::runtime_error("coarsen_labels: unmapped label \"" + o.label + "\"");
        }
    }
    return out;
}

/// splitmix64; used to derive independent per-trial seeds from a case seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace mapmatch

#endif  // MAPMATCH_TYPES_HPP_
