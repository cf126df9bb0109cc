#ifndef MAPMATCH_DATABASE_HPP_
#define MAPMATCH_DATABASE_HPP_

#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "mapmatch/grid.hpp"
#include "mapmatch/types.hpp"

namespace mapmatch {

inline constexpr double kDefaultGridCellM = 10.0;

/// The map side of the matching problem: labeled objects with world
/// coordinates in meters, an axis-aligned region, and a conservative
/// uniform grid index.  Immutable after construction.
class MapDatabase {
public:
    MapDatabase() = default;

    /// region empty -> computed as the bounding box of the objects.
    MapDatabase(std::vector<LabeledPoint> objects, std::optional<Rect> region,
                double grid_cell_m = kDefaultGridCellM)
        : objects_(std::move(objects)) {
        if (region) {
            region_ = *region;
        } else {
            if (objects_.empty())
                throw std::runtime_error("MapDatabase: empty object list needs an explicit region");
            region_ = bounding_box(objects_);
        }
        if (!region_.valid()) throw std::runtime_error("MapDatabase: invalid region");

        std::unordered_set<std::string> ids;
        std::vector<Point2> pts;
        pts.reserve(objects_.size());
        for (std::size_t i = 0; i < objects_.size(); ++i) {
            const auto& o = objects_[i];
            if (!finite(o.x) || !finite(o.y))
                throw std::runtime_error("MapDatabase: non-finite coordinates at record " +
                                         std::to_string(i));
            if (o.label.empty())
                throw std::runtime_error("MapDatabase: empty label at record " + std::to_string(i));
            if (!region_.contains(o.pos()))
                throw std::runtime_error("MapDatabase: object \"" + o.id +
                                         "\" (record " + std::to_string(i) +
                                         ") lies outside the declared region");
            if (!ids.insert(o.id).second)
                throw std::runtime_error("MapDatabase: duplicate id \"" + o.id + "\" at record " +
                                         std::to_string(i));
            pts.push_back(o.pos());
        }
        grid_ = UniformGrid2D(pts, region_, grid_cell_m);
    }

    const std::vector<LabeledPoint>& objects() const { return objects_; }
    const Rect& region() const { return region_; }
    const UniformGrid2D& grid() const { return grid_; }

    static Rect bounding_box(const std::vector<LabeledPoint>& objects) {
        Rect r{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()},
               {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
        for (const auto& o : objects) {
            r.min.x = std::min(r.min.x, o.x);
            r.min.y = std::min(r.min.y, o.y);
            r.max.x = std::max(r.max.x, o.x);
            r.max.y = std::max(r.max.y, o.y);
        }
        return r;
    }

private:
    std::vector<LabeledPoint> objects_;
    Rect region_;
    UniformGrid2D grid_;
};

inline MapDatabase load_database(std::istream& in, double grid_cell_m = kDefaultGridCellM) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("map file: malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("region") || !j.contains("objects"))
        throw std::runtime_error("map file: expected object with \"region\" and \"objects\"");

    Rect region;
    try {
        const auto& r = j.at("region");
        region.min = {r.at("min").at(0).get<double>(), r.at("min").at(1).get<double>()};
        region.max = {r.at("max").at(0).get<double>(), r.at("max").at(1).get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("map file: malformed region: ") + e.what());
    }

    std::vector<LabeledPoint> objects;
    const auto& arr = j.at("objects");
    if (!arr.is_array()) throw std::runtime_error("map file: \"objects\" is not an array");
    objects.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        try {
            const auto& o = arr.at(i);
            objects.push_back({o.at("id").get<std::string>(), o.at("label").get<std::string>(),
                               o.at("x").get<double>(), o.at("y").get<double>()});
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("map file: malformed record " + std::to_string(i) + ": " +
                                     e.what());
        }
    }
    return MapDatabase(std::move(objects), region, grid_cell_m);
}

inline MapDatabase load_database_file(const std::string& path,
                                      double grid_cell_m = kDefaultGridCellM) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open map file: " + path);
    return load_database(in, grid_cell_m);
}

inline void save_database(const MapDatabase& db, std::ostream& out) {
    nlohmann::json j;
    j["region"] = {{"min", {db.region().min.x, db.region().min.y}},
                   {"max", {db.region().max.x, db.region().max.y}}};
    auto& arr = j["objects"] = nlohmann::json::array();
    for (const auto& o : db.objects())
        arr.push_back({{"id", o.id}, {"label", o.label}, {"x", o.x}, {"y", o.y}});
    out << j.dump(2) << "\n";
}

inline void save_database_file(const MapDatabase& db, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write map file: " + path);
    save_database(db, out);
}

/// Label coarsening over a database; geometry and index layout unchanged.
inline MapDatabase coarsen_labels(const MapDatabase& db, const LabelMap& map,
                                  bool strict = false) {
    return MapDatabase(apply_label_map(db.objects(), map, strict), db.region(),
                       db.grid().cell_size());
}

}  // namespace mapmatch

#endif  // MAPMATCH_DATABASE_HPP_
