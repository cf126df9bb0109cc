#ifndef MAPMATCH_SCENE_HPP_
#define MAPMATCH_SCENE_HPP_

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapmatch/types.hpp"

namespace mapmatch {

/// Ground-truth pose attached to a simulated scene.  Harness metadata
/// only; the matcher never reads it.
struct SceneTruth {
    double x = 0.0;
    double y = 0.0;
    double alt = 0.0;
};

/// The set of labeled objects extracted from one image.  Object
/// coordinates are pixels, u right / v down; the matcher's polar origin
/// is the image center.
struct Scene {
    std::vector<LabeledPoint> objects;  // x = u, y = v
    double width_px = 0.0;
    double height_px = 0.0;
    std::optional<SceneTruth> truth;

    Point2 center() const { return {width_px / 2.0, height_px / 2.0}; }

    void validate() const {
        if (width_px <= 0.0 || height_px <= 0.0)
            throw std::runtime_error("Scene: non-positive image dimensions");
        for (std::size_t i = 0; i < objects.size(); ++i) {
            const auto& o = objects[i];
            if (!finite(o.x) || !finite(o.y))
                throw std::runtime_error("Scene: non-finite coordinates at record " +
                                         std::to_string(i));
            if (o.label.empty())
                throw std::runtime_error("Scene: empty label at record " + std::to_string(i));
            if (o.x < 0.0 || o.x > width_px || o.y < 0.0 || o.y > height_px)
                throw std::runtime_error("Scene: object at record " + std::to_string(i) +
                                         " lies outside the image");
        }
    }
};

inline Scene load_scene(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("scene file: malformed JSON: ") + e.what());
    }
    Scene s;
    try {
        s.width_px = j.at("image").at("w").get<double>();
        s.height_px = j.at("image").at("h").get<double>();
        int idx = 0;
        for (const auto& o : j.at("objects")) {
            s.objects.push_back({"s" + std::to_string(idx++), o.at("label").get<std::string>(),
                                 o.at("u").get<double>(), o.at("v").get<double>()});
        }
        if (j.contains("truth")) {
            const auto& t = j.at("truth");
            s.truth = SceneTruth{t.at("x").get<double>(), t.at("y").get<double>(),
                                 t.value("alt", 0.0)};
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("scene file: malformed record: ") + e.what());
    }
    s.validate();
    return s;
}

inline Scene load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    return load_scene(in);
}

inline void save_scene(const Scene& s, std::ostream& out) {
    nlohmann::json j;
    j["image"] = {{"w", static_cast<int>(s.width_px)}, {"h", static_cast<int>(s.height_px)}};
    auto& arr = j["objects"] = nlohmann::json::array();
    for (const auto& o : s.objects)
        arr.push_back({{"label", o.label}, {"u", o.x}, {"v", o.y}});
    if (s.truth)
        j["truth"] = {{"x", s.truth->x}, {"y", s.truth->y}, {"alt", s.truth->alt}};
    out << j.dump(2) << "\n";
}

inline void save_scene_file(const Scene& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scene file: " + path);
    save_scene(s, out);
}

inline Scene coarsen_labels(const Scene& s, const LabelMap& map, bool strict = false) {
    Scene out = s;
    out.objects = apply_label_map(s.objects, map, strict);
    return out;
}

}  // namespace mapmatch

#endif  // MAPMATCH_SCENE_HPP_
