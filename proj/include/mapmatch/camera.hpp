#ifndef MAPMATCH_CAMERA_HPP_
#define MAPMATCH_CAMERA_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mapmatch/database.hpp"
#include "mapmatch/geometry.hpp"
#include "mapmatch/matcher.hpp"
#include "mapmatch/scene.hpp"
#include "mapmatch/types.hpp"

namespace mapmatch {

/// Ideal pinhole camera.  The FOV is horizontal; the vertical half-angle
/// follows from the aspect ratio.
struct CameraModel {
    double width_px = 640.0;
    double height_px = 480.0;
    double hfov = 35.0 * kPi / 180.0;

    double f_px() const { return (width_px / 2.0) / std::tan(hfov / 2.0); }
    double tan_half_hfov() const { return std::tan(hfov / 2.0); }
    double tan_half_vfov() const { return tan_half_hfov() * (height_px / width_px); }

    void validate() const {
        if (!(hfov > 0.0 && hfov < kPi)) throw std::invalid_argument("CameraModel: hfov out of (0, pi)");
        if (width_px <= 0.0 || height_px <= 0.0)
            throw std::invalid_argument("CameraModel: non-positive image size");
    }
};

struct TruePose {
    double x = 0.0;     // meters, east
    double y = 0.0;     // meters, north
    double alt = 0.0;   // height above ground, > 0
    double roll = 0.0;  // radians
    double pitch = 0.0;
    double yaw = 0.0;   // the matcher is yaw-invariant; default 0
};

struct NoiseModel {
    double sigma_att = 0.0;  // radians, applied to roll and pitch
    double sigma_px = 0.0;   // pixels, applied to u and v per object
    std::uint64_t seed = 0;
};

/// Half-extents of the ground footprint at nadir.
inline Point2 footprint_half_extents(const CameraModel& cam, double alt) {
    return {alt * cam.tan_half_hfov(), alt * cam.tan_half_vfov()};
}

/// Weighted label distribution for synthesized databases.
using LabelDistribution = std::vector<std::pair<Label, double>>;

/// Objects i.i.d. uniform over the region, labels drawn from the given
/// distribution.  Deterministic under seed.
inline MapDatabase synth_database(const Rect& region, int n_objects,
                                  const LabelDistribution& labels, std::uint64_t seed,
                                  double grid_cell_m = kDefaultGridCellM) {
    if (n_objects < 0) throw std::invalid_argument("synth_database: negative object count");
    if (labels.empty()) throw std::invalid_argument("synth_database: empty label distribution");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(region.min.x, region.max.x);
    std::uniform_real_distribution<double> uy(region.min.y, region.max.y);
    std::vector<double> weights;
    for (const auto& [label, w] : labels) weights.push_back(w);
    std::discrete_distribution<int> dl(weights.begin(), weights.end());

    std::vector<LabeledPoint> objects;
    objects.reserve(n_objects);
    for (int i = 0; i < n_objects; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        const Label& label = labels[dl(rng)].first;
        objects.push_back({"o" + std::to_string(i), label, x, y});
    }
    return MapDatabase(std::move(objects), region, grid_cell_m);
}

namespace detail {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline Mat3 rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
}

inline Mat3 rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
}

inline Mat3 rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
}

}  // namespace detail

/// Projects database objects into a simulated image from the true pose.
/// The camera axes at zero attitude are X = east (u right), Y = -north
/// (v down), Z = down; attitude is applied as an exact rotation (roll
/// about X, then pitch about Y, then yaw about Z).  Gaussian pixel noise
/// is added after projection; objects outside the image are dropped.
inline Scene project_scene(const MapDatabase& db, const TruePose& pose, const CameraModel& cam,
                           const NoiseModel& noise) {
    cam.validate();
    if (!(pose.alt > 0.0)) throw std::invalid_argument("project_scene: pose.alt must be > 0");

    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Attitude error draws come first so the retained-object count does
    // not perturb them.
    const double roll = pose.roll + noise.sigma_att * (noise.sigma_att > 0.0 ? gauss(rng) : 0.0);
    const double pitch = pose.pitch + noise.sigma_att * (noise.sigma_att > 0.0 ? gauss(rng) : 0.0);

    // Rows are the camera axes expressed in the world frame.
    detail::Mat3 r_nadir{{{1, 0, 0}, {0, -1, 0}, {0, 0, -1}}};
    detail::Mat3 body = detail::mat_mul(
        detail::rot_z(pose.yaw),
        detail::mat_mul(detail::rot_y(pitch), detail::rot_x(roll)));
    // world -> camera: first nadir alignment, then the body misalignment.
    detail::Mat3 w2c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) w2c[i][j] += body[k][i] * r_nadir[k][j];

    Scene s;
    s.width_px = cam.width_px;
    s.height_px = cam.height_px;
    s.truth = SceneTruth{pose.x, pose.y, pose.alt};

    const double cx = cam.width_px / 2.0, cy = cam.height_px / 2.0;
    const double f = cam.f_px();
    int idx = 0;
    for (const auto& o : db.objects()) {
        const double d[3] = {o.x - pose.x, o.y - pose.y, -pose.alt};
        double c[3] = {0, 0, 0};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) c[i] += w2c[i][j] * d[j];
        if (c[2] <= 0.0) continue;  // behind the image plane
        double u = cx + f * c[0] / c[2];
        double v = cy + f * c[1] / c[2];
        if (noise.sigma_px > 0.0) {
            u += noise.sigma_px * gauss(rng);
            v += noise.sigma_px * gauss(rng);
        }
        if (u < 0.0 || u > cam.width_px || v < 0.0 || v > cam.height_px) continue;
        s.objects.push_back({"s" + std::to_string(idx++), o.label, u, v});
    }
    return s;
}

/// Inverse of the ideal nadir projection; test helper.
inline Point2 unproject_nadir(const CameraModel& cam, const TruePose& pose, double u, double v) {
    const double f = cam.f_px();
    const double dx = (u - cam.width_px / 2.0) * pose.alt / f;
    const double dy = -(v - cam.height_px / 2.0) * pose.alt / f;
    return {pose.x + dx, pose.y + dy};
}

inline double estimate_height(const MatchOutcome& outcome, const CameraModel& cam) {
    return estimate_height(outcome, cam.f_px());
}

}  // namespace mapmatch

#endif  // MAPMATCH_CAMERA_HPP_
