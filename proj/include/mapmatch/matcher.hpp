#ifndef MAPMATCH_MATCHER_HPP_
#define MAPMATCH_MATCHER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mapmatch/database.hpp"
#include "mapmatch/geometry.hpp"
#include "mapmatch/scene.hpp"
#include "mapmatch/types.hpp"

namespace mapmatch {

/// How the winning hypothesis is picked among qualifying ones.
///  - lexicographic: max N_matched, ties broken by min score (default).
///  - faithful: the N >= N_best && E < E_best acceptance chain, scanned
///    in canonical anchor order.
enum class SelectionMode { lexicographic, faithful };

struct SampledSearch {
    std::uint64_t max_hypotheses = 0;
    std::uint64_t seed = 0;
};

using PriorRegion = std::variant<Rect, Disc>;

inline bool prior_contains(const PriorRegion& prior, const Point2& p) {
    return std::visit([&](const auto& shape) { return shape.contains(p); }, prior);
}

struct MatchParams {
    int n_min = 6;
    double delta_r = 0.2;       // radius-ratio tolerance, dimensionless
    double delta_theta = 0.2;   // angle tolerance, radians
    std::optional<PriorRegion> prior_region;
    SelectionMode selection_mode = SelectionMode::lexicographic;
    std::optional<SampledSearch> sampled;  // nullopt = exhaustive search
    int top_k = 1;
    std::optional<LabelMap> label_map;
    bool strict_labels = false;
    // One database object may serve several image objects by default;
    // injective switches to a greedy one-to-one assignment.
    bool injective = false;
    // Accepted origins must lie inside db.region expanded by this margin.
    double region_margin_m = 0.0;
    // Candidates closer than this are merged in rank_candidates.
    double merge_radius_m = 5.0;

    void validate() const {
        if (n_min < 3) throw std::invalid_argument("MatchParams: n_min must be >= 3");
        if (!(delta_r > 0.0)) throw std::invalid_argument("MatchParams: delta_r must be > 0");
        if (!(delta_theta > 0.0 && delta_theta < kPi))
            throw std::invalid_argument("MatchParams: delta_theta must be in (0, pi)");
        if (top_k < 1) throw std::invalid_argument("MatchParams: top_k must be >= 1");
        if (region_margin_m < 0.0)
            throw std::invalid_argument("MatchParams: region_margin_m must be >= 0");
    }
};

/// One anchored correspondence: an image object pair, an ordered database
/// pair, the solved origin, and the consensus it gathered.
struct Hypothesis {
    int img_i = -1, img_j = -1;  // scene indices, i < j, i is the reference
    int db_i = -1, db_j = -1;    // database indices, ordered
    Point2 origin;
    double r_i_m = 0.0;          // anchor radius about the origin, meters
    double scale = 0.0;          // meters per pixel, R_i / r_i
    std::vector<std::pair<int, int>> matches;  // non-anchor (scene, db) pairs
    std::vector<double> residuals;             // e_k for each entry of matches
    int n_matched = 2;
    double score = 0.0;          // population std of residuals

    std::uint64_t order_key() const {
        return (static_cast<std::uint64_t>(img_i) << 48) |
               (static_cast<std::uint64_t>(img_j) << 32) |
               (static_cast<std::uint64_t>(db_i) << 16) | static_cast<std::uint64_t>(db_j);
    }
};

struct MatchCounters {
    std::uint64_t hypotheses_total = 0;
    std::uint64_t pruned_degenerate = 0;
    std::uint64_t pruned_region = 0;
    std::uint64_t pruned_prior = 0;
    std::uint64_t evaluated = 0;   // consensus counting entered
    std::uint64_t qualifying = 0;  // reached n_min
};

struct Candidate {
    Point2 position;
    int n_matched = 0;
    double score = 0.0;
};

struct MatchOutcome {
    bool accepted = false;
    Point2 position;  // valid iff accepted
    int n_matched = 0;
    double score = 0.0;
    std::optional<double> scale;  // meters per pixel of the winner
    std::vector<Candidate> candidates;
    std::optional<Hypothesis> best;  // full detail of the winner
    MatchCounters counters;
};

namespace detail {

// Domain padding of the coarse distance field beyond the database region.
inline constexpr double kFieldMarginM = 100.0;
inline constexpr double kSqrt1_2 = 0.70710678118654752440;

inline double population_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double e : v) var += (e - mean) * (e - mean);
    return std::sqrt(var / static_cast<double>(v.size()));
}

/// Shared hypothesis enumeration for match() and rank_candidates().
/// The collector sees every qualifying hypothesis and steers pruning via
/// its floor (minimum useful N) and score bound.
class Enumerator {
public:
    Enumerator(const Scene& scene, const MapDatabase& db, const MatchParams& params)
        : db_(db), params_(params) {
        params_.validate();
        const Point2 center = scene.center();
        eps_r_ = kEpsRadiusFrac * std::hypot(scene.width_px, scene.height_px);
        img_diag_px_ = std::hypot(scene.width_px, scene.height_px);

        // Image coordinates flipped to y-up so the image and map frames
        // share handedness; otherwise relative-angle signs differ.
        n_scene_ = static_cast<int>(scene.objects.size());
        sr_.resize(n_scene_);
        stheta_.resize(n_scene_);
        shas_angle_.resize(n_scene_);
        slabel_.resize(n_scene_);
        std::unordered_map<Label, int> label_ids;
        auto label_id = [&](const Label& l) {
            auto [it, inserted] = label_ids.emplace(l, static_cast<int>(label_ids.size()));
            return it->second;
        };
        auto mapped = [&](const Label& l) -> const Label& {
            if (!params_.label_map) return l;
            auto it = params_.label_map->find(l);
            if (it != params_.label_map->end()) return it->second;
            if (params_.strict_labels)
                throw std::runtime_error("match: unmapped label \"" + l + "\"");
            return l;
        };
        for (int k = 0; k < n_scene_; ++k) {
            const auto& o = scene.objects[k];
            const double dx = o.x - center.x;
            const double dy = (scene.height_px - o.y) - center.y;  // flip v
            const double r = std::hypot(dx, dy);
            sr_[k] = r;
            shas_angle_[k] = r >= eps_r_;
            stheta_[k] = shas_angle_[k] ? std::atan2(dy, dx) : 0.0;
            slabel_[k] = label_id(mapped(o.label));
        }

        n_db_ = static_cast<int>(db.objects().size());
        dx_.resize(n_db_);
        dy_.resize(n_db_);
        dlabel_.resize(n_db_);
        by_label_.assign(label_ids.size(), {});
        for (int m = 0; m < n_db_; ++m) {
            const auto& o = db.objects()[m];
            dx_[m] = o.x;
            dy_[m] = o.y;
            auto it = label_ids.find(mapped(o.label));
            dlabel_[m] = (it != label_ids.end()) ? it->second : -1;
            if (dlabel_[m] >= 0) by_label_[dlabel_[m]].push_back(m);
        }

        gate_region_ = db.region().expanded(params_.region_margin_m);
        tan_dtheta_ = std::tan(std::min(params_.delta_theta, 1.4));
        wide_angle_ = params_.delta_theta >= 1.4;  // fall back to exact atan2 test
        cos_dtol_ = std::cos(params_.delta_theta);
        build_distance_field();
    }

    template <typename Collector>
    void run(Collector& collect) {
        if (params_.sampled)
            run_sampled(collect);
        else
            run_exhaustive(collect);
    }

    const MatchCounters& counters() const { return counters_; }

private:
    // Coarse per-label lower bound on the distance to the nearest
    // database object.  One lookup tells whether a voter's whole
    // tolerance region is empty, which kills most hypotheses without
    // touching the spatial grid.
    void build_distance_field() {
        const Rect dom = db_.region().expanded(kFieldMarginM);
        field_cell_ = std::max(2.5, dom.diagonal() / 800.0);
        inv_field_cell_ = 1.0 / field_cell_;
        fx0_ = dom.min.x;
        fy0_ = dom.min.y;
        fnx_ = std::max(1, static_cast<int>(std::ceil(dom.width() / field_cell_)));
        fny_ = std::max(1, static_cast<int>(std::ceil(dom.height() / field_cell_)));
        fnxd_ = fnx_;
        fnyd_ = fny_;
        const double slack = field_cell_ * kSqrt1_2;  // half cell diagonal
        fcells_ = static_cast<std::size_t>(fnx_) * fny_;
        field_.assign(fcells_ * by_label_.size(),
                      std::numeric_limits<double>::infinity());
        for (std::size_t l = 0; l < by_label_.size(); ++l) {
            double* f = field_.data() + l * fcells_;
            for (int iy = 0; iy < fny_; ++iy) {
                const double cy = fy0_ + (iy + 0.5) * field_cell_;
                for (int ix = 0; ix < fnx_; ++ix) {
                    const double cx = fx0_ + (ix + 0.5) * field_cell_;
                    double best2 = std::numeric_limits<double>::infinity();
                    for (int m : by_label_[l]) {
                        const double ex = dx_[m] - cx, ey = dy_[m] - cy;
                        best2 = std::min(best2, ex * ex + ey * ey);
                    }
                    f[static_cast<std::size_t>(iy) * fnx_ + ix] =
                        std::max(0.0, std::sqrt(best2) - slack);
                }
            }
        }
    }

    // Outside the field domain the point is more than the domain margin
    // away from every object, so the margin itself is a valid bound.
    double field_lower_bound(int label, double x, double y) const {
        const double gx = (x - fx0_) * inv_field_cell_;
        const double gy = (y - fy0_) * inv_field_cell_;
        if (!(gx >= 0.0 && gy >= 0.0 && gx < fnxd_ && gy < fnyd_)) return kFieldMarginM;
        return field_[label * fcells_ + static_cast<std::size_t>(static_cast<int>(gy)) * fnx_ +
                      static_cast<int>(gx)];
    }

    // Per image-pair state reused across its database pairs.
    struct ImagePairCtx {
        double inv_sqrt_den = 0.0;
        double cos_b = 0.0, sin_b = 0.0;  // sin carries the dtheta sign flip
        // Origin as an affine map of the database pair:
        // origin = (I - A) p_a + A p_b with A = inv_sqrt_den * R(beta).
        double m00 = 0.0, m01 = 0.0, m10 = 0.0, m11 = 0.0;
        double r_i = 0.0;
        bool degenerate = false;
        // Consensus voters, ordered by ratio ascending: the smallest
        // tolerance regions are the least likely to contain a database
        // object, so they fail fastest.  Injective mode keeps index
        // order because its greedy assignment is order-sensitive.
        std::vector<int> ks;
        std::vector<int> klabel;
        std::vector<double> ratio, cos_dth, sin_dth;
        // Scale-free squared factors: multiplied by the squared anchor
        // radius they give the voter's radial band and the squared
        // bounding radius of its tolerance region.
        std::vector<double> lo2f, hi2f, rad2f;
        // Per-voter map G = (I - B) A with B the voter's scaled rotation
        // about the origin; the predicted point is q = p_a + G (p_b - p_a),
        // affine in both anchors, so per-anchor terms can be precomputed.
        std::vector<double> gxx, gxy, gyx, gyy;
        std::vector<char> has_angle;
    };

    void prepare_image_pair(int i, int j, ImagePairCtx& ctx) {
        const double rho = sr_[j] / sr_[i];
        const double dtheta = wrap_angle(stheta_[i] - stheta_[j]);
        const double den = 1.0 + rho * rho - 2.0 * rho * std::cos(dtheta);
        ctx.degenerate = den < kEpsDenominator;
        if (ctx.degenerate) return;
        ctx.inv_sqrt_den = 1.0 / std::sqrt(den);
        double cos_b = (den + 1.0 - rho * rho) / (2.0 * std::sqrt(den));
        cos_b = std::clamp(cos_b, -1.0, 1.0);
        const double s = (dtheta > 0.0) ? -1.0 : 1.0;
        ctx.cos_b = cos_b;
        ctx.sin_b = s * std::sqrt(std::max(0.0, 1.0 - cos_b * cos_b));
        ctx.m00 = ctx.inv_sqrt_den * ctx.cos_b;
        ctx.m01 = -ctx.inv_sqrt_den * ctx.sin_b;
        ctx.m10 = ctx.inv_sqrt_den * ctx.sin_b;
        ctx.m11 = ctx.inv_sqrt_den * ctx.cos_b;
        ctx.r_i = sr_[i];

        ctx.ks.clear();
        ctx.klabel.clear();
        ctx.ratio.clear();
        ctx.cos_dth.clear();
        ctx.sin_dth.clear();
        ctx.has_angle.clear();
        for (int k = 0; k < n_scene_; ++k) {
            if (k == i || k == j) continue;
            ctx.ks.push_back(k);
        }
        if (!params_.injective)
            std::sort(ctx.ks.begin(), ctx.ks.end(),
                      [&](int a, int b) { return sr_[a] != sr_[b] ? sr_[a] < sr_[b] : a < b; });
        ctx.lo2f.clear();
        ctx.hi2f.clear();
        ctx.rad2f.clear();
        ctx.gxx.clear();
        ctx.gxy.clear();
        ctx.gyx.clear();
        ctx.gyy.clear();
        for (int k : ctx.ks) {
            ctx.klabel.push_back(slabel_[k]);
            const double ratio = sr_[k] / sr_[i];
            ctx.ratio.push_back(ratio);
            const double dth = wrap_angle(stheta_[i] - stheta_[k]);
            ctx.cos_dth.push_back(std::cos(dth));
            ctx.sin_dth.push_back(std::sin(dth));
            ctx.has_angle.push_back(shas_angle_[k]);
            const double lof = std::max(0.0, ratio - params_.delta_r);
            const double hif = ratio + params_.delta_r;
            ctx.lo2f.push_back(lof * lof);
            ctx.hi2f.push_back(hif * hif);
            // Squared bounding radius of the annulus sector about its
            // predicted point (distance to the outer corner); for a voter
            // with no usable bearing the sector is the whole annulus and
            // the bound is its outer radius about the origin.
            ctx.rad2f.push_back(shas_angle_[k]
                                    ? hif * hif + ratio * ratio - 2.0 * hif * ratio * cos_dtol_
                                    : hif * hif);
            // B = ratio * R(dth); a voter with no usable bearing predicts
            // the origin itself (B = 0, G = A).
            const double bxx = shas_angle_[k] ? ratio * ctx.cos_dth.back() : 0.0;
            const double bxy = shas_angle_[k] ? ratio * ctx.sin_dth.back() : 0.0;
            ctx.gxx.push_back((1.0 - bxx) * ctx.m00 - bxy * ctx.m10);
            ctx.gxy.push_back((1.0 - bxx) * ctx.m01 - bxy * ctx.m11);
            ctx.gyx.push_back(bxy * ctx.m00 + (1.0 - bxx) * ctx.m10);
            ctx.gyy.push_back(bxy * ctx.m01 + (1.0 - bxx) * ctx.m11);
        }
    }

    template <typename Collector>
    void run_exhaustive(Collector& collect) {
        ImagePairCtx ctx;
        for (int i = 0; i < n_scene_; ++i) {
            if (!shas_angle_[i]) continue;  // near-center objects cannot anchor
            for (int j = i + 1; j < n_scene_; ++j) {
                if (!shas_angle_[j]) continue;
                prepare_image_pair(i, j, ctx);
                const auto& as = by_label_[slabel_[i]];
                const auto& bs = by_label_[slabel_[j]];
                const std::uint64_t n_pairs =
                    static_cast<std::uint64_t>(as.size()) * bs.size() -
                    (slabel_[i] == slabel_[j] ? as.size() : 0);
                if (ctx.degenerate) {
                    counters_.hypotheses_total += n_pairs;
                    counters_.pruned_degenerate += n_pairs;
                    continue;
                }
                // A p_b (origin term) and G_k p_b (per-voter predicted
                // point terms) for every candidate second anchor, shared
                // across all first anchors.  Voter terms are laid out one
                // contiguous column per candidate.
                const int K = static_cast<int>(ctx.ks.size());
                tbx_.resize(bs.size());
                tby_.resize(bs.size());
                cbx_.resize(bs.size() * K);
                cby_.resize(bs.size() * K);
                for (std::size_t q = 0; q < bs.size(); ++q) {
                    const double bx = dx_[bs[q]], by = dy_[bs[q]];
                    tbx_[q] = ctx.m00 * bx + ctx.m01 * by;
                    tby_[q] = ctx.m10 * bx + ctx.m11 * by;
                    for (int k = 0; k < K; ++k) {
                        cbx_[q * K + k] = ctx.gxx[k] * bx + ctx.gxy[k] * by;
                        cby_[q * K + k] = ctx.gyx[k] * bx + ctx.gyy[k] * by;
                    }
                }
                pax_.resize(K);
                pay_.resize(K);
                for (int a : as) {
                    const double ax = dx_[a], ay = dy_[a];
                    const double base_x = ax - (ctx.m00 * ax + ctx.m01 * ay);
                    const double base_y = ay - (ctx.m10 * ax + ctx.m11 * ay);
                    for (int k = 0; k < K; ++k) {
                        pax_[k] = ax - (ctx.gxx[k] * ax + ctx.gxy[k] * ay);
                        pay_[k] = ay - (ctx.gyx[k] * ax + ctx.gyy[k] * ay);
                    }
                    for (std::size_t q = 0; q < bs.size(); ++q) {
                        if (bs[q] == a) continue;
                        counters_.hypotheses_total++;
                        consider(i, j, ctx, a, bs[q],
                                 {base_x + tbx_[q], base_y + tby_[q]},
                                 cbx_.data() + q * K, cby_.data() + q * K, collect);
                    }
                }
            }
        }
    }

    template <typename Collector>
    void run_sampled(Collector& collect) {
        struct Eligible {
            int i, j;
        };
        std::vector<Eligible> pairs;
        for (int i = 0; i < n_scene_; ++i)
            for (int j = i + 1; j < n_scene_; ++j)
                if (shas_angle_[i] && shas_angle_[j]) pairs.push_back({i, j});
        if (pairs.empty()) return;

        std::mt19937_64 rng(params_.sampled->seed);
        std::vector<ImagePairCtx> ctxs(pairs.size());
        std::vector<char> prepared(pairs.size(), 0);
        for (std::uint64_t t = 0; t < params_.sampled->max_hypotheses; ++t) {
            const std::size_t pi = rng() % pairs.size();
            auto [i, j] = pairs[pi];
            if (!prepared[pi]) {
                prepare_image_pair(i, j, ctxs[pi]);
                prepared[pi] = 1;
            }
            ImagePairCtx& ctx = ctxs[pi];
            const auto& as = by_label_[slabel_[i]];
            const auto& bs = by_label_[slabel_[j]];
            if (as.empty() || bs.empty()) continue;
            const int a = as[rng() % as.size()];
            const int b = bs[rng() % bs.size()];
            if (a == b) continue;
            counters_.hypotheses_total++;
            if (ctx.degenerate) {
                counters_.pruned_degenerate++;
                continue;
            }
            const double ax = dx_[a], ay = dy_[a];
            const double bx = dx_[b], by = dy_[b];
            const int K = static_cast<int>(ctx.ks.size());
            pax_.resize(K);
            pay_.resize(K);
            cbx_.resize(K);
            cby_.resize(K);
            for (int k = 0; k < K; ++k) {
                pax_[k] = ax - (ctx.gxx[k] * ax + ctx.gxy[k] * ay);
                pay_[k] = ay - (ctx.gyx[k] * ax + ctx.gyy[k] * ay);
                cbx_[k] = ctx.gxx[k] * bx + ctx.gxy[k] * by;
                cby_[k] = ctx.gyx[k] * bx + ctx.gyy[k] * by;
            }
            const double vx = bx - ax, vy = by - ay;
            consider(i, j, ctx, a, b,
                     {ax + ctx.m00 * vx + ctx.m01 * vy, ay + ctx.m10 * vx + ctx.m11 * vy},
                     cbx_.data(), cby_.data(), collect);
        }
    }

    // pbx/pby are the second anchor's per-voter predicted-point terms;
    // the first anchor's terms are in pax_/pay_, filled by the caller.
    template <typename Collector>
    void consider(int i, int j, const ImagePairCtx& ctx, int a_idx, int b_idx,
                  const Point2& origin, const double* pbx, const double* pby,
                  Collector& collect) {
        if (!gate_region_.contains(origin)) {
            counters_.pruned_region++;
            return;
        }
        if (params_.prior_region && !prior_contains(*params_.prior_region, origin)) {
            counters_.pruned_prior++;
            return;
        }
        counters_.evaluated++;

        const double abx = dx_[b_idx] - dx_[a_idx], aby = dy_[b_idx] - dy_[a_idx];
        const double u2 =
            (abx * abx + aby * aby) * (ctx.inv_sqrt_den * ctx.inv_sqrt_den);
        if (!(u2 > 0.0)) return;  // coincident anchors

        const auto gate = collect.gate();
        const int n_ks = static_cast<int>(ctx.ks.size());
        if (2 + n_ks < gate.floor) return;

        // Preflight, pure arithmetic: a voter whose tolerance region is
        // provably empty by the distance field can never match.  The
        // predicted point is the sum of the two precomputed anchor terms
        // and the bounding radius a single scale-free multiply, so this
        // kills most hypotheses without a grid query, sqrt, or division.
        constexpr int kStackVoters = 64;
        double sbuf[3 * kStackVoters];
        char abuf[kStackVoters];
        double* qxa;
        char* alive;
        if (n_ks <= kStackVoters) {
            qxa = sbuf;
            alive = abuf;
        } else {
            scratch_.resize(3 * static_cast<std::size_t>(n_ks));
            alive_.resize(n_ks);
            qxa = scratch_.data();
            alive = alive_.data();
        }
        double* qya = qxa + n_ks;
        double* rad2a = qya + n_ks;

        int reachable = 2 + n_ks;
        const Rect& reg = db_.region();
        for (int kk = 0; kk < n_ks; ++kk) {
            const double qx = pax_[kk] + pbx[kk];
            const double qy = pay_[kk] + pby[kk];
            const double rad2 = u2 * ctx.rad2f[kk];
            qxa[kk] = qx;
            qya[kk] = qy;
            rad2a[kk] = rad2;
            const double lb = field_lower_bound(ctx.klabel[kk], qx, qy);
            bool dead = lb * lb > rad2;
            if (!dead && lb == kFieldMarginM) {
                // Far outside the field domain the margin saturates; fall
                // back to the exact distance to the region, which bounds
                // the distance to every object.
                const double ex = std::max({reg.min.x - qx, qx - reg.max.x, 0.0});
                const double ey = std::max({reg.min.y - qy, qy - reg.max.y, 0.0});
                dead = ex * ex + ey * ey > rad2;
            }
            alive[kk] = !dead;
            if (dead && --reachable < gate.floor) return;
        }

        // Consensus: each image object votes for its minimum-error
        // database candidate within the (delta_r, delta_theta) tolerances.
        matches_.clear();
        residuals_.clear();
        used_db_.clear();
        int n_matched = 2;
        int remaining = reachable - 2;
        double res_min = std::numeric_limits<double>::infinity();
        double res_max = -std::numeric_limits<double>::infinity();
        const double r_i_m = std::sqrt(u2);
        const double inv_r_i_m = 1.0 / r_i_m;
        // Reference vector of the first anchor about the origin; voter
        // target directions are rotations of it.  Its length (the anchor
        // radius) cancels in every direction predicate.
        const double wx = dx_[a_idx] - origin.x;
        const double wy = dy_[a_idx] - origin.y;

        for (int kk = 0; kk < n_ks; ++kk) {
            if (!alive[kk]) continue;
            if (n_matched + remaining < gate.floor) return;
            --remaining;
            const bool has_angle = ctx.has_angle[kk] != 0;
            const double tx = wx * ctx.cos_dth[kk] + wy * ctx.sin_dth[kk];
            const double ty = -wx * ctx.sin_dth[kk] + wy * ctx.cos_dth[kk];
            const int klabel = ctx.klabel[kk];
            const double lo2 = u2 * ctx.lo2f[kk], hi2 = u2 * ctx.hi2f[kk];
            const double ratio_k = ctx.ratio[kk];

            double best_e = std::numeric_limits<double>::infinity();
            int best_db = -1;
            auto probe = [&](int m) {
                if (m == a_idx || m == b_idx) return;
                if (dlabel_[m] != klabel) return;
                if (params_.injective &&
                    std::find(used_db_.begin(), used_db_.end(), m) != used_db_.end())
                    return;
                const double vx = dx_[m] - origin.x;
                const double vy = dy_[m] - origin.y;
                const double R2 = vx * vx + vy * vy;
                if (R2 < lo2 || R2 > hi2) return;
                double dot = 0.0, cross = 0.0;
                if (has_angle) {
                    dot = vx * tx + vy * ty;
                    cross = tx * vy - ty * vx;
                    if (!wide_angle_ &&
                        (dot <= 0.0 || std::abs(cross) >= tan_dtheta_ * dot))
                        return;
                }
                const double ratio_err = std::abs(ratio_k - std::sqrt(R2) * inv_r_i_m);
                if (ratio_err >= params_.delta_r) return;
                double ang_err = 0.0;
                if (has_angle) {
                    ang_err = std::abs(std::atan2(cross, dot));
                    if (ang_err >= params_.delta_theta) return;
                }
                const double e = ratio_err + ang_err;
                if (e < best_e) {
                    best_e = e;
                    best_db = m;
                }
            };
            db_.grid().for_each_near({qxa[kk], qya[kk]}, std::sqrt(rad2a[kk]), probe);

            if (best_db >= 0) {
                ++n_matched;
                matches_.push_back({ctx.ks[kk], best_db});
                residuals_.push_back(best_e);
                if (params_.injective) used_db_.push_back(best_db);
                res_min = std::min(res_min, best_e);
                res_max = std::max(res_max, best_e);
                // A winner needs score < gate.score_bound once it cannot
                // exceed the incumbent's count (always, in faithful mode).
                // The residual range lower-bounds the final population
                // std: std >= range / sqrt(2 m).
                if (gate.score_bound >= 0.0 && n_matched >= 4) {
                    const int max_reach = n_matched + remaining;
                    if (gate.always_bound || max_reach <= gate.floor) {
                        const int cap = std::max(2, max_reach - 2);
                        const double bound = (res_max - res_min) / std::sqrt(2.0 * cap);
                        if (bound >= gate.score_bound) return;
                    }
                }
            }
        }

        if (n_matched < params_.n_min) return;
        counters_.qualifying++;

        Hypothesis h;
        h.img_i = i;
        h.img_j = j;
        h.db_i = a_idx;
        h.db_j = b_idx;
        h.origin = origin;
        h.r_i_m = r_i_m;
        h.scale = r_i_m / ctx.r_i;
        h.matches = matches_;
        h.residuals = residuals_;
        h.n_matched = n_matched;
        h.score = population_std(residuals_);
        collect(std::move(h));
    }

    const MapDatabase& db_;
    MatchParams params_;
    double eps_r_ = 0.0;
    double img_diag_px_ = 0.0;
    double tan_dtheta_ = 0.0;
    bool wide_angle_ = false;
    Rect gate_region_;

    int n_scene_ = 0, n_db_ = 0;
    std::vector<double> sr_, stheta_;
    std::vector<char> shas_angle_;
    std::vector<int> slabel_, dlabel_;
    std::vector<double> dx_, dy_;
    std::vector<std::vector<int>> by_label_;

    double cos_dtol_ = 0.0;
    double field_cell_ = 5.0;
    double inv_field_cell_ = 0.2;
    double fx0_ = 0.0, fy0_ = 0.0;
    int fnx_ = 0, fny_ = 0;
    double fnxd_ = 0.0, fnyd_ = 0.0;  // bound comparisons stay in doubles
    std::size_t fcells_ = 0;
    std::vector<double> field_;  // label-major, fcells_ per label

    // scratch
    std::vector<double> tbx_, tby_, cbx_, cby_, pax_, pay_, scratch_;
    std::vector<char> alive_;
    std::vector<std::pair<int, int>> matches_;
    std::vector<double> residuals_;
    std::vector<int> used_db_;

    MatchCounters counters_;
};

struct Gate {
    int floor = 0;              // minimum useful N_matched
    double score_bound = -1;    // winning requires score < bound (if >= 0)
    bool always_bound = false;  // score bound applies at any N (faithful)
};

/// Keeps only the winner under the selection mode.
class BestCollector {
public:
    BestCollector(const MatchParams& params, int /*scene_size*/) : params_(params) {}

    Gate gate() const {
        Gate g;
        g.floor = params_.n_min;
        if (best_) {
            g.floor = std::max(g.floor, best_->n_matched);
            g.score_bound = best_->score;
            g.always_bound = params_.selection_mode == SelectionMode::faithful;
        }
        return g;
    }

    void operator()(Hypothesis&& h) {
        if (!best_) {
            best_ = std::move(h);
            return;
        }
        if (params_.selection_mode == SelectionMode::faithful) {
            if (h.n_matched >= best_->n_matched && h.score < best_->score) best_ = std::move(h);
            return;
        }
        if (h.n_matched > best_->n_matched ||
            (h.n_matched == best_->n_matched &&
             (h.score < best_->score ||
              (h.score == best_->score && h.order_key() < best_->order_key()))))
            best_ = std::move(h);
    }

    std::optional<Hypothesis>& best() { return best_; }

private:
    const MatchParams& params_;
    std::optional<Hypothesis> best_;
};

/// Keeps every qualifying hypothesis (positions only) plus the winner.
class AllCollector {
public:
    AllCollector(const MatchParams& params, int scene_size)
        : n_min_(params.n_min), best_(params, scene_size) {}

    // Keep every qualifying hypothesis: floor stays at n_min, no score
    // pruning.
    Gate gate() const { return Gate{n_min_, -1.0, false}; }

    void operator()(Hypothesis&& h) {
        all_.push_back({h.origin, h.n_matched, h.score});
        keys_.push_back(h.order_key());
        best_(std::move(h));
    }

    std::vector<Candidate>& all() { return all_; }
    std::vector<std::uint64_t>& keys() { return keys_; }
    BestCollector& best() { return best_; }

private:
    int n_min_;
    std::vector<Candidate> all_;
    std::vector<std::uint64_t> keys_;
    BestCollector best_;
};

}  // namespace detail

/// Algorithm core: hypothesis generation over image-pair / database-pair
/// correspondences, consensus counting under (delta_r, delta_theta), and
/// winner selection.  Rejected outcome (not an error) when no hypothesis
/// reaches n_min.
inline MatchOutcome match(const Scene& scene, const MapDatabase& db, const MatchParams& params) {
    params.validate();
    MatchOutcome out;
    if (scene.objects.size() < 2) return out;

    detail::Enumerator en(scene, db, params);
    detail::BestCollector collect(params, static_cast<int>(scene.objects.size()));
    en.run(collect);
    out.counters = en.counters();

    if (collect.best()) {
        Hypothesis& h = *collect.best();
        out.accepted = true;
        out.position = h.origin;
        out.n_matched = h.n_matched;
        out.score = h.score;
        out.scale = h.scale;
        out.candidates.push_back({h.origin, h.n_matched, h.score});
        out.best = std::move(h);
    }
    return out;
}

/// match() restricted to hypotheses whose origin lies inside the prior
/// region.
inline MatchOutcome match_with_prior(const Scene& scene, const MapDatabase& db,
                                     MatchParams params, const PriorRegion& prior) {
    params.prior_region = prior;
    return match(scene, db, params);
}

/// All qualifying hypotheses, deduplicated by origin proximity and sorted
/// by the selection ordering; first element equals match()'s winner.
inline std::vector<Candidate> rank_candidates(const Scene& scene, const MapDatabase& db,
                                              const MatchParams& params) {
    params.validate();
    if (scene.objects.size() < 2) return {};

    detail::Enumerator en(scene, db, params);
    detail::AllCollector collect(params, static_cast<int>(scene.objects.size()));
    en.run(collect);
    if (collect.all().empty()) return {};

    // Sort by (n desc, score asc, anchor order asc); in faithful mode the
    // chain winner is hoisted to the front afterwards.
    std::vector<std::size_t> idx(collect.all().size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto& all = collect.all();
    auto& keys = collect.keys();
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (all[a].n_matched != all[b].n_matched) return all[a].n_matched > all[b].n_matched;
        if (all[a].score != all[b].score) return all[a].score < all[b].score;
        return keys[a] < keys[b];
    });

    if (params.selection_mode == SelectionMode::faithful && collect.best().best()) {
        const Point2 w = collect.best().best()->origin;
        auto it = std::find_if(idx.begin(), idx.end(), [&](std::size_t a) {
            return all[a].position == w && all[a].n_matched == collect.best().best()->n_matched;
        });
        if (it != idx.end()) std::rotate(idx.begin(), it, it + 1);
    }

    std::vector<Candidate> out;
    for (std::size_t a : idx) {
        if (static_cast<int>(out.size()) >= params.top_k) break;
        bool merged = false;
        for (const auto& c : out)
            if (dist(c.position, all[a].position) <= params.merge_radius_m) {
                merged = true;
                break;
            }
        if (!merged) out.push_back(all[a]);
    }
    return out;
}

/// Height above ground from the winner's meters-per-pixel scale and the
/// camera focal length in pixels.
inline double estimate_height(const MatchOutcome& outcome, double f_px) {
    if (!outcome.accepted || !outcome.scale)
        throw std::runtime_error("estimate_height: outcome has no scale (rejected match)");
    return *outcome.scale * f_px;
}

}  // namespace mapmatch

#endif  // MAPMATCH_MATCHER_HPP_
