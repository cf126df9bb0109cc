#ifndef MAPMATCH_ORACLE_HPP_
#define MAPMATCH_ORACLE_HPP_

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "mapmatch/database.hpp"
#include "mapmatch/geometry.hpp"
#include "mapmatch/matcher.hpp"
#include "mapmatch/scene.hpp"

namespace mapmatch {

/// Independent verification oracle: enumerates every image-pair to
/// database-pair correspondence, derives the implied similarity
/// transform directly from the two anchor equations (no circle
/// construction), and scores full-set consensus with the same tolerance
/// predicates as the matcher.  Quadratic-times-quadratic cost; guarded
/// to small instances and used only by tests.
inline MatchOutcome brute_force_oracle(const Scene& scene, const MapDatabase& db,
                                       const MatchParams& params) {
    params.validate();
    if (scene.objects.size() > 8)
        throw std::invalid_argument("brute_force_oracle: scene larger than 8 objects");
    if (db.objects().size() > 12)
        throw std::invalid_argument("brute_force_oracle: database larger than 12 objects");

    using C = std::complex<double>;
    const int n = static_cast<int>(scene.objects.size());
    const int m = static_cast<int>(db.objects().size());
    const Point2 center = scene.center();
    const double eps_r = kEpsRadiusFrac * std::hypot(scene.width_px, scene.height_px);

    auto mapped = [&](const Label& l) -> Label {
        if (!params.label_map) return l;
        auto it = params.label_map->find(l);
        if (it != params.label_map->end()) return it->second;
        if (params.strict_labels) throw std::runtime_error("oracle: unmapped label \"" + l + "\"");
        return l;
    };

    // Image objects in the y-up frame, relative to the image center.
    std::vector<C> img(n);
    std::vector<Label> ilabel(n);
    for (int k = 0; k < n; ++k) {
        const auto& o = scene.objects[k];
        img[k] = {o.x - center.x, (scene.height_px - o.y) - center.y};
        ilabel[k] = mapped(o.label);
    }
    std::vector<C> dbp(m);
    std::vector<Label> dlabel(m);
    for (int k = 0; k < m; ++k) {
        dbp[k] = {db.objects()[k].x, db.objects()[k].y};
        dlabel[k] = mapped(db.objects()[k].label);
    }

    const Rect gate_region = db.region().expanded(params.region_margin_m);

    MatchOutcome out;
    std::optional<Hypothesis> best;
    auto better = [&](const Hypothesis& h) {
        if (!best) return true;
        if (params.selection_mode == SelectionMode::faithful)
            return h.n_matched >= best->n_matched && h.score < best->score;
        if (h.n_matched != best->n_matched) return h.n_matched > best->n_matched;
        if (h.score != best->score) return h.score < best->score;
        return h.order_key() < best->order_key();
    };

    for (int i = 0; i < n; ++i) {
        if (std::abs(img[i]) < eps_r) continue;
        for (int j = i + 1; j < n; ++j) {
            if (std::abs(img[j]) < eps_r) continue;
            if (img[i] == img[j]) continue;
            for (int a = 0; a < m; ++a) {
                if (dlabel[a] != ilabel[i]) continue;
                for (int b = 0; b < m; ++b) {
                    if (b == a || dlabel[b] != ilabel[j]) continue;
                    out.counters.hypotheses_total++;

                    // Exact similarity from the two correspondences.
                    const C alpha = (dbp[b] - dbp[a]) / (img[j] - img[i]);
                    const C beta = dbp[a] - alpha * img[i];
                    const Point2 origin{beta.real(), beta.imag()};  // T(0)
                    if (!gate_region.contains(origin)) {
                        out.counters.pruned_region++;
                        continue;
                    }
                    if (params.prior_region && !prior_contains(*params.prior_region, origin)) {
                        out.counters.pruned_prior++;
                        continue;
                    }
                    out.counters.evaluated++;

                    const C ca{origin.x, origin.y};
                    const double r_i = std::abs(img[i]);
                    const double R_i = std::abs(dbp[a] - ca);
                    const double theta_i = std::arg(img[i]);
                    const double Theta_i = std::arg(dbp[a] - ca);

                    Hypothesis h;
                    h.img_i = i;
                    h.img_j = j;
                    h.db_i = a;
                    h.db_j = b;
                    h.origin = origin;
                    h.r_i_m = R_i;
                    h.scale = R_i / r_i;
                    std::vector<int> used;
                    for (int k = 0; k < n; ++k) {
                        if (k == i || k == j) continue;
                        const double r_k = std::abs(img[k]);
                        const bool has_angle = r_k >= eps_r;
                        const double ratio_k = r_k / r_i;
                        const double dth_k =
                            has_angle ? wrap_angle(theta_i - std::arg(img[k])) : 0.0;
                        double best_e = std::numeric_limits<double>::infinity();
                        int best_db = -1;
                        for (int c = 0; c < m; ++c) {
                            if (c == a || c == b || dlabel[c] != ilabel[k]) continue;
                            if (params.injective &&
                                std::find(used.begin(), used.end(), c) != used.end())
                                continue;
                            const double R_k = std::abs(dbp[c] - ca);
                            const double ratio_err = std::abs(ratio_k - R_k / R_i);
                            if (ratio_err >= params.delta_r) continue;
                            double ang_err = 0.0;
                            if (has_angle) {
                                const double dTH_k = wrap_angle(Theta_i - std::arg(dbp[c] - ca));
                                ang_err = std::abs(wrap_angle(dth_k - dTH_k));
                                if (ang_err >= params.delta_theta) continue;
                            }
                            const double e = ratio_err + ang_err;
                            if (e < best_e) {
                                best_e = e;
                                best_db = c;
                            }
                        }
                        if (best_db >= 0) {
                            h.matches.push_back({k, best_db});
                            h.residuals.push_back(best_e);
                            if (params.injective) used.push_back(best_db);
                        }
                    }
                    h.n_matched = 2 + static_cast<int>(h.matches.size());
                    if (h.n_matched < params.n_min) continue;
                    out.counters.qualifying++;
                    h.score = detail::population_std(h.residuals);
                    if (better(h)) best = std::move(h);
                }
            }
        }
    }

    if (best) {
        out.accepted = true;
        out.position = best->origin;
        out.n_matched = best->n_matched;
        out.score = best->score;
        out.scale = best->scale;
        out.candidates.push_back({best->origin, best->n_matched, best->score});
        out.best = std::move(*best);
    }
    return out;
}

}  // namespace mapmatch

#endif  // MAPMATCH_ORACLE_HPP_
