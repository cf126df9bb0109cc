#ifndef MAPMATCH_HARNESS_HPP_
#define MAPMATCH_HARNESS_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mapmatch/camera.hpp"
#include "mapmatch/database.hpp"
#include "mapmatch/matcher.hpp"
#include "mapmatch/scene.hpp"
#include "mapmatch/types.hpp"

namespace mapmatch {

/// One Monte Carlo configuration: noise levels, camera, matcher params,
/// and seeds.  Angle-valued fields carry their unit in the name.
struct EvalCase {
    std::string name;
    double sigma_att_deg = 0.0;
    double sigma_px = 0.0;
    double hfov_deg = 35.0;
    int n_trials = 500;
    double alt_m = 100.0;
    MatchParams params;
    std::uint64_t db_seed = 1;
    std::uint64_t noise_seed = 1;

    Rect region{{0.0, 0.0}, {250.0, 150.0}};
    int db_count = 215;
    LabelDistribution labels{{"obj", 1.0}};
    double grid_cell_m = kDefaultGridCellM;
    int width_px = 640;
    int height_px = 480;
    // Pose sampling inset from the region border, as a fraction of the
    // footprint half-extents (1 keeps footprints fully inside, 0 samples
    // the full region).
    double inset_frac = 1.0;
    double fp_threshold_m = 10.0;
    // Origin gate margin as a fraction of the footprint diagonal.
    double region_margin_frac = 0.2;

    void validate() const {
        if (n_trials < 1) throw std::invalid_argument("EvalCase: n_trials must be >= 1");
        if (name.empty()) throw std::invalid_argument("EvalCase: empty name");
        if (!(alt_m > 0.0)) throw std::invalid_argument("EvalCase: alt_m must be > 0");
        params.validate();
    }

    CameraModel camera() const {
        return {static_cast<double>(width_px), static_cast<double>(height_px),
                hfov_deg * kPi / 180.0};
    }
};

struct TrialRecord {
    int index = 0;
    double truth_x = 0.0, truth_y = 0.0;
    bool accepted = false;
    double est_x = 0.0, est_y = 0.0;
    double error_m = 0.0;  // horizontal distance, accepted trials only
    bool false_positive = false;
    int n_matched = 0;
    int in_view = 0;
    std::uint64_t hypotheses_evaluated = 0;
};

struct CaseResult {
    std::string name;
    int n_trials = 0;
    double sigma_att_deg = 0.0, sigma_px = 0.0, hfov_deg = 0.0;
    double error_std_m = std::numeric_limits<double>::quiet_NaN();      // accepted, non-FP
    double error_std_all_m = std::numeric_limits<double>::quiet_NaN();  // all accepted
    double error_std_x_m = std::numeric_limits<double>::quiet_NaN();
    double error_std_y_m = std::numeric_limits<double>::quiet_NaN();
    int n_rejected = 0;
    int n_accepted = 0;
    int n_false_positive = 0;  // among accepted
    double mean_in_view = 0.0;
    double mean_hypotheses = 0.0;
    double wall_time_s = 0.0;
    std::vector<TrialRecord> trials;

    double rejection_rate() const { return n_trials ? double(n_rejected) / n_trials : 0.0; }
    double fp_rate() const { return n_accepted ? double(n_false_positive) / n_accepted : 0.0; }
};

namespace detail {

inline double std_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace detail

/// Runs one Monte Carlo case: for each trial, sample a pose, project a
/// scene, run the matcher, and compare against the truth.  Trials are
/// independent, derive their seeds from (noise_seed, index), and may be
/// spread across workers without changing the result.
inline CaseResult run_case(const EvalCase& ec, int workers = 1) {
    ec.validate();
    const auto t_start = std::chrono::steady_clock::now();

    const CameraModel cam = ec.camera();
    const MapDatabase db = synth_database(ec.region, ec.db_count, ec.labels, ec.db_seed,
                                          ec.grid_cell_m);

    const Point2 half = footprint_half_extents(cam, ec.alt_m);
    const double fp_diag = 2.0 * std::hypot(half.x, half.y);
    MatchParams params = ec.params;
    params.region_margin_m = ec.region_margin_frac * fp_diag;

    Rect sample = ec.region;
    sample.min.x += ec.inset_frac * half.x;
    sample.max.x -= ec.inset_frac * half.x;
    sample.min.y += ec.inset_frac * half.y;
    sample.max.y -= ec.inset_frac * half.y;
    if (!sample.valid()) throw std::runtime_error("run_case: inset leaves no sampling area");

    std::vector<TrialRecord> trials(ec.n_trials);
    auto run_trial = [&](int t) {
        std::mt19937_64 pos_rng(mix_seed(ec.noise_seed, 2 * t));
        std::uniform_real_distribution<double> ux(sample.min.x, sample.max.x);
        std::uniform_real_distribution<double> uy(sample.min.y, sample.max.y);
        TruePose pose;
        pose.x = ux(pos_rng);
        pose.y = uy(pos_rng);
        pose.alt = ec.alt_m;

        NoiseModel noise;
        noise.sigma_att = ec.sigma_att_deg * kPi / 180.0;
        noise.sigma_px = ec.sigma_px;
        noise.seed = mix_seed(ec.noise_seed, 2 * t + 1);

        const Scene scene = project_scene(db, pose, cam, noise);
        const MatchOutcome out = match(scene, db, params);

        TrialRecord& rec = trials[t];
        rec.index = t;
        rec.truth_x = pose.x;
        rec.truth_y = pose.y;
        rec.in_view = static_cast<int>(scene.objects.size());
        rec.hypotheses_evaluated = out.counters.evaluated;
        rec.accepted = out.accepted;
        if (out.accepted) {
            rec.est_x = out.position.x;
            rec.est_y = out.position.y;
            rec.error_m = dist(out.position, {pose.x, pose.y});
            rec.false_positive = rec.error_m > ec.fp_threshold_m;
            rec.n_matched = out.n_matched;
        }
    };

    workers = std::max(1, workers);
    if (workers == 1) {
        for (int t = 0; t < ec.n_trials; ++t) run_trial(t);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int t = w; t < ec.n_trials; t += workers) run_trial(t);
            });
        for (auto& th : pool) th.join();
    }

    CaseResult res;
    res.name = ec.name;
    res.n_trials = ec.n_trials;
    res.sigma_att_deg = ec.sigma_att_deg;
    res.sigma_px = ec.sigma_px;
    res.hfov_deg = ec.hfov_deg;

    std::vector<double> err_good, err_all, ex_good, ey_good;
    double sum_in_view = 0.0, sum_hyp = 0.0;
    for (const auto& rec : trials) {
        sum_in_view += rec.in_view;
        sum_hyp += static_cast<double>(rec.hypotheses_evaluated);
        if (!rec.accepted) {
            res.n_rejected++;
            continue;
        }
        res.n_accepted++;
        err_all.push_back(rec.error_m);
        if (rec.false_positive) {
            res.n_false_positive++;
        } else {
            err_good.push_back(rec.error_m);
            ex_good.push_back(rec.est_x - rec.truth_x);
            ey_good.push_back(rec.est_y - rec.truth_y);
        }
    }
    res.error_std_m = detail::std_of(err_good);
    res.error_std_all_m = detail::std_of(err_all);
    res.error_std_x_m = detail::std_of(ex_good);
    res.error_std_y_m = detail::std_of(ey_good);
    res.mean_in_view = ec.n_trials ? sum_in_view / ec.n_trials : 0.0;
    res.mean_hypotheses = ec.n_trials ? sum_hyp / ec.n_trials : 0.0;
    res.trials = std::move(trials);
    res.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

// ---------------------------------------------------------------------------
// Report serialization.  Timing is excluded by default so identical runs
// produce byte-identical files.

namespace detail {

inline std::string fmt(double v) {
    if (std::isnan(v)) return "na";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace detail

inline void write_report_csv(const std::vector<CaseResult>& results, std::ostream& out,
                             bool include_timing = false) {
    out << "case,n_trials,sigma_att_deg,sigma_px,hfov_deg,error_std_m,error_std_all_m,"
           "error_std_x_m,error_std_y_m,n_rejected,rejection_rate,n_accepted,"
           "n_false_positive,fp_rate,mean_in_view,mean_hypotheses";
    if (include_timing) out << ",wall_time_s";
    out << "\n";
    for (const auto& r : results) {
        out << r.name << ',' << r.n_trials << ',' << detail::fmt(r.sigma_att_deg) << ','
            << detail::fmt(r.sigma_px) << ',' << detail::fmt(r.hfov_deg) << ','
            << detail::fmt(r.error_std_m) << ',' << detail::fmt(r.error_std_all_m) << ','
            << detail::fmt(r.error_std_x_m) << ',' << detail::fmt(r.error_std_y_m) << ','
            << r.n_rejected << ',' << detail::fmt(r.rejection_rate()) << ',' << r.n_accepted
            << ',' << r.n_false_positive << ',' << detail::fmt(r.fp_rate()) << ','
            << detail::fmt(r.mean_in_view) << ',' << detail::fmt(r.mean_hypotheses);
        if (include_timing) out << ',' << detail::fmt(r.wall_time_s);
        out << "\n";
    }
}

inline void write_report_json(const std::vector<CaseResult>& results, std::ostream& out,
                              bool include_timing = false) {
    nlohmann::json j;
    j["schema"] = "mapmatch-report-v1";
    auto& cases = j["cases"] = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json c;
        c["case"] = r.name;
        c["n_trials"] = r.n_trials;
        c["sigma_att_deg"] = r.sigma_att_deg;
        c["sigma_px"] = r.sigma_px;
        c["hfov_deg"] = r.hfov_deg;
        auto num = [](double v) {
            return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
        };
        c["error_std_m"] = num(r.error_std_m);
        c["error_std_all_m"] = num(r.error_std_all_m);
        c["error_std_x_m"] = num(r.error_std_x_m);
        c["error_std_y_m"] = num(r.error_std_y_m);
        c["n_rejected"] = r.n_rejected;
        c["rejection_rate"] = r.rejection_rate();
        c["n_accepted"] = r.n_accepted;
        c["n_false_positive"] = r.n_false_positive;
        c["fp_rate"] = r.fp_rate();
        c["mean_in_view"] = r.mean_in_view;
        c["mean_hypotheses"] = r.mean_hypotheses;
        if (include_timing) c["wall_time_s"] = r.wall_time_s;
        cases.push_back(std::move(c));
    }
    out << j.dump(2) << "\n";
}

inline void write_trials_csv(const std::vector<CaseResult>& results, std::ostream& out) {
    out << "case,trial,truth_x,truth_y,status,est_x,est_y,error_m,false_positive,n_matched,"
           "in_view,hypotheses_evaluated\n";
    for (const auto& r : results) {
        for (const auto& t : r.trials) {
            out << r.name << ',' << t.index << ',' << detail::fmt(t.truth_x) << ','
                << detail::fmt(t.truth_y) << ',' << (t.accepted ? "accepted" : "rejected") << ',';
            if (t.accepted)
                out << detail::fmt(t.est_x) << ',' << detail::fmt(t.est_y) << ','
                    << detail::fmt(t.error_m) << ',' << (t.false_positive ? 1 : 0) << ','
                    << t.n_matched;
            else
                out << ",,,,";
            out << ',' << t.in_view << ',' << t.hypotheses_evaluated << "\n";
        }
    }
}

// ---------------------------------------------------------------------------
// Run configuration: flat INI-style text, one [case NAME] section per
// case plus optional [defaults] and [output] sections.  Unknown keys are
// rejected.

struct RunConfig {
    std::vector<EvalCase> cases;
    std::string report_csv = "report.csv";
    std::string report_json = "report.json";
    std::string trials_csv;  // empty = not written
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline void apply_case_key(EvalCase& ec, const std::string& key, const std::string& value,
                           int line_no) {
    auto bad = [&](const std::string& why) {
        throw std::runtime_error("config line " + std::to_string(line_no) + ": " + why);
    };
    auto as_double = [&]() {
        try {
            return std::stod(value);
        } catch (...) {
            bad("not a number: " + value);
            return 0.0;
        }
    };
    auto as_int = [&]() { return static_cast<int>(std::llround(as_double())); };
    auto as_u64 = [&]() {
        try {
            return static_cast<std::uint64_t>(std::stoull(value));
        } catch (...) {
            bad("not an integer: " + value);
            return std::uint64_t{0};
        }
    };

    if (key == "sigma_att_deg") ec.sigma_att_deg = as_double();
    else if (key == "sigma_px") ec.sigma_px = as_double();
    else if (key == "hfov_deg") ec.hfov_deg = as_double();
    else if (key == "n_trials") ec.n_trials = as_int();
    else if (key == "alt_m") ec.alt_m = as_double();
    else if (key == "db_seed") ec.db_seed = as_u64();
    else if (key == "noise_seed") ec.noise_seed = as_u64();
    else if (key == "db_count") ec.db_count = as_int();
    else if (key == "grid_cell_m") ec.grid_cell_m = as_double();
    else if (key == "width_px") ec.width_px = as_int();
    else if (key == "height_px") ec.height_px = as_int();
    else if (key == "inset_frac") ec.inset_frac = as_double();
    else if (key == "fp_threshold_m") ec.fp_threshold_m = as_double();
    else if (key == "region_margin_frac") ec.region_margin_frac = as_double();
    else if (key == "n_min") ec.params.n_min = as_int();
    else if (key == "delta_r") ec.params.delta_r = as_double();
    else if (key == "delta_theta") ec.params.delta_theta = as_double();
    else if (key == "top_k") ec.params.top_k = as_int();
    else if (key == "merge_radius_m") ec.params.merge_radius_m = as_double();
    else if (key == "injective") ec.params.injective = (value == "true" || value == "1");
    else if (key == "selection") {
        if (value == "lexicographic") ec.params.selection_mode = SelectionMode::lexicographic;
        else if (value == "faithful") ec.params.selection_mode = SelectionMode::faithful;
        else bad("unknown selection mode: " + value);
    } else if (key == "region") {
        double x0, y0, x1, y1;
        char c;
        std::istringstream is(value);
        if (!(is >> x0 >> c >> y0 >> c >> x1 >> c >> y1)) bad("region must be x0,y0,x1,y1");
        ec.region = {{x0, y0}, {x1, y1}};
    } else if (key == "labels") {
        // label:weight pairs, comma separated
        ec.labels.clear();
        std::istringstream is(value);
        std::string item;
        while (std::getline(is, item, ',')) {
            const auto pos = item.find(':');
            if (pos == std::string::npos) bad("labels must be name:weight,...");
            ec.labels.push_back({trim(item.substr(0, pos)), std::stod(item.substr(pos + 1))});
        }
        if (ec.labels.empty()) bad("empty label list");
    } else {
        bad("unknown key: " + key);
    }
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    EvalCase defaults;
    enum class Section { none, defaults, output, kase } section = Section::none;
    EvalCase current;
    bool have_case = false;
    std::vector<std::string> names;

    auto flush = [&]() {
        if (!have_case) return;
        current.validate();
        cfg.cases.push_back(current);
        have_case = false;
    };

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": unterminated section header");
            const std::string header = detail::trim(line.substr(1, line.size() - 2));
            flush();
            if (header == "defaults") {
                section = Section::defaults;
            } else if (header == "output") {
                section = Section::output;
            } else if (header.rfind("case", 0) == 0) {
                section = Section::kase;
                current = defaults;
                current.name = detail::trim(header.substr(4));
                if (current.name.empty())
                    throw std::runtime_error("config line " + std::to_string(line_no) +
                                             ": case section needs a name");
                for (const auto& n : names)
                    if (n == current.name)
                        throw std::runtime_error("config: duplicate case name: " + current.name);
                names.push_back(current.name);
                have_case = true;
            } else {
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": unknown section [" + header + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));

        switch (section) {
            case Section::defaults:
                detail::apply_case_key(defaults, key, value, line_no);
                break;
            case Section::kase:
                detail::apply_case_key(current, key, value, line_no);
                break;
            case Section::output:
                if (key == "report_csv") cfg.report_csv = value;
                else if (key == "report_json") cfg.report_json = value;
                else if (key == "trials_csv") cfg.trials_csv = value;
                else
                    throw std::runtime_error("config line " + std::to_string(line_no) +
                                             ": unknown output key: " + key);
                break;
            case Section::none:
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": key outside any section");
        }
    }
    flush();
    if (cfg.cases.empty()) throw std::runtime_error("config: no cases defined");
    return cfg;
}

inline RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_run_config(in);
}

}  // namespace mapmatch

#endif  // MAPMATCH_HARNESS_HPP_
