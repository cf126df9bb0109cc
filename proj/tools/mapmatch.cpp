// Command-line front end: database generation, scene simulation,
// single-shot matching, and batch evaluation.
//
// Exit status protocol: 0 success / accepted fix, 3 rejected match,
// 2 usage or validation error.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mapmatch/mapmatch.hpp"

namespace {

using namespace mapmatch;

Rect parse_region(const std::string& text) {
    // Either "WxH" (origin at 0,0) or "x0,y0,x1,y1".
    if (text.find('x') != std::string::npos && text.find(',') == std::string::npos) {
        const auto pos = text.find('x');
        const double w = std::stod(text.substr(0, pos));
        const double h = std::stod(text.substr(pos + 1));
        if (w <= 0 || h <= 0) throw std::runtime_error("region must be positive: " + text);
        return {{0.0, 0.0}, {w, h}};
    }
    double v[4];
    std::istringstream is(text);
    char c;
    if (!(is >> v[0] >> c >> v[1] >> c >> v[2] >> c >> v[3]))
        throw std::runtime_error("malformed region (want WxH or x0,y0,x1,y1): " + text);
    Rect r{{v[0], v[1]}, {v[2], v[3]}};
    if (!r.valid()) throw std::runtime_error("region max must dominate min: " + text);
    return r;
}

LabelDistribution parse_labels(const std::string& text) {
    LabelDistribution dist;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        const auto pos = item.find(':');
        if (pos == std::string::npos)
            dist.push_back({item, 1.0});
        else
            dist.push_back({item.substr(0, pos), std::stod(item.substr(pos + 1))});
    }
    if (dist.empty()) throw std::runtime_error("empty label distribution");
    return dist;
}

PriorRegion parse_prior(const std::string& text) {
    if (text.rfind("disc:", 0) == 0) {
        double cx, cy, r;
        char c;
        std::istringstream is(text.substr(5));
        if (!(is >> cx >> c >> cy >> c >> r))
            throw std::runtime_error("malformed prior disc (want disc:cx,cy,r): " + text);
        return Disc{{cx, cy}, r};
    }
    if (text.rfind("rect:", 0) == 0) return parse_region(text.substr(5));
    throw std::runtime_error("prior must start with disc: or rect:");
}

int cmd_gen_db(const std::string& region, int count, const std::string& labels,
               std::uint64_t seed, double cell, const std::string& out_path) {
    const MapDatabase db = synth_database(parse_region(region), count, parse_labels(labels),
                                          seed, cell);
    save_database_file(db, out_path);
    std::cerr << "wrote " << db.objects().size() << " objects to " << out_path << "\n";
    return 0;
}

int cmd_simulate(const std::string& db_path, TruePose pose, CameraModel cam, NoiseModel noise,
                 const std::string& out_path) {
    const MapDatabase db = load_database_file(db_path);
    const Scene scene = project_scene(db, pose, cam, noise);
    save_scene_file(scene, out_path);
    std::cerr << "wrote scene with " << scene.objects.size() << " objects to " << out_path
              << "\n";
    return 0;
}

int cmd_match(const std::string& db_path, const std::string& scene_path, MatchParams params,
              const std::string& prior, double region_margin_m, bool with_height, double hfov_deg,
              bool trace) {
    const MapDatabase db = load_database_file(db_path);
    const Scene scene = load_scene_file(scene_path);
    params.region_margin_m = region_margin_m;
    if (!prior.empty()) params.prior_region = parse_prior(prior);

    MatchOutcome out = match(scene, db, params);
    if (params.top_k > 1) {
        auto ranked = rank_candidates(scene, db, params);
        out.candidates = std::move(ranked);
    }

    nlohmann::json j;
    j["schema"] = "mapmatch-match-v1";
    j["status"] = out.accepted ? "accepted" : "rejected";
    if (out.accepted) {
        j["x"] = out.position.x;
        j["y"] = out.position.y;
        j["n_matched"] = out.n_matched;
        j["score"] = out.score;
        j["scale_m_per_px"] = *out.scale;
        if (with_height) {
            CameraModel cam{scene.width_px, scene.height_px, hfov_deg * kPi / 180.0};
            j["height_m"] = estimate_height(out, cam);
        }
        auto& cands = j["candidates"] = nlohmann::json::array();
        for (const auto& c : out.candidates)
            cands.push_back({{"x", c.position.x},
                             {"y", c.position.y},
                             {"n_matched", c.n_matched},
                             {"score", c.score}});
    }
    if (trace) {
        j["counters"] = {{"hypotheses_total", out.counters.hypotheses_total},
                         {"pruned_degenerate", out.counters.pruned_degenerate},
                         {"pruned_region", out.counters.pruned_region},
                         {"pruned_prior", out.counters.pruned_prior},
                         {"evaluated", out.counters.evaluated},
                         {"qualifying", out.counters.qualifying}};
    }
    std::cout << j.dump(2) << "\n";
    return out.accepted ? 0 : 3;
}

int cmd_evaluate(const std::string& config_path, int workers, bool timing) {
    const RunConfig cfg = parse_run_config_file(config_path);
    std::vector<CaseResult> results;
    bool any_error = false;
    for (const auto& ec : cfg.cases) {
        try {
            std::cerr << "running case " << ec.name << " (" << ec.n_trials << " trials)...\n";
            CaseResult r = run_case(ec, workers);
            std::cerr << "  " << r.name << ": err_std="
                      << (std::isnan(r.error_std_m) ? std::string("na")
                                                    : std::to_string(r.error_std_m))
                      << " rejected=" << r.n_rejected << "/" << r.n_trials
                      << " fp=" << r.n_false_positive << "/" << r.n_accepted << " ("
                      << r.wall_time_s << " s)\n";
            results.push_back(std::move(r));
        } catch (const std::exception& e) {
            std::cerr << "case " << ec.name << " failed: " << e.what() << "\n";
            any_error = true;
        }
    }

    {
        std::ofstream csv(cfg.report_csv);
        if (!csv) throw std::runtime_error("cannot write " + cfg.report_csv);
        write_report_csv(results, csv, timing);
    }
    {
        std::ofstream js(cfg.report_json);
        if (!js) throw std::runtime_error("cannot write " + cfg.report_json);
        write_report_json(results, js, timing);
    }
    if (!cfg.trials_csv.empty()) {
        std::ofstream tr(cfg.trials_csv);
        if (!tr) throw std::runtime_error("cannot write " + cfg.trials_csv);
        write_trials_csv(results, tr);
    }
    std::cerr << "report written to " << cfg.report_csv << " and " << cfg.report_json << "\n";
    return any_error ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Labeled point-pattern localization: match aerial scenes against a map "
                 "database of labeled objects"};
    app.require_subcommand(1);

    // gen-db
    auto* gen = app.add_subcommand("gen-db", "Synthesize a random object database");
    std::string region = "250x150", labels = "obj", out_path = "db.json";
    int count = 215;
    std::uint64_t seed = 1;
    double cell = mapmatch::kDefaultGridCellM;
    gen->add_option("--region", region, "Region, WxH or x0,y0,x1,y1 (meters)");
    gen->add_option("--count", count, "Number of objects")->check(CLI::NonNegativeNumber);
    gen->add_option("--labels", labels, "Label distribution, name:weight,...");
    gen->add_option("--seed", seed, "RNG seed");
    gen->add_option("--cell", cell, "Grid cell size (m)");
    gen->add_option("--out", out_path, "Output map file")->required();

    // simulate
    auto* sim = app.add_subcommand("simulate", "Project a simulated aerial scene from a pose");
    std::string db_path, scene_out = "scene.json";
    mapmatch::TruePose pose;
    pose.alt = 100.0;
    double hfov_deg = 35.0, roll_deg = 0.0, pitch_deg = 0.0, yaw_deg = 0.0;
    double sigma_att_deg = 0.0, sigma_px = 0.0;
    int width = 640, height = 480;
    std::uint64_t sim_seed = 1;
    sim->add_option("--db", db_path, "Map database file")->required();
    sim->add_option("--x", pose.x, "True east position (m)")->required();
    sim->add_option("--y", pose.y, "True north position (m)")->required();
    sim->add_option("--alt", pose.alt, "Height above ground (m)");
    sim->add_option("--roll-deg", roll_deg, "Roll (deg)");
    sim->add_option("--pitch-deg", pitch_deg, "Pitch (deg)");
    sim->add_option("--yaw-deg", yaw_deg, "Yaw (deg)");
    sim->add_option("--hfov-deg", hfov_deg, "Horizontal field of view (deg)");
    sim->add_option("--width", width, "Image width (px)");
    sim->add_option("--height", height, "Image height (px)");
    sim->add_option("--sigma-att-deg", sigma_att_deg, "Attitude error std (deg)");
    sim->add_option("--sigma-px", sigma_px, "Pixel error std (px)");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--out", scene_out, "Output scene file");

    // match
    auto* mat = app.add_subcommand("match", "Match a scene against a database");
    std::string match_db, match_scene, prior;
    mapmatch::MatchParams params;
    double region_margin_m = 0.0;
    std::string selection = "lexicographic";
    bool with_height = false, trace = false;
    double match_hfov_deg = 35.0;
    mat->add_option("--db", match_db, "Map database file")->required();
    mat->add_option("--scene", match_scene, "Scene file")->required();
    mat->add_option("--n-min", params.n_min, "Minimum matched count");
    mat->add_option("--delta-r", params.delta_r, "Radius-ratio tolerance");
    mat->add_option("--delta-theta", params.delta_theta, "Angle tolerance (rad)");
    mat->add_option("--top-k", params.top_k, "Number of candidates to emit");
    mat->add_option("--prior", prior, "Prior region, disc:cx,cy,r or rect:x0,y0,x1,y1");
    mat->add_option("--selection", selection, "lexicographic or faithful");
    mat->add_option("--region-margin-m", region_margin_m, "Origin gate margin (m)");
    mat->add_option("--merge-radius-m", params.merge_radius_m, "Candidate merge radius (m)");
    mat->add_flag("--injective", params.injective, "One-to-one database assignment");
    mat->add_flag("--height", with_height, "Also report height above ground from scale");
    mat->add_option("--hfov-deg", match_hfov_deg, "Camera FOV for --height (deg)");
    mat->add_flag("--trace", trace, "Include hypothesis counters in the output");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Run Monte Carlo evaluation cases from a config");
    std::string config_path;
    int workers = 1;
    bool timing = false;
    ev->add_option("config", config_path, "Run configuration file")->required();
    ev->add_option("--workers", workers, "Parallel trial workers");
    ev->add_flag("--timing", timing, "Include wall time in reports");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_db(region, count, labels, seed, cell, out_path);
        if (sim->parsed()) {
            pose.roll = roll_deg * mapmatch::kPi / 180.0;
            pose.pitch = pitch_deg * mapmatch::kPi / 180.0;
            pose.yaw = yaw_deg * mapmatch::kPi / 180.0;
            mapmatch::CameraModel cam{static_cast<double>(width), static_cast<double>(height),
                                      hfov_deg * mapmatch::kPi / 180.0};
            mapmatch::NoiseModel noise{sigma_att_deg * mapmatch::kPi / 180.0, sigma_px, sim_seed};
            return cmd_simulate(db_path, pose, cam, noise, scene_out);
        }
        if (mat->parsed()) {
            params.selection_mode = selection == "faithful"
                                        ? mapmatch::SelectionMode::faithful
                                        : mapmatch::SelectionMode::lexicographic;
            if (selection != "faithful" && selection != "lexicographic")
                throw std::runtime_error("unknown selection mode: " + selection);
            return cmd_match(match_db, match_scene, params, prior, region_margin_m, with_height,
                             match_hfov_deg, trace);
        }
        if (ev->parsed()) return cmd_evaluate(config_path, workers, timing);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
