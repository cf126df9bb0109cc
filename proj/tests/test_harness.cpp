#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "mapmatch/harness.hpp"

using namespace mapmatch;

namespace {

EvalCase small_case(const std::string& name, int n_trials) {
    EvalCase ec;
    ec.name = name;
    ec.n_trials = n_trials;
    return ec;
}

std::string serialize(const std::vector<CaseResult>& results) {
    std::ostringstream report, trials;
    write_report_csv(results, report);
    write_trials_csv(results, trials);
    return report.str() + trials.str();
}

}  // namespace

TEST_CASE("noiseless trials localize essentially exactly") {
    EvalCase ec = small_case("clean", 8);
    const CaseResult res = run_case(ec);
    CHECK(res.n_trials == 8);
    CHECK(res.n_accepted == 8);
    CHECK(res.n_rejected == 0);
    CHECK(res.n_false_positive == 0);
    CHECK(res.error_std_m < 1e-6);
    CHECK(res.mean_in_view > 8);
    REQUIRE(res.trials.size() == 8);
    for (const auto& t : res.trials) {
        CHECK(t.accepted);
        CHECK(t.error_m < 1e-6);
        // Poses stay inside the region with the default full-footprint inset.
        CHECK(t.truth_x >= 31.0);
        CHECK(t.truth_x <= 219.0);
    }
}

TEST_CASE("results are identical for any worker count") {
    EvalCase ec = small_case("noisy", 12);
    ec.sigma_att_deg = 0.05;
    ec.sigma_px = 1.0;
    const std::string one = serialize({run_case(ec, 1)});
    const std::string three = serialize({run_case(ec, 3)});
    const std::string eight = serialize({run_case(ec, 8)});
    CHECK(one == three);
    CHECK(one == eight);
}

TEST_CASE("trial seeds depend on the trial index, not on execution order") {
    EvalCase ec = small_case("a", 4);
    const CaseResult r4 = run_case(ec);
    ec.n_trials = 2;
    const CaseResult r2 = run_case(ec);
    for (int t = 0; t < 2; ++t) {
        CHECK(r4.trials[t].truth_x == r2.trials[t].truth_x);
        CHECK(r4.trials[t].est_x == r2.trials[t].est_x);
    }
}

TEST_CASE("case validation") {
    EvalCase ec = small_case("", 5);
    CHECK_THROWS_AS(run_case(ec), std::invalid_argument);
    ec = small_case("x", 0);
    CHECK_THROWS_AS(run_case(ec), std::invalid_argument);
    ec = small_case("x", 1);
    ec.alt_m = 0.0;
    CHECK_THROWS_AS(run_case(ec), std::invalid_argument);
}

TEST_CASE("report formatting") {
    CaseResult r;
    r.name = "empty";
    r.n_trials = 0;
    SUBCASE("NaN statistics become na / null") {
        std::ostringstream csv;
        write_report_csv({r}, csv);
        CHECK(csv.str().find(",na,") != std::string::npos);
        std::ostringstream js;
        write_report_json({r}, js);
        CHECK(js.str().find("\"error_std_m\": null") != std::string::npos);
    }
    SUBCASE("timing is opt-in") {
        std::ostringstream without, with;
        write_report_csv({r}, without);
        write_report_csv({r}, with, true);
        CHECK(without.str().find("wall_time_s") == std::string::npos);
        CHECK(with.str().find("wall_time_s") != std::string::npos);
    }
}

TEST_CASE("config parsing") {
    SUBCASE("defaults flow into cases and can be overridden") {
        std::istringstream in(
            "[defaults]\n"
            "n_trials = 50\n"
            "sigma_px = 1\n"
            "labels = building:0.6, stadium:0.4\n"
            "[output]\n"
            "report_csv = out.csv\n"
            "trials_csv = trials.csv\n"
            "[case base]\n"
            "# inherits everything\n"
            "[case hot]\n"
            "sigma_px = 3\n"
            "hfov_deg = 45\n"
            "region = 0,0,300,200\n");
        const RunConfig cfg = parse_run_config(in);
        REQUIRE(cfg.cases.size() == 2);
        CHECK(cfg.cases[0].name == "base");
        CHECK(cfg.cases[0].n_trials == 50);
        CHECK(cfg.cases[0].sigma_px == 1.0);
        REQUIRE(cfg.cases[0].labels.size() == 2);
        CHECK(cfg.cases[0].labels[1].first == "stadium");
        CHECK(cfg.cases[1].name == "hot");
        CHECK(cfg.cases[1].sigma_px == 3.0);
        CHECK(cfg.cases[1].hfov_deg == 45.0);
        CHECK(cfg.cases[1].n_trials == 50);
        CHECK(cfg.cases[1].region.max.x == 300.0);
        CHECK(cfg.report_csv == "out.csv");
        CHECK(cfg.trials_csv == "trials.csv");
    }
    SUBCASE("matcher keys reach the params") {
        std::istringstream in(
            "[case x]\n"
            "n_min = 7\n"
            "delta_r = 0.15\n"
            "delta_theta = 0.25\n"
            "selection = faithful\n"
            "injective = true\n");
        const RunConfig cfg = parse_run_config(in);
        CHECK(cfg.cases[0].params.n_min == 7);
        CHECK(cfg.cases[0].params.delta_r == 0.15);
        CHECK(cfg.cases[0].params.delta_theta == 0.25);
        CHECK(cfg.cases[0].params.selection_mode == SelectionMode::faithful);
        CHECK(cfg.cases[0].params.injective);
    }
    SUBCASE("unknown key is rejected with its line number") {
        std::istringstream in("[case x]\nn_trails = 5\n");
        CHECK_THROWS_WITH_AS(parse_run_config(in), doctest::Contains("line 2"),
                             std::runtime_error);
    }
    SUBCASE("duplicate case names are rejected") {
        std::istringstream in("[case x]\nn_trials=1\n[case x]\nn_trials=2\n");
        CHECK_THROWS_WITH_AS(parse_run_config(in), doctest::Contains("duplicate"),
                             std::runtime_error);
    }
    SUBCASE("keys outside any section are rejected") {
        std::istringstream in("n_trials = 5\n");
        CHECK_THROWS_AS(parse_run_config(in), std::runtime_error);
    }
    SUBCASE("at least one case is required") {
        std::istringstream in("[defaults]\nn_trials = 5\n");
        CHECK_THROWS_WITH_AS(parse_run_config(in), doctest::Contains("no cases"),
                             std::runtime_error);
    }
    SUBCASE("invalid case parameters are caught at parse time") {
        std::istringstream in("[case x]\nn_trials = 0\n");
        CHECK_THROWS_AS(parse_run_config(in), std::invalid_argument);
    }
    SUBCASE("bad selection mode") {
        std::istringstream in("[case x]\nselection = best\n");
        CHECK_THROWS_WITH_AS(parse_run_config(in), doctest::Contains("selection"),
                             std::runtime_error);
    }
}
