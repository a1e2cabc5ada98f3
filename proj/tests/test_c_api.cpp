#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "epg/epg.h"

namespace fs = std::filesystem;

namespace {

const std::string kExample1 = std::string(EPG_SCENARIO_DIR) + "/example1.json";

struct ScenarioDeleter {
  void operator()(epg_scenario* s) const { epg_scenario_free(s); }
};
struct TrajectoryDeleter {
  void operator()(epg_trajectory* t) const { epg_trajectory_free(t); }
};
using ScenarioPtr = std::unique_ptr<epg_scenario, ScenarioDeleter>;
using TrajectoryPtr = std::unique_ptr<epg_trajectory, TrajectoryDeleter>;

ScenarioPtr load_example1() {
  epg_scenario* s = nullptr;
  EXPECT_EQ(epg_scenario_load(kExample1.c_str(), &s), EPG_OK) << epg_last_error();
  return ScenarioPtr(s);
}

std::string take(char* s) {
  std::string out = s ? s : "";
  epg_string_free(s);
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("epg_c_api_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(CApi, VersionAndNullArguments) {
  EXPECT_STREQ(epg_version(), "1.0.0");
  EXPECT_EQ(epg_scenario_load(nullptr, nullptr), EPG_ERR_ARGUMENT);
  EXPECT_NE(std::string(epg_last_error()).find("null"), std::string::npos);
  EXPECT_EQ(epg_trajectory_size(nullptr), 0u);
  epg_scenario_free(nullptr);
  epg_trajectory_free(nullptr);
  epg_string_free(nullptr);
}

TEST(CApi, LoadErrorsCarryKindAndStatus) {
  epg_scenario* s = nullptr;
  EXPECT_EQ(epg_scenario_load("/nonexistent/x.json", &s), EPG_ERR_IO);
  EXPECT_EQ(s, nullptr);
  EXPECT_STREQ(epg_last_error_kind(), "IoError");
  EXPECT_EQ(epg_scenario_parse("{", &s), EPG_ERR_VALIDATION);
  EXPECT_STREQ(epg_last_error_kind(), "ParseError");
}

TEST(CApi, ErrorStateIsPerThread) {
  epg_scenario* s = nullptr;
  ASSERT_EQ(epg_scenario_parse("{", &s), EPG_ERR_VALIDATION);
  std::string other_kind = "unset";
  std::thread([&] { other_kind = epg_last_error_kind(); }).join();
  EXPECT_EQ(other_kind, "");
  EXPECT_STREQ(epg_last_error_kind(), "ParseError");
}

TEST(CApi, SetAndGetNumbersRevalidate) {
  auto s = load_example1();
  double v = 0.0;
  ASSERT_EQ(epg_scenario_get_number(s.get(), "design.upsilon", &v), EPG_OK);
  EXPECT_DOUBLE_EQ(v, 0.806);
  ASSERT_EQ(epg_scenario_set_number(s.get(), "design.upsilon", 0.316), EPG_OK);
  ASSERT_EQ(epg_scenario_get_number(s.get(), "design.upsilon", &v), EPG_OK);
  EXPECT_DOUBLE_EQ(v, 0.316);
  EXPECT_EQ(epg_scenario_set_number(s.get(), "design.c_star", 0.9), EPG_ERR_VALIDATION);
  EXPECT_STREQ(epg_last_error_kind(), "BudgetOutOfRange");
  ASSERT_EQ(epg_scenario_get_number(s.get(), "design.c_star", &v), EPG_OK);
  EXPECT_DOUBLE_EQ(v, 0.1);  // unchanged after the failed edit
  EXPECT_EQ(epg_scenario_get_number(s.get(), "design.missing", &v), EPG_ERR_ARGUMENT);
}

TEST(CApi, CloneIsIndependent) {
  auto s = load_example1();
  epg_scenario* raw = nullptr;
  ASSERT_EQ(epg_scenario_clone(s.get(), &raw), EPG_OK);
  ScenarioPtr c(raw);
  ASSERT_EQ(epg_scenario_set_number(c.get(), "run.t_end", 10.0), EPG_OK);
  double v = 0.0;
  epg_scenario_get_number(s.get(), "run.t_end", &v);
  EXPECT_DOUBLE_EQ(v, 4000.0);
}

TEST(CApi, DesignReportAndEmbedRoundTrip) {
  auto s = load_example1();
  char* text = nullptr;
  ASSERT_EQ(epg_design_report(s.get(), &text), EPG_OK);
  const auto report = nlohmann::json::parse(take(text));
  EXPECT_NEAR(report["beta_star"].get<double>(), 0.17, 1e-12);
  EXPECT_EQ(report["x_star"], nlohmann::json::parse("[0.5, 0.5]"));
  const auto dir = fresh_dir("embed");
  const auto path = (dir / "with_design.json").string();
  ASSERT_EQ(epg_design_embed(s.get(), path.c_str()), EPG_OK);
  epg_scenario* raw = nullptr;
  ASSERT_EQ(epg_scenario_load(path.c_str(), &raw), EPG_OK) << epg_last_error();
  ScenarioPtr again(raw);
  char* text2 = nullptr;
  ASSERT_EQ(epg_design_report(again.get(), &text2), EPG_OK);
  EXPECT_EQ(nlohmann::json::parse(take(text2)), report);
}

TEST(CApi, SaveAndToJson) {
  auto s = load_example1();
  char* text = nullptr;
  ASSERT_EQ(epg_scenario_to_json(s.get(), &text), EPG_OK);
  const auto tree = nlohmann::json::parse(take(text));
  EXPECT_EQ(tree["name"], "example1");
  const auto dir = fresh_dir("save");
  ASSERT_EQ(epg_scenario_save(s.get(), (dir / "s.json").string().c_str()), EPG_OK);
  EXPECT_EQ(nlohmann::json::parse(read(dir / "s.json")), tree);
  EXPECT_EQ(epg_scenario_save(s.get(), "/nonexistent/dir/s.json"), EPG_ERR_IO);
}

TEST(CApi, SimulateAndInspect) {
  auto s = load_example1();
  ASSERT_EQ(epg_scenario_set_number(s.get(), "run.t_end", 400.0), EPG_OK);
  epg_trajectory* raw = nullptr;
  ASSERT_EQ(epg_simulate(s.get(), &raw), EPG_OK) << epg_last_error();
  TrajectoryPtr t(raw);
  ASSERT_EQ(epg_trajectory_size(t.get()), 401u);
  epg_sample first{}, last{};
  ASSERT_EQ(epg_trajectory_sample(t.get(), 0, &first), EPG_OK);
  ASSERT_EQ(epg_trajectory_sample(t.get(), 400, &last), EPG_OK);
  EXPECT_EQ(first.t, 0.0);
  EXPECT_DOUBLE_EQ(first.B, 0.15);
  EXPECT_NEAR(first.lyapunov, 1.29928e-4, 1e-9);
  EXPECT_NEAR(first.reward_cost, 0.2, 1e-12);
  EXPECT_LT(last.lyapunov, first.lyapunov);
  EXPECT_EQ(epg_trajectory_sample(t.get(), 401, &last), EPG_ERR_ARGUMENT);
  char* text = nullptr;
  ASSERT_EQ(epg_trajectory_summary(t.get(), &text), EPG_OK);
  const auto summary = nlohmann::json::parse(take(text));
  EXPECT_GT(summary["peak_I_ratio"].get<double>(), 1.0);
  const auto dir = fresh_dir("simulate");
  ASSERT_EQ(epg_trajectory_write_csv(t.get(), (dir / "t.csv").string().c_str()), EPG_OK);
  ASSERT_EQ(epg_trajectory_write_svg(t.get(), (dir / "t.svg").string().c_str(), "run"), EPG_OK);
  const auto csv = read(dir / "t.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 402);
  EXPECT_NE(read(dir / "t.svg").find("</svg>"), std::string::npos);
}

TEST(CApi, IntegrationFailureMapsToStatus) {
  auto s = load_example1();
  ASSERT_EQ(epg_scenario_set_number(s.get(), "run.tol", 1e-30), EPG_OK);
  ASSERT_EQ(epg_scenario_set_number(s.get(), "run.abs_tol", 1e-30), EPG_OK);
  ASSERT_EQ(epg_scenario_set_number(s.get(), "run.t_end", 10.0), EPG_OK);
  epg_trajectory* raw = nullptr;
  EXPECT_EQ(epg_simulate(s.get(), &raw), EPG_ERR_INTEGRATION);
  EXPECT_STREQ(epg_last_error_kind(), "StepSizeUnderflow");
  EXPECT_EQ(raw, nullptr);
}

TEST(CApi, PiStarAndBoundTable) {
  auto s = load_example1();
  double v = 0.0;
  ASSERT_EQ(epg_pi_star(s.get(), 0.806, 0.5 * std::pow(0.806 * 0.02, 2), 1e-5, &v), EPG_OK);
  EXPECT_NEAR(v, 1.3436, 1e-3);
  const double ups[] = {0.316, 0.806};
  const epg_bound_options opts{1e-4, 100, 0, 0.0};
  const auto dir = fresh_dir("bound");
  char* text = nullptr;
  ASSERT_EQ(epg_bound_table(s.get(), ups, 2, &opts, (dir / "b.csv").string().c_str(),
                            (dir / "b.svg").string().c_str(), &text),
            EPG_OK)
      << epg_last_error();
  const auto rows = nlohmann::json::parse(take(text));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(rows[1]["pi_star"].get<double>(), 1.3436, 1e-3);
  EXPECT_LE(rows[1]["oracle_value"].get<double>(), rows[1]["pi_star"].get<double>() + 1e-4);
  EXPECT_TRUE(fs::exists(dir / "b.csv"));
  EXPECT_TRUE(fs::exists(dir / "b.svg"));
  EXPECT_EQ(epg_bound_table(s.get(), nullptr, 2, nullptr, nullptr, nullptr, nullptr), EPG_ERR_ARGUMENT);
}

TEST(CApi, SelectUpsilonAndFloor) {
  auto s = load_example1();
  double u = 0.0, bound = 0.0, floor = 0.0;
  ASSERT_EQ(epg_select_upsilon(s.get(), 1.344, &u, &bound, &floor), EPG_OK);
  EXPECT_LE(bound, 1.344);
  EXPECT_NEAR(floor, 1.1504, 1e-4);
  EXPECT_EQ(epg_select_upsilon(s.get(), 1.01, &u, nullptr, nullptr), EPG_ERR_PRECONDITION);
  EXPECT_STREQ(epg_last_error_kind(), "TargetBelowFloor");
}

TEST(CApi, SweepReportsFailedJobs) {
  const auto dir = fresh_dir("sweep");
  const nlohmann::json manifest = {
      {"base", kExample1},
      {"kind", "simulate"},
      {"jobs", {{{"name", "ok"}, {"patch", {{"run", {{"t_end", 50}}}}}},
                {{"name", "bad"}, {"patch", {{"design", {{"c_star", 0.9}}}}}}}}};
  std::ofstream(dir / "m.json") << manifest.dump();
  char* text = nullptr;
  EXPECT_EQ(epg_sweep((dir / "m.json").string().c_str(), (dir / "out").string().c_str(), 2, &text),
            EPG_ERR_INTEGRATION);
  const auto jobs = nlohmann::json::parse(take(text));
  ASSERT_EQ(jobs.size(), 2u);
  EXPECT_TRUE(jobs[0]["ok"].get<bool>());
  EXPECT_FALSE(jobs[1]["ok"].get<bool>());
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
}
