#include <doctest.h>

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <random>

#include "moodyn/commands.hpp"
#include "moodyn/config.hpp"
#include "moodyn/io.hpp"
#include "moodyn/problems.hpp"

using namespace moodyn;
namespace fs = std::filesystem;

namespace {

std::string source_path(const std::string& rel) { return std::string(MOODYN_SOURCE_DIR) + "/" + rel; }

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("moodyn_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kMinimal = R"(
[experiment]
problem = mop-ex1

[params]
h = 0.01
T = 5

[initial]
x0 = 2.5, 0.5

[outputs]
channels = path-distance
)";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_SUITE("cli_io") {
  TEST_CASE("shipped configurations parse") {
    ExperimentConfig c = load_config(source_path("configs/fig2.cfg"));
    CHECK(c.problem == "mop-ex1");
    CHECK(c.params.alpha == 4);
    CHECK(c.params.beta == 0.5);
    CHECK(c.params.q == 0.875);
    CHECK(c.params.p == 1.75);
    CHECK(c.params.h == 0.01);
    CHECK(expand_cells(c).size() == 1);

    ExperimentConfig m = load_config(source_path("configs/fig2_mavd.cfg"));
    CHECK(m.system == System::Mavd);
    CHECK(m.params.beta == 0.0);
    CHECK(m.params.q == 1.0);

    ExperimentConfig f4 = load_config(source_path("configs/fig4.cfg"));
    std::vector<Cell> cells = expand_cells(f4);
    REQUIRE(cells.size() == 4);
    CHECK(cells[0].name == "q_0.3");
    CHECK(cells[3].params.q == 0.99);
    CHECK(cells[3].params.p == 1.1);

    ExperimentConfig f3 = load_config(source_path("configs/fig3.cfg"));
    CHECK(expand_cells(f3).size() == 4);
    CHECK(expand_cells(f3)[0].name == "p_0.25");
    CHECK_NOTHROW(load_config(source_path("configs/example25.cfg")));
  }

  TEST_CASE("minimal config gets defaults") {
    ExperimentConfig c = parse_config(kMinimal);
    CHECK(c.v0.size() == 2);
    CHECK(c.v0.norm() == 0.0);
    CHECK(c.formats.size() == 3);
    CHECK(c.channels == std::vector<std::string>{"path-distance"});
  }

  TEST_CASE("config errors are line numbered") {
    CHECK(error_of(replace(kMinimal, "problem = mop-ex1", "")).find("'problem'") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "h = 0.01", "h = fast")).rfind("line 6:", 0) == 0);
    CHECK(error_of(replace(kMinimal, "T = 5", "T = 5\nspeed = 3")).rfind("line 8: unknown key 'speed'", 0) == 0);
    CHECK(error_of(replace(kMinimal, "[outputs]", "[output]")).find("unknown section") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "x0 = 2.5, 0.5", "x0 = 2.5")).find("needs 2 entries") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "channels = path-distance", "channels = ")).find("missing value") !=
          std::string::npos);
    CHECK(error_of(replace(kMinimal, "channels = path-distance", "channels = movie")).find("unknown channel") !=
          std::string::npos);
    CHECK(error_of(replace(kMinimal, "problem = mop-ex1", "problem = mop-ex1\nsystem = mavd\n[params]\nbeta = 1"))
              .find("duplicate section") != std::string::npos);
    CHECK(error_of(std::string(kMinimal) + "[sweep]\nq = 0.3, 0.3\n").find("duplicate value") != std::string::npos);
    CHECK(error_of(std::string(kMinimal) + "[sweep]\np = 3\n").find("p out of (0,2]") != std::string::npos);
    CHECK(error_of(replace(kMinimal, "h = 0.01", "h = 0.01\nbeta = 0")).find("mavd") != std::string::npos);
  }

  TEST_CASE("sweep over q yields four cells") {
    ExperimentConfig c = parse_config(std::string(kMinimal) + "[sweep]\nq = 0.3, 0.6, 0.8, 0.99\n");
    CHECK(expand_cells(c).size() == 4);
    ExperimentConfig both = parse_config(std::string(kMinimal) + "[sweep]\nq = 0.3, 0.6\np = 0.5, 1, 1.5\n");
    std::vector<Cell> cells = expand_cells(both);
    CHECK(cells.size() == 6);
    CHECK(cells[1].name == "p_0.5_q_0.6");
  }

  TEST_CASE("trajectory CSV round-trips exactly") {
    DynParams P;
    P.T = 3;
    Trajectory traj = integrate(mop_ex2_problem(), P, Vec{{2, 3, 4, 5}}, Vec{{0.1, 0, 0, -0.3}});
    std::string csv = trajectory_to_csv(traj, 4, 2);
    CHECK(csv.rfind("t,x_1,x_2,x_3,x_4,v_1,v_2,v_3,v_4,theta_1,theta_2,flags\n", 0) == 0);
    Trajectory back = trajectory_from_csv(csv);
    REQUIRE(back.states.size() == traj.states.size());
    for (size_t k = 0; k < traj.states.size(); ++k) {
      CHECK(back.states[k].t == traj.states[k].t);
      CHECK((back.states[k].x - traj.states[k].x).norm() == 0.0);
      CHECK((back.states[k].v - traj.states[k].v).norm() == 0.0);
    }
    REQUIRE(back.weights.size() == traj.weights.size());
    for (size_t k = 0; k < traj.weights.size(); ++k) {
      CHECK((back.weights[k] - traj.weights[k]).norm() == 0.0);
      CHECK(back.flags[k] == traj.flags[k]);
    }
    CHECK(trajectory_to_csv(back, 4, 2) == csv);
  }

  TEST_CASE("shortest round-trip number formatting") {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 10000; ++k) {
      double v = std::bit_cast<double>(rng());
      if (!std::isfinite(v)) continue;
      std::string text = format_double(v);
      double back = 0.0;
      std::from_chars(text.data(), text.data() + text.size(), back);
      CHECK(back == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(100.0) == "100");
  }

  TEST_CASE("emit_svg basics") {
    PlotSeries s{"decay", {1, 10}, {1, 0.1}};
    std::string svg = emit_svg({s}, Axes{"t", "t", "y", true, true});
    CHECK(svg.find("width=\"800\" height=\"600\"") != std::string::npos);
    auto pos = svg.find("points=\"");
    REQUIRE(pos != std::string::npos);
    std::string pts = svg.substr(pos + 8, svg.find('"', pos + 8) - pos - 8);
    double x1, y1, x2, y2;
    REQUIRE(std::sscanf(pts.c_str(), "%lf,%lf %lf,%lf", &x1, &y1, &x2, &y2) == 4);
    // on a log-log canvas with equal decades per pixel span, slope -1 means dy/dx = -(height/decades_y)/(width/decades_x)
    CHECK(y2 > y1);
    CHECK(svg == emit_svg({s}, Axes{"t", "t", "y", true, true}));
    CHECK(svg.find("decay") != std::string::npos);

    CHECK_THROWS_AS(emit_svg({}, Axes{}), std::invalid_argument);
    CHECK_THROWS_AS(emit_svg({PlotSeries{"bad", {1, 2}, {1, 0}}}, Axes{"", "t", "y", false, true}),
                    std::invalid_argument);
    CHECK_THROWS_AS(emit_svg({PlotSeries{"back", {2, 1}, {1, 1}}}, Axes{}), std::invalid_argument);
  }

  TEST_CASE("simulate writes the channels and the SVG data matches the CSV") {
    fs::path out = scratch("fig2");
    ExperimentConfig c = load_config(source_path("configs/fig2.cfg"));
    CommandOptions opt;
    opt.out_dir = out.string();
    REQUIRE(cmd_simulate(c, opt) == kExitOk);
    for (const char* f : {"trajectory.csv", "merit.csv", "path_distance.csv", "energies.csv", "rates.csv",
                          "monitors.csv", "summary.json", "path_distance.svg", "trajectory.svg"})
      CHECK(fs::exists(out / f));

    // distance column of the CSV against the polyline data
    std::string csv = read_file((out / "path_distance.csv").string());
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<double> t, d;
    while (std::getline(in, line)) {
      auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
      t.push_back(std::stod(line.substr(0, c1)));
      d.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    }
    std::vector<PlotSeries> svg = parse_svg_data(read_file((out / "path_distance.svg").string()));
    REQUIRE(svg.size() == 1);
    REQUIRE(svg[0].x.size() == t.size());
    for (size_t k = 0; k < t.size(); ++k) {
      CHECK(svg[0].x[k] == t[k]);
      CHECK(svg[0].y[k] == d[k]);
    }
    // decreasing toward zero
    CHECK(d.back() < 1e-4);
    CHECK(d.back() < 1e-3 * d.front());

    auto summary = nlohmann::json::parse(read_file((out / "summary.json").string()));
    CHECK(summary["schema_version"] == "moodyn/1");
    CHECK(summary["runs"][0]["steps"] == 9900);
  }

  TEST_CASE("the unregularized run keeps its distance to the path") {
    fs::path out = scratch("mavd");
    ExperimentConfig c = load_config(source_path("configs/fig2_mavd.cfg"));
    c.channels = {"path-distance"};
    c.formats = {"json"};
    CommandOptions opt;
    opt.out_dir = out.string();
    REQUIRE(cmd_simulate(c, opt) == kExitOk);
    auto summary = nlohmann::json::parse(read_file((out / "summary.json").string()));
    CHECK(summary["runs"][0]["path_final"]["distance"].get<double>() > 0.1);
  }

  TEST_CASE("outputs are byte identical across runs") {
    ExperimentConfig c = load_config(source_path("configs/fig2.cfg"));
    fs::path a = scratch("det_a"), b = scratch("det_b");
    CommandOptions oa, ob;
    oa.out_dir = a.string();
    ob.out_dir = b.string();
    REQUIRE(cmd_simulate(c, oa) == kExitOk);
    REQUIRE(cmd_simulate(c, ob) == kExitOk);
    size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      CHECK(read_file(e.path().string()) == read_file((b / e.path().filename()).string()));
    }
    CHECK(files >= 10);
  }

  TEST_CASE("zero-length horizon writes a single trajectory row") {
    fs::path out = scratch("empty");
    ExperimentConfig c = parse_config(replace(replace(kMinimal, "T = 5", "T = 1"), "path-distance", "trajectory"));
    CommandOptions opt;
    opt.out_dir = out.string();
    REQUIRE(cmd_simulate(c, opt) == kExitOk);
    std::string csv = read_file((out / "trajectory.csv").string());
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(csv.substr(csv.find('\n') + 1) == "1,2.5,0.5,0,0,,,\n");
  }

  TEST_CASE("sweeps write one directory per cell") {
    fs::path out = scratch("sweep");
    ExperimentConfig c = parse_config(std::string(kMinimal) + "[sweep]\nq = 0.3, 0.6\n");
    CommandOptions opt;
    opt.out_dir = out.string();
    REQUIRE(cmd_simulate(c, opt) == kExitOk);
    CHECK(fs::exists(out / "q_0.3" / "path_distance.csv"));
    CHECK(fs::exists(out / "q_0.6" / "summary.json"));
    auto summary = nlohmann::json::parse(read_file((out / "summary.json").string()));
    CHECK(summary["runs"].size() == 2);
  }

  TEST_CASE("verify passes on the shipped run and flags a corrupted trajectory") {
    fs::path out = scratch("verify");
    ExperimentConfig c = load_config(source_path("configs/fig2.cfg"));
    c.channels = {"trajectory"};
    c.formats = {"csv", "json"};
    CommandOptions opt;
    opt.out_dir = out.string();
    REQUIRE(cmd_simulate(c, opt) == kExitOk);
    CHECK(cmd_verify(c, opt) == kExitOk);

    // scale the velocity columns by 10
    Trajectory traj = trajectory_from_csv(read_file((out / "trajectory.csv").string()));
    for (State& s : traj.states) s.v *= 10.0;
    write_file((out / "corrupt.csv").string(), trajectory_to_csv(traj, 2, 2));
    ExperimentConfig bad = c;
    bad.trajectory_file = (out / "corrupt.csv").string();
    fs::path out2 = scratch("verify_bad");
    opt.out_dir = out2.string();
    CHECK(cmd_verify(bad, opt) == kExitVerify);
    auto report = nlohmann::json::parse(read_file((out2 / "verify.json").string()));
    bool flagged = false;
    for (const auto& m : report["runs"][0]["monitors"])
      if (m["name"] == "velocity_vi") flagged = !m["passed"].get<bool>();
    CHECK(flagged);
  }

  TEST_CASE("verify skips the regularized-path checks without regularization") {
    fs::path out = scratch("verify_mavd");
    ExperimentConfig c = load_config(source_path("configs/fig2_mavd.cfg"));
    CommandOptions opt;
    opt.out_dir = out.string();
    CHECK(cmd_verify(c, opt) == kExitOk);
    auto report = nlohmann::json::parse(read_file((out / "verify.json").string()));
    for (const auto& m : report["runs"][0]["monitors"]) {
      std::string name = m["name"];
      bool skipped = m["skipped"];
      if (name == "merit_bound" || name == "path_distance" || name == "path_distance_literal")
        CHECK(skipped);
      else
        CHECK_FALSE(skipped);
    }
  }

  TEST_CASE("rates table") {
    fs::path out = scratch("rates");
    ExperimentConfig c = parse_config(replace(std::string(kMinimal), "T = 5", "T = 100") +
                                      "[sweep]\np = 1.75\nq = 0.4, 0.75, 0.8\n");
    CommandOptions opt;
    opt.out_dir = out.string();
    REQUIRE(cmd_rates(c, opt) == kExitOk);
    std::string csv = read_file((out / "rates.csv").string());
    CHECK(csv.find("p_1.75_q_0.4,1.75,0.4,4,0.5,q+1<p<2,") != std::string::npos);
    CHECK(csv.find("critical - no theoretical rate") != std::string::npos);
    auto report = nlohmann::json::parse(read_file((out / "rates.json").string()));
    CHECK(report["runs"][2]["theory"]["phi"].get<double>() == -1.75);
    CHECK(report["runs"][0]["theory"]["phi"].get<double>() == doctest::Approx(-0.8));
  }

  TEST_CASE("path command on the T-shaped example") {
    fs::path out = scratch("ex25");
    ExperimentConfig c = load_config(source_path("configs/example25.cfg"));
    CommandOptions opt;
    opt.out_dir = out.string();
    REQUIRE(cmd_path(c, opt) == kExitOk);
    auto report = nlohmann::json::parse(read_file((out / "path.json").string()));
    const auto& cf = report["runs"][0]["closed_form"];
    CHECK(cf["max_error"].get<double>() <= 1e-5);
    CHECK(cf["z2_min"].get<double>() >= 2.25);
    CHECK(cf["z2_max"].get<double>() <= 2.75);
  }

  TEST_CASE("thread cap comes from the environment") {
    ::setenv("MOODYN_THREADS", "3", 1);
    CHECK(sweep_threads() == 3);
    ::setenv("MOODYN_THREADS", "zero", 1);
    CHECK(sweep_threads() >= 1);
    ::unsetenv("MOODYN_THREADS");
  }
}
