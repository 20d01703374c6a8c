#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "capcurv/cli.hpp"

using namespace capcurv;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const fs::path p = fs::path("cli_scratch") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  return j;
}

std::string strip_timestamp(std::string s) {
  const auto p = s.find("\"timestamp\"");
  REQUIRE(p != std::string::npos);
  const auto b = s.rfind('\n', p);
  const auto e = s.find('\n', p);
  s.erase(b, e - b);
  return s;
}

int run(std::vector<std::string> args) { return cli::run_cli(args); }

}  // namespace

TEST_CASE("atomic text writer creates directories and replaces content") {
  const std::string dir = scratch("atomic");
  const std::string path = dir + "/a/b/file.txt";
  write_text_atomic(path, "one\n");
  CHECK(slurp(path) == "one\n");
  write_text_atomic(path, "two\n");
  CHECK(slurp(path) == "two\n");
  CHECK(!fs::exists(path + ".tmp"));
}

TEST_CASE("field CSV round-trips bitwise") {
  const std::string dir = scratch("csv");
  auto g = make_cap_grid(M_PI / 3, 2, 16, 32);
  ScalarField h = ell_field(g);
  h.v = 2.0 * h.v + 0.05 * robin_bump(g, 2, false).v;

  const std::string path = dir + "/field.csv";
  write_field_csv(path, h);
  const ScalarField back = read_field_csv(path, g);
  CHECK(back.policy == BoundaryPolicy::none);
  CHECK((back.v - h.v).cwiseAbs().maxCoeff() == 0.0);  // %.17g is lossless
  // and rewriting the parsed field reproduces the file byte for byte
  CHECK(field_to_csv(back) == slurp(path));
}

TEST_CASE("field CSV reader rejects malformed and mismatched input") {
  const std::string dir = scratch("csvbad");
  auto g = make_cap_grid(M_PI / 3, 2, 16, 32);
  const ScalarField h = ell_field(g);
  const std::string good = field_to_csv(h);
  auto write_raw = [&](const std::string& name, const std::string& content) {
    write_text_atomic(dir + "/" + name, content);
    return dir + "/" + name;
  };

  CHECK_THROWS_AS(read_field_csv(write_raw("h.csv", "i,j,t1,t2,v\n" + good.substr(25)), g),
                  IoError);

  std::string dup = good + good.substr(good.find('\n') + 1,
                                       good.find('\n', good.find('\n') + 1) - good.find('\n'));
  CHECK_THROWS_AS(read_field_csv(write_raw("dup.csv", dup), g), IoError);

  std::string trunc = good.substr(0, good.rfind("15,31"));
  CHECK_THROWS_AS(read_field_csv(write_raw("trunc.csv", trunc), g), GridMismatchError);

  std::string bad_angle = good;
  bad_angle.replace(bad_angle.find("0.0327"), 6, "0.0999");
  CHECK_THROWS_AS(read_field_csv(write_raw("angle.csv", bad_angle), g), GridMismatchError);

  std::string bad_num = good;
  bad_num.replace(bad_num.rfind('\n', bad_num.size() - 2) + 1, std::string::npos,
                  "15,31,0.99,6.08,oops\n");
  CHECK_THROWS_AS(read_field_csv(write_raw("num.csv", bad_num), g), IoError);

  // same file against a different discretization
  auto g2 = make_cap_grid(M_PI / 3, 2, 24, 32);
  CHECK_THROWS_AS(read_field_csv(write_raw("ok.csv", good), g2), GridMismatchError);

  CHECK_THROWS_AS(read_field_csv(dir + "/absent.csv", g), IoError);
}

TEST_CASE("mesh text export lists vertices, quads, and the boundary loop") {
  auto g = make_cap_grid(M_PI / 3, 2, 8, 16);
  ScalarField h = ell_field(g);
  h.v *= 2.0;
  const std::string txt = mesh_to_text(embed(h));

  int nv = 0, nf = 0, nb = 0;
  std::istringstream in(txt);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++nv;
    if (line.rfind("f ", 0) == 0) {
      ++nf;
      std::istringstream fs_(line.substr(2));
      int id = 0, cnt = 0;
      while (fs_ >> id) {
        ++cnt;
        CHECK(id >= 1);
        CHECK(id <= 9 * 16);
      }
      CHECK(cnt == 4);
    }
    if (line.rfind("# boundary", 0) == 0) {
      ++nb;
      std::istringstream bs(line.substr(10));
      int id = 0, cnt = 0;
      while (bs >> id) {
        ++cnt;
        CHECK(id > 8 * 16);  // ring row indices only
        CHECK(id <= 9 * 16);
      }
      CHECK(cnt == 16);
    }
  }
  CHECK(nv == 9 * 16);
  CHECK(nf == 8 * 16);
  CHECK(nb == 1);
}

TEST_CASE("target specs build constant, bump, and file data") {
  const std::string dir = scratch("fspec");
  auto g = make_cap_grid(2.0 * M_PI / 5.0, 2, 16, 32);

  const ScalarField c = cli::parse_f_spec("const:2.5", g);
  CHECK(c.v.minCoeff() == 2.5);
  CHECK(c.v.maxCoeff() == 2.5);

  const ScalarField b = cli::parse_f_spec("even-bump:0.25", g);
  const double ct = 1.0 / std::tan(g->theta);
  const double t1 = g->th1[3], t2 = g->th2[5];
  const double expect =
      1.0 + 0.25 * std::sin(t1) * std::sin(t1) * std::exp(-ct * t1) * std::cos(2.0 * t2);
  CHECK(b.v[g->index(3, 5)] == Catch::Approx(expect).epsilon(1e-15));
  CHECK(evenness_defect(b) < 1e-13);
  CHECK(b.v.minCoeff() > 0.0);

  write_field_csv(dir + "/f.csv", b);
  const ScalarField fromfile = cli::parse_f_spec("file:" + dir + "/f.csv", g);
  CHECK((fromfile.v - b.v).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(cli::parse_f_spec("const:abc", g), ArgumentError);
  CHECK_THROWS_AS(cli::parse_f_spec("gauss:1", g), ArgumentError);
  CHECK_THROWS_AS(cli::parse_f_spec("const", g), ArgumentError);
}

TEST_CASE("grid specs parse strictly") {
  int a = 0, b = 0;
  cli::parse_grid_spec("24x32", a, b);
  CHECK(a == 24);
  CHECK(b == 32);
  CHECK_THROWS_AS(cli::parse_grid_spec("24X32", a, b), ArgumentError);
  CHECK_THROWS_AS(cli::parse_grid_spec("x32", a, b), ArgumentError);
  CHECK_THROWS_AS(cli::parse_grid_spec("24x", a, b), ArgumentError);
  CHECK_THROWS_AS(cli::parse_grid_spec("0x32", a, b), ArgumentError);
  CHECK_THROWS_AS(cli::parse_grid_spec("24x-2", a, b), ArgumentError);
  CHECK_THROWS_AS(cli::parse_grid_spec("24y32", a, b), ArgumentError);
}

TEST_CASE("config documents populate every field and reject unknown keys") {
  cli::RunConfig c;
  cli::apply_config(c, nlohmann::json{{"theta", 1.0},
                                      {"n", 2},
                                      {"k", 1},
                                      {"N1", 40},
                                      {"N2", 48},
                                      {"f", "const:2"},
                                      {"out", "somewhere"},
                                      {"seed", 99},
                                      {"solution", "s.csv"},
                                      {"t_samples", {0.01, 0.02, 0.04, 0.08}},
                                      {"maclaurin_count", 123},
                                      {"concavity_count", 45},
                                      {"probe_lambda", {1.0, 2.0}},
                                      {"probe_pattern", {2, 0, 1, 0}},
                                      {"newton_tol", 1e-9},
                                      {"max_newton", 12},
                                      {"t_step_init", 0.2},
                                      {"t_step_min", 1e-3},
                                      {"damping", 0.4},
                                      {"min_line_step", 1e-3},
                                      {"convexity_floor", 1e-7},
                                      {"enforce_even", false}});
  CHECK(c.theta == 1.0);
  CHECK(c.N1 == 40);
  CHECK(c.N2 == 48);
  CHECK(c.f == "const:2");
  CHECK(c.out == "somewhere");
  CHECK(c.seed == 99);
  CHECK(c.solution == "s.csv");
  CHECK(c.t_samples.size() == 4);
  CHECK(c.maclaurin_count == 123);
  CHECK(c.concavity_count == 45);
  CHECK(c.probe_lambda.size() == 2);
  CHECK(c.probe_pattern.size() == 4);
  CHECK(c.opts.newton_tol == 1e-9);
  CHECK(c.opts.max_newton == 12);
  CHECK(c.opts.t_step_init == 0.2);
  CHECK(c.opts.damping == 0.4);
  CHECK(c.opts.convexity_floor == 1e-7);
  CHECK(c.opts.enforce_even == false);

  CHECK_THROWS_AS(cli::apply_config(c, nlohmann::json{{"thet", 1.0}}), ArgumentError);
  CHECK_THROWS_AS(cli::apply_config(c, nlohmann::json::array({1, 2})), ArgumentError);
}

TEST_CASE("solve command recovers the round cap and writes its artifacts") {
  const std::string dir = scratch("solve_ok");
  const int rc = run({"solve", "--theta", "1.2566370614359172", "--grid", "24x32", "--k", "1",
                      "--f", "const:1", "--out", dir});
  CHECK(rc == 0);
  CHECK(fs::exists(dir + "/solution.csv"));
  CHECK(fs::exists(dir + "/mesh.txt"));

  const nlohmann::json rep = load_json(dir + "/report.json");
  CHECK(rep["status"] == "ok");
  CHECK(rep["N1"] == 24);
  CHECK(rep["N2"] == 32);
  CHECK(rep["k"] == 1);
  CHECK(rep["grid_checksum"].get<std::uint64_t>() != 0);
  CHECK(rep["final_residual"].get<double>() < 1e-9);
  CHECK(rep["t_history"].size() >= 2);
  CHECK(rep["t_history"].back().get<double>() == 1.0);
  CHECK(rep["residual_norms"].size() == rep["t_history"].size());
  CHECK(rep["convexity_margins"].size() == rep["t_history"].size());
  CHECK(rep["config"]["f"] == "const:1");
  CHECK(rep["failed_oracles"].empty());
  const auto& orc = rep["oracle_report"];
  CHECK(orc["estimates"]["u_bound_ok"].get<bool>());
  CHECK(orc["integral_condition_ok"].get<bool>());
  CHECK(orc["radii"]["cw_ok"].get<bool>());
  CHECK(orc["radii"]["rho_minus_theta"].get<double>() == Catch::Approx(2.0).margin(1e-3));
  CHECK(orc["radii"]["rho_plus_theta"].get<double>() == Catch::Approx(2.0).margin(1e-3));
  CHECK(orc["contact_angle"]["max_deviation"].get<double>() < 2e-3);

  // the stored solution is the double cap to discretization accuracy
  auto g = make_cap_grid(1.2566370614359172, 2, 24, 32);
  const ScalarField h = read_field_csv(dir + "/solution.csv", g);
  const ScalarField l = ell_field(g);
  CHECK((h.v - 2.0 * l.v).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("solve command rejects bad preconditions without artifacts") {
  const std::string dir = scratch("solve_bad");

  // odd target data with the evenness gate on
  auto g = make_cap_grid(M_PI / 3, 2, 16, 32);
  const ScalarField odd = make_field(g, BoundaryPolicy::none, 0.0, [](double, double t2) {
    return 1.0 + 0.3 * std::sin(t2);
  });
  write_field_csv(dir + "/odd.csv", odd);
  CHECK(run({"solve", "--theta", "1.0471975511965976", "--grid", "16x32", "--f",
             "file:" + dir + "/odd.csv", "--out", dir + "/r1"}) == 2);
  CHECK(!fs::exists(dir + "/r1/report.json"));

  CHECK(run({"solve", "--theta", "2.0", "--out", dir + "/r2"}) == 2);          // angle range
  CHECK(run({"solve", "--grid", "4x8", "--out", dir + "/r3"}) == 2);           // grid too small
  CHECK(run({"solve", "--f", "const:-1", "--grid", "16x32", "--theta", "1.0", "--out",
             dir + "/r4"}) == 2);                                              // positivity
  CHECK(run({"solve", "--f", "file:" + dir + "/absent.csv", "--grid", "16x32", "--theta", "1.0",
             "--out", dir + "/r5"}) == 2);                                     // missing file
}

TEST_CASE("solve command reports a collapsed continuation") {
  const std::string dir = scratch("solve_stuck");
  // a zero-iteration Newton budget cannot even hold the start of the homotopy
  write_text_atomic(dir + "/cfg.json",
                    nlohmann::json{{"theta", 1.0471975511965976},
                                   {"N1", 16},
                                   {"N2", 16},
                                   {"f", "const:1"},
                                   {"max_newton", 0},
                                   {"out", dir}}
                        .dump());
  const int rc = run({"solve", "--config", dir + "/cfg.json"});
  CHECK(rc == 3);
  const nlohmann::json rep = load_json(dir + "/report.json");
  CHECK(rep["status"] == "continuation_stuck");
  CHECK(rep["t_reached"].get<double>() < 1.0);
  CHECK(rep["last_step"].get<double>() > 0.0);
}

TEST_CASE("config file values merge under explicit flags") {
  const std::string dir = scratch("merge");
  write_text_atomic(dir + "/cfg.json",
                    nlohmann::json{{"theta", 1.0471975511965976},
                                   {"N1", 16},
                                   {"N2", 16},
                                   {"f", "const:1"},
                                   {"out", dir + "/from_file"}}
                        .dump());
  // the flag overrides the file's grid; the file's theta and out survive
  const int rc = run({"solve", "--config", dir + "/cfg.json", "--grid", "16x32"});
  CHECK(rc == 0);
  const nlohmann::json rep = load_json(dir + "/from_file/report.json");
  CHECK(rep["N1"] == 16);
  CHECK(rep["N2"] == 32);
  CHECK(rep["theta"].get<double>() == Catch::Approx(1.0471975511965976));

  write_text_atomic(dir + "/bad.json", "{\"thet\": 1.0}");
  CHECK(run({"solve", "--config", dir + "/bad.json"}) == 2);
  write_text_atomic(dir + "/types.json", "{\"theta\": \"pi\"}");
  CHECK(run({"solve", "--config", dir + "/types.json"}) == 2);
  write_text_atomic(dir + "/garbled.json", "{\"theta\": ");
  CHECK(run({"solve", "--config", dir + "/garbled.json"}) == 2);
  CHECK(run({"solve", "--config", dir + "/missing.json"}) == 2);
}

TEST_CASE("verify command closes the loop and names failing oracles") {
  const std::string dir = scratch("verify");
  REQUIRE(run({"solve", "--theta", "1.0471975511965976", "--grid", "24x32", "--f",
               "even-bump:0.2", "--out", dir}) == 0);

  CHECK(run({"verify", "--theta", "1.0471975511965976", "--grid", "24x32", "--f",
             "even-bump:0.2", "--solution", dir + "/solution.csv", "--out", dir}) == 0);
  const nlohmann::json ok = load_json(dir + "/verdict.json");
  CHECK(ok["status"] == "ok");
  CHECK(ok["oracle_report"]["pde_residual"]["ok"].get<bool>());
  CHECK(ok["oracle_report"]["robin_residual"]["ok"].get<bool>());
  CHECK(ok["oracle_report"]["evenness"]["ok"].get<bool>());

  // hard corruption: one value ten times larger leaves the convex cone
  auto g = make_cap_grid(1.0471975511965976, 2, 24, 32);
  ScalarField h = read_field_csv(dir + "/solution.csv", g);
  ScalarField hard = h;
  hard.v[g->index(12, 5)] *= 10.0;
  write_field_csv(dir + "/hard.csv", hard);
  CHECK(run({"verify", "--theta", "1.0471975511965976", "--grid", "24x32", "--f",
             "even-bump:0.2", "--solution", dir + "/hard.csv", "--out", dir + "/hard"}) == 4);
  const nlohmann::json hv = load_json(dir + "/hard/verdict.json");
  CHECK(hv["status"] == "oracle_failure");
  const auto hard_failed = hv["failed_oracles"].get<std::vector<std::string>>();
  REQUIRE(hard_failed.size() == 1);
  CHECK(hard_failed[0] == "convexity");

  // soft corruption: still convex, but no longer a solution
  ScalarField soft = h;
  soft.v[g->index(12, 5)] += 1e-3;
  write_field_csv(dir + "/soft.csv", soft);
  CHECK(run({"verify", "--theta", "1.0471975511965976", "--grid", "24x32", "--f",
             "even-bump:0.2", "--solution", dir + "/soft.csv", "--out", dir + "/soft"}) == 4);
  const nlohmann::json sv = load_json(dir + "/soft/verdict.json");
  const auto soft_failed = sv["failed_oracles"].get<std::vector<std::string>>();
  CHECK(std::find(soft_failed.begin(), soft_failed.end(), "pde_residual") != soft_failed.end());

  // wrong grid for the stored file
  CHECK(run({"verify", "--theta", "1.0471975511965976", "--grid", "16x32", "--f",
             "even-bump:0.2", "--solution", dir + "/solution.csv", "--out", dir}) == 2);
  // no solution given at all
  CHECK(run({"verify", "--theta", "1.0471975511965976", "--grid", "24x32", "--out", dir}) == 2);
}

TEST_CASE("verify command accepts the exact cap against its constant target") {
  const std::string dir = scratch("verify_ell");
  auto g = make_cap_grid(1.0471975511965976, 2, 24, 32);
  write_field_csv(dir + "/ell.csv", ell_field(g));
  CHECK(run({"verify", "--theta", "1.0471975511965976", "--grid", "24x32", "--f", "const:0.5",
             "--solution", dir + "/ell.csv", "--out", dir}) == 0);
}

TEST_CASE("counterexample command writes the expansion report and moment table") {
  const std::string dir = scratch("cx");
  const int rc = run({"counterexample", "--theta", "1.5707963267948966", "--grid", "32x64",
                      "--out", dir});
  CHECK(rc == 0);
  const nlohmann::json rep = load_json(dir + "/counterexample.json");
  CHECK(rep["status"] == "ok");
  CHECK(rep["pass"].get<bool>());
  CHECK(rep["minkowski_residuals"].size() == 4);
  CHECK(rep["fitted_c2"].get<double>() ==
        Catch::Approx(-M_PI * M_PI / 4.0).epsilon(0.02));
  CHECK(rep["target_c2"].get<double>() < 0.0);
  CHECK(rep["t_samples"].size() == rep["I_values"].size());

  const std::string csv = slurp(dir + "/moment.csv");
  CHECK(csv.rfind("t,I\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) ==
        rep["t_samples"].size() + 1);
}

TEST_CASE("counterexample command reports the admissibility window") {
  const std::string dir = scratch("cx_window");
  write_text_atomic(dir + "/cfg.json",
                    nlohmann::json{{"theta", 1.5707963267948966},
                                   {"N1", 24},
                                   {"N2", 32},
                                   {"t_samples", {0.01, 0.02, 0.04, 10.0}},
                                   {"out", dir}}
                        .dump());
  CHECK(run({"counterexample", "--config", dir + "/cfg.json"}) == 3);
  const nlohmann::json rep = load_json(dir + "/counterexample.json");
  CHECK(rep["status"] == "admissibility_window");
  CHECK(rep["t_max"].get<double>() > 0.0);
  CHECK(rep["t_max"].get<double>() < 10.0);

  // k = n degenerates the quotient: a usage error, not a window failure
  CHECK(run({"counterexample", "--theta", "1.0", "--grid", "24x32", "--k", "2", "--out",
             dir}) == 2);
}

TEST_CASE("inequality suites run deterministically and honor probes") {
  const std::string dir = scratch("ineq");
  write_text_atomic(dir + "/cfg.json",
                    nlohmann::json{{"maclaurin_count", 2000},
                                   {"concavity_count", 300},
                                   {"seed", 11},
                                   {"out", dir}}
                        .dump());
  CHECK(run({"inequalities", "--config", dir + "/cfg.json"}) == 0);
  const std::string first = strip_timestamp(slurp(dir + "/inequalities.json"));
  const nlohmann::json rep = load_json(dir + "/inequalities.json");
  CHECK(rep["maclaurin"]["violations"].get<int>() == 0);
  CHECK(rep["concavity"]["violations"].get<int>() == 0);
  CHECK(rep["maclaurin"]["count"].get<int>() == 2000);

  CHECK(run({"inequalities", "--config", dir + "/cfg.json"}) == 0);
  CHECK(strip_timestamp(slurp(dir + "/inequalities.json")) == first);

  // a probe outside the cone is a usage error, not an inequality violation
  write_text_atomic(dir + "/probe.json",
                    nlohmann::json{{"maclaurin_count", 0},
                                   {"concavity_count", 0},
                                   {"probe_lambda", {-1.0, -2.0, 3.0}},
                                   {"probe_pattern", {2, 0, 1, 0}},
                                   {"out", dir}}
                        .dump());
  CHECK(run({"inequalities", "--config", dir + "/probe.json"}) == 2);

  // an in-cone probe passes through and the suites still run
  write_text_atomic(dir + "/probe_ok.json",
                    nlohmann::json{{"maclaurin_count", 10},
                                   {"concavity_count", 10},
                                   {"probe_lambda", {1.0, 2.0, 3.0}},
                                   {"out", dir}}
                        .dump());
  CHECK(run({"inequalities", "--config", dir + "/probe_ok.json"}) == 0);
}

TEST_CASE("radii command reports the cap radii and flags non-convex input") {
  const std::string dir = scratch("radii");
  auto g = make_cap_grid(1.0471975511965976, 2, 24, 32);
  ScalarField h = ell_field(g);
  h.v *= 2.0;
  write_field_csv(dir + "/cap.csv", h);

  CHECK(run({"radii", "--theta", "1.0471975511965976", "--grid", "24x32", "--solution",
             dir + "/cap.csv", "--out", dir}) == 0);
  const nlohmann::json rep = load_json(dir + "/radii.json");
  CHECK(rep["status"] == "ok");
  CHECK(rep["radii"]["rho_minus_theta"].get<double>() == Catch::Approx(2.0).margin(1e-3));
  CHECK(rep["radii"]["rho_plus_theta"].get<double>() == Catch::Approx(2.0).margin(1e-3));
  CHECK(rep["radii"]["inradius"].get<double>() == Catch::Approx(0.5).margin(5e-3));
  CHECK(rep["radii"]["circumradius"].get<double>() ==
        Catch::Approx(2.0 * std::sin(1.0471975511965976)).margin(5e-3));
  CHECK(rep["radii"]["cw_ok"].get<bool>());
  CHECK(rep["radii"]["inner_relation_ok"].get<bool>());
  CHECK(rep["radii"]["outer_relation_ok"].get<bool>());
  CHECK(rep["ring_height_max"].get<double>() < 5e-3);

  ScalarField bad = h;
  bad.v[g->index(10, 3)] *= 10.0;
  write_field_csv(dir + "/bad.csv", bad);
  CHECK(run({"radii", "--theta", "1.0471975511965976", "--grid", "24x32", "--solution",
             dir + "/bad.csv", "--out", dir + "/bad"}) == 4);
  const nlohmann::json badrep = load_json(dir + "/bad/radii.json");
  CHECK(badrep["status"] == "oracle_failure");

  CHECK(run({"radii", "--theta", "1.0471975511965976", "--grid", "24x32", "--out", dir}) == 2);
}

TEST_CASE("command line errors exit with the usage code") {
  CHECK(run({}) == 2);
  CHECK(run({"frobnicate"}) == 2);
  CHECK(run({"solve", "--bogus"}) == 2);
  CHECK(run({"solve", "--grid", "24Y32", "--out", "cli_scratch/never"}) == 2);
  CHECK(run({"--help"}) == 0);
  CHECK(run({"solve", "--help"}) == 0);
}

TEST_CASE("reports are byte identical for identical configs") {
  const std::string dir = scratch("determinism");
  const std::vector<std::string> args = {"solve", "--theta", "1.0471975511965976", "--grid",
                                         "16x32", "--f",    "even-bump:0.2",       "--out", dir};
  REQUIRE(run(args) == 0);
  const std::string rep1 = strip_timestamp(slurp(dir + "/report.json"));
  const std::string sol1 = slurp(dir + "/solution.csv");
  const std::string mesh1 = slurp(dir + "/mesh.txt");
  REQUIRE(run(args) == 0);
  CHECK(strip_timestamp(slurp(dir + "/report.json")) == rep1);
  CHECK(slurp(dir + "/solution.csv") == sol1);
  CHECK(slurp(dir + "/mesh.txt") == mesh1);
}
