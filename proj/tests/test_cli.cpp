// End-to-end tests of the command-line tool: exit-code contract, report
// determinism, file round-trips, and the documented flag forms. The binary
// path is injected at build time via NEEDLECOMP_CLI_PATH.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "needlecomp/needle_density.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct CliResult {
  int status = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string(NEEDLECOMP_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  char buf[4096];
  for (;;) {
    const std::size_t k = fread(buf, 1, sizeof(buf), pipe);
    if (k == 0) break;
    r.out.append(buf, k);
  }
  const int raw = pclose(pipe);
  REQUIRE(raw != -1);
  REQUIRE(WIFEXITED(raw));
  r.status = WEXITSTATUS(raw);
  return r;
}

nlohmann::json parse_report(const CliResult& r) {
  return nlohmann::json::parse(r.out);
}

std::filesystem::path scratch_dir() {
  const auto dir =
      std::filesystem::temp_directory_path() / "needlecomp_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string strip_timestamp(const std::string& report) {
  std::istringstream is(report);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line))
    if (line.find("\"timestamp\"") == std::string::npos) os << line << "\n";
  return os.str();
}

}  // namespace

TEST_CASE("bound command reports the closed-form radius") {
  auto r1 = run_cli("bound --K 0 --H 2 --N 3 --format json");
  REQUIRE(r1.status == 0);
  auto j1 = parse_report(r1);
  REQUIRE_THAT(j1["results"]["r"].get<double>(), WithinAbs(1.0, 1e-12));
  REQUIRE(j1["results"]["ball_condition"] == "zero_kappa_positive_lambda");
  REQUIRE(j1["passed"].get<bool>());
  REQUIRE(j1["command"] == "bound");
  REQUIRE(j1.contains("inputs_digest"));
  REQUIRE(j1.contains("defaults"));

  auto r2 = run_cli("bound --K 0 --H 1 --N 2 --format json");
  REQUIRE(r2.status == 0);
  REQUIRE_THAT(parse_report(r2)["results"]["r"].get<double>(),
               WithinAbs(1.0, 1e-12));

  auto r3 = run_cli("bound --K -1 --H 0 --N 2 --format json");
  REQUIRE(r3.status == 0);
  auto j3 = parse_report(r3);
  REQUIRE(j3["results"]["r"] == "inf");
  REQUIRE(j3["results"]["ball_condition"] == "fails");

  // Sign profile: positive at 0 and negative past the zero for a finite r.
  const std::string signs = j1["results"]["profile_signs"].get<std::string>();
  REQUIRE(signs.front() == '+');
  REQUIRE(signs.back() == '-');
}

TEST_CASE("usage and parse failures exit with code 1") {
  REQUIRE(run_cli("bound --K 0 --H 2 --N 1").status == 1);     // N <= 1
  REQUIRE(run_cli("bound --K 0 --H 2").status == 1);           // missing flag
  REQUIRE(run_cli("frobnicate").status == 1);                  // no such command
  REQUIRE(run_cli("bound --K 0 --H 2 --N 3 --format xml").status == 1);
  REQUIRE(run_cli("").status == 1);                            // no subcommand
  REQUIRE(run_cli("--help").status == 0);
  REQUIRE(run_cli("extremal --K -1 --H 0 --N 2 --out /tmp/x.csv").status ==
          1);  // infinite comparison radius
}

TEST_CASE("reports are deterministic apart from the timestamp") {
  auto a = run_cli("bound --K 1.5 --H 0.25 --N 2.5 --format json");
  auto b = run_cli("bound --K 1.5 --H 0.25 --N 2.5 --format json");
  REQUIRE(a.status == 0);
  REQUIRE(strip_timestamp(a.out) == strip_timestamp(b.out));

  auto c = run_cli("bound --K 1.5 --H 0.26 --N 2.5 --format json");
  REQUIRE(parse_report(a)["inputs_digest"] !=
          parse_report(c)["inputs_digest"]);
}

TEST_CASE("all three report formats carry the pass marker") {
  auto text = run_cli("bound --K 0 --H 2 --N 3");
  REQUIRE(text.status == 0);
  REQUIRE(text.out.find("passed") != std::string::npos);

  auto csv = run_cli("bound --K 0 --H 2 --N 3 --format csv");
  REQUIRE(csv.status == 0);
  REQUIRE(csv.out.rfind("key,value", 0) == 0);
  REQUIRE(csv.out.find("passed,true") != std::string::npos);
  REQUIRE(csv.out.find("results.r,1.0") != std::string::npos);
}

TEST_CASE("extremal output round-trips through needle-check") {
  const auto dir = scratch_dir();
  const std::string csv = (dir / "extremal.csv").string();

  auto gen = run_cli("extremal --K 2 --H 2 --N 3 --out " + csv +
                     " --format json");
  REQUIRE(gen.status == 0);
  auto jg = parse_report(gen);
  REQUIRE(jg["results"]["rows"].get<int>() == 257);
  REQUIRE_THAT(jg["results"]["value_at_zero"].get<double>(),
               WithinRel(1.0, 1e-12));

  auto cd = run_cli("needle-check --density " + csv +
                    " --K 2 --N 3 --mode cd --format json");
  REQUIRE(cd.status == 0);
  auto jc = parse_report(cd);
  REQUIRE(jc["passed"].get<bool>());
  // The recovered boundary curvature matches the H used to generate it.
  REQUIRE_THAT(jc["results"]["inner_mean_curvature"].get<double>(),
               WithinAbs(2.0, 1e-3));
  // The tangent-envelope zero bounds the support length r*. The envelope
  // slope comes from a one-sided difference quotient on the sampled grid and
  // the zero from a numeric root find, so parts-per-million is the realistic
  // agreement scale against the closed-form radius.
  auto jb = parse_report(run_cli("bound --K 2 --H 2 --N 3 --format json"));
  REQUIRE_THAT(jc["results"]["envelope"]["max_b"].get<double>(),
               WithinRel(jb["results"]["r"].get<double>(), 1e-6));

  auto mcp = run_cli("needle-check --density " + csv +
                     " --K 2 --N 3 --mode mcp");
  REQUIRE(mcp.status == 0);
}

TEST_CASE("stretched equality-case densities fail the check with code 2") {
  const auto dir = scratch_dir();
  const std::string csv = (dir / "stretch_src.csv").string();
  REQUIRE(run_cli("extremal --K 2 --H 2 --N 3 --out " + csv).status == 0);

  // Dilating the profile of a positive-curvature equality case makes it
  // strictly less concave than the comparison coefficients require.
  std::ifstream is(csv);
  needlecomp::NeedleDensity d = needlecomp::read_density_csv(is);
  std::vector<double> grid = d.grid();
  for (double& g : grid) g *= 1.3;
  needlecomp::NeedleDensity stretched(grid, d.values());
  const std::string bad = (dir / "stretched.csv").string();
  {
    std::ofstream os(bad);
    needlecomp::write_density_csv(os, stretched);
  }
  auto res = run_cli("needle-check --density " + bad +
                     " --K 2 --N 3 --mode cd --format json");
  REQUIRE(res.status == 2);
  auto j = parse_report(res);
  REQUIRE_FALSE(j["passed"].get<bool>());
  REQUIRE(j["results"]["concavity"]["worst_violation"].get<double>() > 1e-8);
}

TEST_CASE("corrupted density files are parse errors") {
  const auto dir = scratch_dir();
  const std::string bad = (dir / "corrupt.csv").string();
  {
    std::ofstream os(bad);
    os << "r,h\n-1,0.5\n-0.5,-0.25\n0,1\n";  // negative density value
  }
  REQUIRE(run_cli("needle-check --density " + bad + " --K 0 --N 2").status ==
          1);
  REQUIRE(run_cli("needle-check --density " + (dir / "absent.csv").string() +
                  " --K 0 --N 2")
              .status == 1);
}

TEST_CASE("model writes a space the verify command accepts") {
  const auto dir = scratch_dir();
  const std::string space = (dir / "disk.json").string();

  auto made = run_cli(
      "model --kind euclidean --N 2 --R 1.0 --radial-steps 48 "
      "--base circle:12 --pad-layers 4 --out " +
      space + " --format json");
  REQUIRE(made.status == 0);
  auto jm = parse_report(made);
  REQUIRE(jm["results"]["volume_cone_check"].get<bool>());
  REQUIRE(jm["results"]["points"].get<int>() == 1 + 48 * 12 + 4 * 12);
  // Disk of radius 1 plus four pad layers, flat 2-D volume element.
  REQUIRE_THAT(jm["results"]["total_mass"].get<double>(),
               WithinRel(0.5 * (1.0 + 4.0 / 48.0) *
                             (1.0 + 4.0 / 48.0) * 2.0 * 3.14159265358979324,
                         0.05));

  auto verified = run_cli("verify --space " + space +
                          " --omega-ball 0 1.0 --K 0 --N 2 --format json");
  REQUIRE(verified.status == 0);
  auto jv = parse_report(verified);
  REQUIRE(jv["passed"].get<bool>());
  REQUIRE_THAT(jv["results"]["inradius"].get<double>(),
               WithinAbs(1.0, 0.02));
  REQUIRE_THAT(jv["results"]["h_lower"].get<double>(), WithinAbs(1.0, 0.1));
  REQUIRE(std::abs(jv["results"]["margin"].get<double>()) < 0.05);

  SECTION("membership file and sublevel field give the same subset") {
    nlohmann::json js = nlohmann::json::parse(std::ifstream(space));
    const std::size_t n = js["n"].get<std::size_t>();
    const std::string omega_path = (dir / "omega.txt").string();
    const std::string field_path = (dir / "field.txt").string();
    {
      std::ofstream om(omega_path), fl(field_path);
      char buf[32];
      for (std::size_t i = 0; i < n; ++i) {
        const double di = js["metric"][i].get<double>();  // row 0: from apex
        om << (di <= 1.0 ? 1 : 0) << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", di);
        fl << buf << "\n";
      }
    }
    auto by_file = run_cli("verify --space " + space + " --omega " +
                           omega_path + " --K 0 --N 2 --format json");
    auto by_level = run_cli("verify --space " + space +
                            " --omega-ulevel 1.0 --field " + field_path +
                            " --K 0 --N 2 --format json");
    REQUIRE(by_file.status == 0);
    REQUIRE(by_level.status == 0);
    REQUIRE(parse_report(by_file)["results"] ==
            parse_report(by_level)["results"]);
    REQUIRE(parse_report(by_file)["results"]["inradius"] ==
            jv["results"]["inradius"]);
  }

  SECTION("an inflated curvature claim is rejected with exit code 2") {
    auto forced = run_cli("verify --space " + space +
                          " --omega-ball 0 1.0 --K 0 --N 2 "
                          "--H-override 5.0 --format json");
    REQUIRE(forced.status == 2);
    auto jf = parse_report(forced);
    REQUIRE_FALSE(jf["passed"].get<bool>());
    bool noted = false;
    for (const auto& w : jf["warnings"])
      noted = noted || w.get<std::string>().find("override") !=
                           std::string::npos;
    REQUIRE(noted);
  }

  SECTION("malformed verify invocations exit with code 1") {
    REQUIRE(run_cli("verify --space " + space + " --K 0 --N 2").status ==
            1);  // no omega form
    REQUIRE(run_cli("verify --space " + space +
                    " --omega-ball 0 1.0 --omega-ulevel 0.5 --K 0 --N 2")
                .status == 1);  // two omega forms
    REQUIRE(run_cli("verify --space " + space +
                    " --omega-ball 100000 1.0 --K 0 --N 2")
                .status == 1);  // center out of range
    const std::string shortom = (dir / "short.txt").string();
    {
      std::ofstream os(shortom);
      os << "1\n0\n";
    }
    REQUIRE(run_cli("verify --space " + space + " --omega " + shortom +
                    " --K 0 --N 2")
                .status == 1);  // wrong length
  }
}

TEST_CASE("model command validates its inputs") {
  const auto dir = scratch_dir();
  const std::string out = (dir / "unused.json").string();
  REQUIRE(run_cli("model --kind nonsuch --N 2 --R 1 --out " + out).status ==
          1);
  REQUIRE(run_cli("model --kind euclidean --N 2 --R 1 --base circle:bad "
                  "--out " +
                  out)
              .status == 1);
  // Radial resolution below the documented minimum.
  REQUIRE(run_cli("model --kind euclidean --N 2 --R 1 --radial-steps 2 "
                  "--out " +
                  out)
              .status == 1);
  // Dense JSON export cap: the sampled space exceeds the exportable size.
  REQUIRE(run_cli("model --kind euclidean --N 2 --R 1 --radial-steps 400 "
                  "--base circle:16 --out " +
                  out)
              .status == 1);
  // Spherical truncation cannot pass the polar distance.
  REQUIRE(run_cli("model --kind spherical --N 2 --R 3.5 --out " + out)
              .status == 1);
}

TEST_CASE("stability command certifies a positive perturbation budget") {
  auto res = run_cli("stability --K 0 --H 2 --N 3 --epsilon 0.01 "
                     "--format json");
  REQUIRE(res.status == 0);
  auto j = parse_report(res);
  REQUIRE(j["passed"].get<bool>());
  const double delta = j["results"]["delta"].get<double>();
  REQUIRE(delta > 0.0);
  REQUIRE(j["results"]["verified"].get<bool>());
  REQUIRE(j["results"]["r_perturbed"].get<double>() <=
          j["results"]["r_base"].get<double>() + 0.01);

  // Smaller slack, smaller admissible perturbation.
  auto tight = run_cli("stability --K 0 --H 2 --N 3 --epsilon 0.001 "
                       "--format json");
  REQUIRE(tight.status == 0);
  REQUIRE(parse_report(tight)["results"]["delta"].get<double>() < delta);

  // Infinite comparison radius and bad slack are usage errors.
  REQUIRE(run_cli("stability --K -1 --H 0 --N 2 --epsilon 0.01").status == 1);
  REQUIRE(run_cli("stability --K 0 --H 2 --N 3 --epsilon -1").status == 1);
}
