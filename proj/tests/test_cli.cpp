#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gapfield/cli.hpp"

using namespace gapfield;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = GAPFIELD_CONFIG_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("gapfield_cli_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void put(const std::string& p, const std::string& body) { std::ofstream(p, std::ios::binary) << body; }

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gapfield");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string parse_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    return e.what();
  }
  ADD_FAILURE() << "config parsed: " << text;
  return "";
}

const char* kSmallSweep = R"(# short two-disk sweep
[scene]
family = two-disks
r1 = 1
r2 = 1
eps = 1e-3
background = 0 1

[sweep]
vary = eps
min = 1e-4
max = 1e-2
points = 4
spread_limit = 3
)";

}  // namespace

TEST(Config, ShippedConfigsRoundTrip) {
  for (const char* name : {"two_disks", "case_a", "case_b", "case_b_r2", "case_c", "case_d", "coarse_verify"}) {
    RunConfig a = load_config(kConfigs + "/" + name + ".ini");
    std::string text = config_text(a);
    RunConfig b = parse_config(text);
    EXPECT_EQ(config_text(b), text) << name;
    EXPECT_EQ(b.has_sweep, a.has_sweep) << name;
    EXPECT_EQ(b.scene.params, a.scene.params) << name;
  }
}

TEST(Config, ValuesAreRead) {
  RunConfig rc = load_config(kConfigs + "/case_b_r2.ini");
  EXPECT_EQ(rc.scene.family, Family::B);
  EXPECT_DOUBLE_EQ(rc.scene.params.at("r2"), 0.05);
  EXPECT_EQ(rc.sweep.vary, "r2");
  EXPECT_DOUBLE_EQ(rc.sweep.ties.at("eps1"), 2e-4);
  EXPECT_EQ(rc.sweep.points, 6);
  EXPECT_EQ(rc.sweep.quantities, (std::vector<std::string>{"diff1", "grad1", "grad2"}));
  RunConfig coarse = load_config(kConfigs + "/coarse_verify.ini");
  EXPECT_EQ(coarse.mesh.base_panels, 4);
  EXPECT_EQ(coarse.mesh.corner_levels, 0);
  EXPECT_EQ(coarse.verify.eps_grid, std::vector<double>{1e-3});
}

TEST(Config, ParseErrorsCarryLineAndColumn) {
  EXPECT_NE(parse_message("[scene]\nfamily = A\nr1 = one\n").find("line 3, column 6"), std::string::npos);
  EXPECT_NE(parse_message("[scene]\nfamily = hexagon\n").find("line 2, column 10"), std::string::npos);
  EXPECT_NE(parse_message("[scene]\nfamily = A\n  bogus = 1\n").find("line 3, column 3"), std::string::npos);
  EXPECT_NE(parse_message("[scene\n").find("line 1, column 1"), std::string::npos);
  EXPECT_NE(parse_message("[scene]\n[extras]\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_message("[scene]\nr1 = 1\nr1 = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(parse_message("r1 = 1\n").find("line 1"), std::string::npos);
  EXPECT_NE(parse_message("[mesh]\nbase_panels = 8\n").find("missing [scene]"), std::string::npos);
  EXPECT_NE(parse_message("[scene]\nfamily = A\n[sweep]\nmin = 1\n").find("lacks 'vary'"), std::string::npos);
  EXPECT_NE(parse_message("[scene]\nfamily = A\n[mesh]\nbase_panels = -3\n").find("non-negative"),
            std::string::npos);
}

TEST(Config, CommentsAndBlankLinesAreIgnored) {
  RunConfig rc = parse_config("# top\n\n[scene]   \n family = D # trailing\n eps = 1e-4\n\r\n");
  EXPECT_EQ(rc.scene.family, Family::D);
  EXPECT_DOUBLE_EQ(rc.scene.params.at("eps"), 1e-4);
  EXPECT_FALSE(rc.has_sweep);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"transmogrify"}).code, kExitUsage);
  EXPECT_EQ(cli({"solve"}).code, kExitUsage);
  EXPECT_EQ(cli({"solve", "/nonexistent/config.ini"}).code, kExitUsage);
  EXPECT_EQ(cli({"rates"}).code, kExitUsage);
  EXPECT_EQ(cli({"--version"}).code, kExitPass);
}

TEST(Cli, BadConfigExitsTwo) {
  TempDir d;
  put(d / "bad.ini", "[scene]\nfamily = A\nr1 = one\n");
  auto r = cli({"solve", d / "bad.ini", "--out", d / "out"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("line 3"), std::string::npos);
  EXPECT_FALSE(fs::exists(d / "out/solution.csv"));

  put(d / "overlap.ini", "[scene]\nfamily = two-disks\nr1 = 1\nr2 = 1\neps = -0.5\n");
  EXPECT_EQ(cli({"solve", d / "overlap.ini", "--out", d / "out"}).code, kExitUsage);
}

TEST(Cli, SweepWithoutSweepSectionExitsTwo) {
  TempDir d;
  put(d / "nosweep.ini", "[scene]\nfamily = two-disks\nr1 = 1\nr2 = 1\neps = 1e-3\n");
  put(d / "empty.ini", "[scene]\nfamily = two-disks\nr1 = 1\nr2 = 1\neps = 1e-3\n[sweep]\n");
  EXPECT_EQ(cli({"sweep", d / "nosweep.ini", "--out", d / "o"}).code, kExitUsage);
  auto r = cli({"sweep", d / "empty.ini", "--out", d / "o"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("empty"), std::string::npos);
  put(d / "zero.ini", std::string(kSmallSweep) + "");
  std::string z = slurp(d / "zero.ini");
  z.replace(z.find("points = 4"), 10, "points = 0");
  put(d / "zero.ini", z);
  EXPECT_EQ(cli({"sweep", d / "zero.ini", "--out", d / "o"}).code, kExitUsage);
}

TEST(Cli, SolveWritesSummaryAndRefusesToOverwrite) {
  TempDir d;
  std::string cfg = kConfigs + "/two_disks.ini";
  auto r = cli({"solve", cfg, "--out", d / "run"});
  ASSERT_EQ(r.code, kExitPass) << r.err;
  std::string sum = slurp(d / "run/summary.txt");
  for (const char* key : {"family=two-disks", "nodes=", "condition=", "constant_1=", "constant_2=", "difference_2_1=",
                          "gap_1_2_distance=", "gap_1_2_max_gradient=", "gap_1_2_argmax_fraction=",
                          "flux_residual_1=", "constancy_residual="})
    EXPECT_NE(sum.find(key), std::string::npos) << key;
  std::string sol = slurp(d / "run/solution.csv");
  EXPECT_NE(sol.find("\nnode,body,x,y,nu_x,nu_y,weight,sigma,dnu\n"), std::string::npos);

  auto again = cli({"solve", cfg, "--out", d / "run"});
  EXPECT_EQ(again.code, kExitRefused);
  EXPECT_NE(again.err.find("--force"), std::string::npos);
  EXPECT_EQ(slurp(d / "run/solution.csv"), sol);
  EXPECT_EQ(cli({"solve", cfg, "--out", d / "run", "--force"}).code, kExitPass);
  EXPECT_EQ(slurp(d / "run/solution.csv"), sol);
}

TEST(Cli, MeshCapTurnsIntoCheckFailure) {
  TempDir d;
  auto r = cli({"solve", kConfigs + "/two_disks.ini", "--out", d / "o", "--mesh-cap", "100"});
  EXPECT_EQ(r.code, kExitCheckFailed);
  EXPECT_NE(r.err.find("refinement-failure"), std::string::npos);
}

TEST(Cli, SweepRatesAndPlotAgree) {
  TempDir d;
  put(d / "small.ini", kSmallSweep);
  auto s = cli({"sweep", d / "small.ini", "--out", d / "a"});
  ASSERT_EQ(s.code, kExitPass) << s.err;
  std::string table = slurp(d / "a/sweep.csv");
  EXPECT_EQ(table.rfind("# wall_seconds=", 0), 0u);
  EXPECT_NE(table.find("row,eps,diff1,grad1,h_diff,psi_diff,scale_diff1,scale_grad1,scale_psi_diff,nodes,min_panel,condition,status,detail\n"), std::string::npos);
  EXPECT_NE(table.find("diff1.sandwich=bounded"), std::string::npos);

  auto rates = cli({"rates", "--from", d / "a/sweep.csv", "--out", d / "a"});
  ASSERT_EQ(rates.code, kExitPass) << rates.err;
  std::string rt = slurp(d / "a/rates.csv");
  EXPECT_EQ(rt.rfind("quantity,exponent,", 0), 0u);
  EXPECT_NE(rt.find("\ndiff1,"), std::string::npos);

  auto fromcsv = cli({"plot", "--from", d / "a/sweep.csv", "--out", d / "b"});
  ASSERT_EQ(fromcsv.code, kExitPass) << fromcsv.err;
  auto fresh = cli({"plot", d / "small.ini", "--out", d / "c"});
  ASSERT_EQ(fresh.code, kExitPass) << fresh.err;
  std::string svg = slurp(d / "b/diff1.svg");
  EXPECT_NE(svg.find("<svg xmlns"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(svg, slurp(d / "c/diff1.svg"));
  EXPECT_EQ(cli({"plot", "--from", d / "a/sweep.csv", "--out", d / "b"}).code, kExitRefused);
}

TEST(Cli, CorruptSweepTableExitsTwo) {
  TempDir d;
  put(d / "broken.csv", "row,eps,status,detail\n0,zz,ok,\n");
  auto r = cli({"rates", "--from", d / "broken.csv", "--out", d / "o"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
}

TEST(Cli, VerifyRejectsUnsupportedScenes) {
  TempDir d;
  EXPECT_EQ(cli({"verify", kConfigs + "/two_disks.ini", "--out", d / "o"}).code, kExitUsage);
}

TEST(Cli, CoarseVerifyFailsItsHealthChecks) {
  TempDir d;
  auto r = cli({"verify", kConfigs + "/coarse_verify.ini", "--out", d / "o"});
  EXPECT_EQ(r.code, kExitCheckFailed) << r.err;
  EXPECT_NE(r.out.find("check failed"), std::string::npos);
  std::string rep = slurp(d / "o/verify.csv");
  EXPECT_NE(rep.find(",fail"), std::string::npos);
}
