#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fdw/config.hpp"
#include "fdw/io.hpp"

namespace {

using namespace fdw;

const char* kMinimal = R"(
[problem]
alpha = 1.5
n_interior = 15
n_steps = 32
)";

std::string with(const std::string& extra) { return std::string(kMinimal) + extra; }

std::string error_of(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse_config_string(with("B = 0.3 + 0.1*x\ngamma = left\n[task]\nseed = 7\n"));
  EXPECT_DOUBLE_EQ(c.problem.alpha, 1.5);
  EXPECT_EQ(c.problem.n_interior, 15);
  EXPECT_DOUBLE_EQ(c.problem.T, 1.0);
  EXPECT_NEAR(c.problem.B(0.5), 0.35, 1e-15);
  EXPECT_EQ(c.problem.gamma, std::vector<Side>{Side::left});
  EXPECT_EQ(c.task.seed, 7u);
  EXPECT_EQ(c.echo.at("problem").at("B"), "0.3 + 0.1*x");
}

TEST(Config, CommentsAndBlankLinesIgnored) {
  const auto c = parse_config_string("# header\n\n[problem]   \nalpha = 1.2 ; trailing\n  n_steps=8\n");
  EXPECT_DOUBLE_EQ(c.problem.alpha, 1.2);
  EXPECT_EQ(c.problem.n_steps, 8);
}

TEST(Config, DiagnosticsCarryLineAndKey) {
  EXPECT_NE(error_of(with("foo = 1\n")).find("line 6"), std::string::npos);
  EXPECT_NE(error_of(with("foo = 1\n")).find("unknown key"), std::string::npos);
  EXPECT_NE(error_of(with("alpha = 1.7\n")).find("duplicate key"), std::string::npos);
  EXPECT_NE(error_of(with("[output]\n")).find("unknown section"), std::string::npos);
  EXPECT_NE(error_of("alpha = 1.5\n").find("outside of a section"), std::string::npos);
  EXPECT_NE(error_of(with("n_steps\n")).find("expected key = value"), std::string::npos);
  EXPECT_NE(error_of(with("B = 0.3 +* x\n")).find("[problem] B"), std::string::npos);
  EXPECT_NE(error_of(with("[task]\nmethod = lu\n")).find("method"), std::string::npos);
  EXPECT_NE(error_of(with("[task]\nlambda = -1\n")).find("lambda"), std::string::npos);
}

TEST(Config, RangeChecks) {
  EXPECT_NE(error_of("[problem]\nalpha = 2\n").find("alpha"), std::string::npos);
  EXPECT_NE(error_of("[problem]\nalpha = 1.5\nx_right = -1\n").find("x_right"), std::string::npos);
  EXPECT_NE(error_of(with("a = 0.5 - x\n")).find("a0"), std::string::npos);
  EXPECT_NE(error_of(with("[task]\ntau = 0.5\n")).find("tau"), std::string::npos);
  EXPECT_NE(error_of(with("n_modes = 99\n")).find("n_modes"), std::string::npos);
}

TEST(Config, TimeVariableOnlyInTimeExpressions) {
  EXPECT_NO_THROW(parse_config_string(with("g = 1 + sin(t)\n")));
  EXPECT_FALSE(error_of(with("B = t\n")).empty());
}

TEST(Config, SourceNeedsConsistentG0) {
  EXPECT_NE(error_of(with("f = sin(pi*x)\ng = 2 + t\ng0 = 1\n")).find("disagrees"), std::string::npos);
  const auto ok = parse_config_string(with("f = sin(pi*x)\ng = 2 + t\ng0 = 2\n"));
  EXPECT_TRUE(ok.problem.has_source());
  const auto p = build_problem(ok.problem);
  ASSERT_TRUE(p.source.has_value());
  EXPECT_DOUBLE_EQ(p.source->g0, 2.0);
  EXPECT_DOUBLE_EQ(p.source->g[p.grid.size() - 1], 3.0);
  const auto missing = parse_config_string(with("f = sin(pi*x)\ng = 2 + t\n"));
  EXPECT_THROW(build_problem(missing.problem), ConfigError);
  EXPECT_NO_THROW(build_problem(missing.problem, false));
}

TEST(Config, ResolvedEchoesDefaults) {
  const auto r = resolved(parse_config_string(kMinimal));
  EXPECT_EQ(r.at("problem").at("T"), "1");
  EXPECT_EQ(r.at("task").at("seed"), "42");
}

TEST(Config, PackagedConfigsLoad) {
  for (const char* f : {"forward.ini", "adjoint.ini", "invert.ini", "ucp.ini"})
    EXPECT_NO_THROW(load_config(std::string(FDW_PACKAGED_DATA_DIR) + "/" + f)) << f;
  EXPECT_THROW(load_config("/nonexistent/x.ini"), ConfigError);
}

FluxTrace random_trace(const TimeGrid& g, const std::vector<Side>& sides) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  FluxTrace d(g, sides);
  for (auto& s : d.series)
    for (int m = 0; m < g.size(); ++m) s[m] = nd(rng) * 1e3;
  return d;
}

TEST(Io, FluxCsvRoundTripIsBitExact) {
  const TimeGrid g(0.7, 37);
  const std::vector<Side> sides{Side::left, Side::right};
  const auto d = random_trace(g, sides);
  std::istringstream in(flux_csv(d));
  const auto back = read_flux_csv(in, g, sides);
  for (std::size_t k = 0; k < sides.size(); ++k)
    for (int m = 0; m < g.size(); ++m) EXPECT_EQ(back.series[k][m], d.series[k][m]);
}

TEST(Io, FluxCsvRejectsMismatches) {
  const TimeGrid g(1.0, 8);
  const auto text = flux_csv(random_trace(g, {Side::right}));
  auto read = [&](const std::string& s, const TimeGrid& grid, std::vector<Side> sides) {
    std::istringstream in(s);
    return read_flux_csv(in, grid, sides);
  };
  EXPECT_THROW(read(text, TimeGrid(1.0, 16), {Side::right}), GridMismatch);
  EXPECT_THROW(read(text, TimeGrid(2.0, 8), {Side::right}), GridMismatch);
  EXPECT_THROW(read(text, g, {Side::left}), GridMismatch);
  EXPECT_THROW(read(text, g, {Side::left, Side::right}), GridMismatch);
  EXPECT_THROW(read("time,side,flux\n", g, {Side::right}), IoError);
  EXPECT_THROW(read("t,side,flux\n0,top,1\n", g, {Side::right}), IoError);
  EXPECT_THROW(read("t,side,flux\n0,right,abc\n", g, {Side::right}), IoError);
  EXPECT_THROW(read("", g, {Side::right}), IoError);
}

TEST(Io, FieldCsvIncludesBoundaryNodes) {
  const SpatialMesh mesh(0.0, 1.0, 3);
  const TimeGrid g(1.0, 2);
  SpaceTimeField u(mesh, g);
  const auto text = field_csv(u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 3 * 5);
  EXPECT_EQ(text.rfind("1,1,0\n"), text.size() - 6);
}

TEST(Io, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Io, OutputSetWritesFilesThenManifest) {
  const auto dir = std::filesystem::temp_directory_path() / ("fdw_io_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  OutputSet out(dir / "nested");
  out.add("a.csv", "x,value\n0,1\n");
  out.add("b.txt", "hello\n");
  out.phase("solve", 0.25);
  out.commit({{"problem", {{"alpha", "1.5"}}}}, "forward", "test");
  std::ifstream in(dir / "nested" / "manifest.json");
  const auto m = nlohmann::json::parse(in);
  EXPECT_EQ(m["command"], "forward");
  EXPECT_EQ(m["config"]["problem"]["alpha"], "1.5");
  ASSERT_EQ(m["files"].size(), 2u);
  EXPECT_EQ(m["files"][1]["sha256"], sha256_hex("hello\n"));
  EXPECT_DOUBLE_EQ(m["timings_seconds"]["solve"].get<double>(), 0.25);
  for (const auto& e : std::filesystem::directory_iterator(dir / "nested"))
    EXPECT_NE(e.path().filename().string().front(), '.') << "temporary file left behind";
  std::filesystem::remove_all(dir);
}

}  // namespace
