#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <obleig/csvio.hpp>
#include <obleig/domain.hpp>
#include <obleig/errors.hpp>
#include <obleig/fields.hpp>
#include <obleig/operators.hpp>
#include <obleig/parabolic.hpp>
#include <obleig/plot.hpp>

using Catch::Approx;
using obleig::CsvTable;
using obleig::Domain;
using obleig::Point;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("csv tables round-trip including empty cells") {
  CsvTable t;
  t.header = {"a", "b", "c"};
  t.rows = {{"1", "2.5", "x"}, {"", "-3", "z"}, {"4", "5", ""}};
  TempFile f("unit_roundtrip.csv");
  obleig::write_csv(f.path, t);
  CsvTable back = obleig::read_csv(f.path);
  CHECK(back.header == t.header);
  REQUIRE(back.rows.size() == 3);
  CHECK(back.rows[0] == t.rows[0]);
  CHECK(back.rows[1] == t.rows[1]);
  CHECK(back.rows[2] == t.rows[2]);

  CHECK(back.column("b") == 1);
  CHECK_THROWS_AS(back.column("missing"), obleig::SchemaMismatch);
}

TEST_CASE("csv reader rejects what it cannot parse") {
  CHECK_THROWS_AS(obleig::read_csv("no_such_file_anywhere.csv"), obleig::ConfigError);
  TempFile f("unit_empty.csv");
  std::ofstream(f.path).close();
  CHECK_THROWS_AS(obleig::read_csv(f.path), obleig::SchemaMismatch);
}

TEST_CASE("sweep tables carry the pinned column layout") {
  obleig::SweepResult s;
  obleig::SweepPoint p;
  p.y = {1.0, -2.0};
  p.r = 4.0;
  p.h = 0.05;
  p.lambda = 1.4674011002723395;
  p.residual = 3e-12;
  p.iterations = 17;
  s.points = {p};

  CsvTable t = obleig::sweep_table(s);
  CHECK(t.header == std::vector<std::string>{"center_x", "center_y", "r", "h", "lambda",
                                             "residual", "iterations"});
  REQUIRE(t.rows.size() == 1);
  CHECK(std::stod(t.rows[0][4]) == Approx(p.lambda).epsilon(1e-11));
  CHECK(t.rows[0][6] == "17");

  obleig::GlobalSweepResult g;
  g.radii = {3.0};
  g.centres = {{0, 0}, {1, 0}};
  g.lambda = {{0.5, std::numeric_limits<double>::quiet_NaN()}};
  CsvTable gt = obleig::global_sweep_table(g);
  CHECK(gt.header == t.header);
  REQUIRE(gt.rows.size() == 2);
  CHECK(std::stod(gt.rows[0][4]) == Approx(0.5));
  CHECK(gt.rows[1][0] == "1");

  obleig::GrowthAudit a;
  a.radii = {2.0};
  a.masses = {1.9, 3.9};
  a.shell_masses = {2.0};
  a.ratios = {2.0 / 1.9};
  a.bound = 1.14;
  CsvTable at = obleig::growth_table(a);
  CHECK(at.header == std::vector<std::string>{"r", "inner_mass", "shell_mass", "ratio", "bound"});
  REQUIRE(at.rows.size() == 1);

  obleig::AverageSchedule sched;
  sched.radii = {10.0, 20.0};
  sched.means = {0.7, 0.8};
  CsvTable avg = obleig::averages_table(sched, nullptr);
  REQUIRE(avg.rows.size() == 2);
  CHECK(avg.rows[0][2].empty());
  CHECK(avg.rows[0][3].empty());
}

TEST_CASE("trajectory files round-trip bit for bit") {
  auto grid = std::make_shared<const obleig::TruncatedGrid>(
      obleig::TruncatedGrid::truncate(Domain::whole_space(1), {0, 0}, 2.0, 0.25));
  auto sys = obleig::assemble(
      grid, obleig::EllipticOperator::laplacian_plus(obleig::ScalarField::constant(0.0)),
      obleig::ObliqueBoundary::neumann());
  obleig::SimConfig cfg;
  cfg.t_end = 0.2;
  cfg.dt = 0.1;
  auto traj = obleig::evolve(sys, obleig::ReactionSpec::none(),
                             [](Point p) { return 1.0 + p.x * p.x; }, cfg);

  TempFile f("unit_traj.oblp");
  obleig::write_oblp(f.path, traj);
  auto back = obleig::read_oblp(f.path);
  CHECK(back.dim == 1);
  CHECK(back.nodes == std::uint64_t(traj.frames[0].size()));
  REQUIRE(back.times.size() == traj.times.size());
  for (size_t k = 0; k < back.times.size(); ++k) {
    CHECK(back.times[k] == traj.times[k]);
    for (size_t i = 0; i < back.nodes; ++i) CHECK(back.frames[k][i] == traj.frames[k][i]);
  }
}

TEST_CASE("trajectory reader rejects foreign and truncated files") {
  TempFile junk("unit_junk.oblp");
  {
    std::ofstream out(junk.path, std::ios::binary);
    out << "JUNKJUNKJUNKJUNK";
  }
  CHECK_THROWS_AS(obleig::read_oblp(junk.path), obleig::SchemaMismatch);

  TempFile cut("unit_cut.oblp");
  {
    std::ofstream out(cut.path, std::ios::binary);
    out.write("OBLP", 4);
    std::uint32_t dim = 1;
    std::uint64_t n = 4;
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&n), 8);
    double vals[3] = {0.0, 1.0, 2.0};  // one time plus only half a frame
    out.write(reinterpret_cast<const char*>(vals), sizeof vals);
  }
  CHECK_THROWS_AS(obleig::read_oblp(cut.path), obleig::SchemaMismatch);

  CHECK_THROWS_AS(obleig::read_oblp("no_such_traj.oblp"), obleig::ConfigError);
}

TEST_CASE("svg plots are deterministic byte streams") {
  obleig::PlotSeries a{"alpha", {1, 2, 3, 4}, {1.5, 1.2, 1.1, 1.05}};
  obleig::PlotSeries b{"beta", {1, 2, 3, 4}, {0.5, 0.8, 0.9, 0.95}};
  TempFile f1("unit_plot1.svg");
  TempFile f2("unit_plot2.svg");
  obleig::write_svg_plot(f1.path, "levels", "r", "lambda", {a, b});
  obleig::write_svg_plot(f2.path, "levels", "r", "lambda", {a, b});
  std::string s1 = slurp(f1.path);
  CHECK(s1 == slurp(f2.path));
  CHECK(s1.find("<svg") != std::string::npos);
  CHECK(s1.find("levels") != std::string::npos);
  CHECK(s1.find("alpha") != std::string::npos);

  CHECK_THROWS_AS(obleig::write_svg_plot("unit_plot_none.svg", "t", "x", "y", {}),
                  obleig::ConfigError);
  obleig::PlotSeries bad{"bad", {1, 2}, {1}};
  CHECK_THROWS_AS(obleig::write_svg_plot("unit_plot_bad.svg", "t", "x", "y", {bad}),
                  obleig::SchemaMismatch);
}

TEST_CASE("plot_csv groups by the requested column") {
  TempFile csv("unit_grouped.csv");
  {
    CsvTable t;
    t.header = {"r", "lambda", "center_x"};
    t.rows = {{"3", "1.56", "0"}, {"4", "1.49", "0"}, {"3", "1.60", "5"},
              {"4", "1.52", "5"}, {"5", "bad", "5"}};
    obleig::write_csv(csv.path, t);
  }
  TempFile svg("unit_grouped.svg");
  obleig::plot_csv(csv.path, svg.path, "r", "lambda", "center_x");
  std::string s = slurp(svg.path);
  CHECK(s.find("<svg") != std::string::npos);
  CHECK(s.find("lambda vs r") != std::string::npos);

  CHECK_THROWS_AS(obleig::plot_csv(csv.path, svg.path, "r", "nope", ""), obleig::SchemaMismatch);
}
