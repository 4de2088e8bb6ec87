/// obleig: run scenarios of the oblique-eigenvalue toolkit, list the built-in
/// corpus, run the whole corpus as a suite with a JUnit report, and re-render
/// SVG charts from CSV artifacts.
///
/// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage
/// problem, 3 completed run with missed expectations.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <obleig/obleig.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitExpectation = 3;

struct CommonFlags {
  std::string out_dir;
  std::optional<double> h, dt, tol;
  std::string radii_arg;
  bool as_json = false;
};

obleig::RunOptions to_run_options(const CommonFlags& f) {
  obleig::RunOptions opt;
  opt.out_dir = f.out_dir;
  // the environment override wins so wrapper scripts can redirect artifacts
  // without touching the recorded command line
  if (const char* env = std::getenv("OBLEIG_OUT"); env && *env) opt.out_dir = env;
  opt.h = f.h;
  opt.dt = f.dt;
  opt.tol = f.tol;
  if (!f.radii_arg.empty()) {
    std::vector<double> radii;
    std::stringstream ss(f.radii_arg);
    std::string cell;
    while (std::getline(ss, cell, ','))
      if (!cell.empty()) radii.push_back(std::stod(cell));
    if (radii.empty()) throw obleig::ConfigError("--radii needs a comma-separated list");
    opt.radii = std::move(radii);
  }
  return opt;
}

obleig::Scenario load_scenario(const std::string& ref) {
  namespace fs = std::filesystem;
  if (ref.find('/') != std::string::npos || ref.ends_with(".json") || fs::exists(ref))
    return obleig::Scenario::from_file(ref);
  return obleig::ScenarioRegistry::builtin().get(ref);
}

void print_report(const obleig::RunReport& rep, int indent = 0) {
  std::string pad(indent, ' ');
  std::cout << pad << rep.scenario << " (" << rep.task << ", " << rep.provenance << ")\n";
  for (const obleig::CheckResult& c : rep.checks)
    std::cout << pad << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name << ": "
              << c.detail << "\n";
  if (!rep.classification.empty())
    std::cout << pad << "  classification: " << rep.classification << "\n";
  for (const auto& [key, value] : rep.values)
    std::cout << pad << "  " << key << " = " << obleig::format_num(value) << "\n";
  for (const obleig::RunReport& m : rep.members) print_report(m, indent + 2);
  for (const std::string& a : rep.artifacts) std::cout << pad << "  wrote " << a << "\n";
  std::cout << pad << (rep.ok ? "ok" : "EXPECTATIONS MISSED") << "\n";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

struct SuiteEntry {
  std::string name;
  bool ok = false;
  bool errored = false;
  std::string message;  // failed check names, or the error text
};

/// JUnit-style report. Deliberately carries no time or timestamp
/// attributes: suite artifacts are byte-identical across repeated runs.
void write_junit(const std::string& path, const std::vector<SuiteEntry>& entries) {
  int failures = 0, errors = 0;
  for (const SuiteEntry& e : entries) {
    failures += !e.ok && !e.errored;
    errors += e.errored;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw obleig::ConfigError("cannot open '" + path + "' for writing");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<testsuite name=\"obleig\" tests=\"" << entries.size() << "\" failures=\"" << failures
      << "\" errors=\"" << errors << "\">\n";
  for (const SuiteEntry& e : entries) {
    out << "  <testcase classname=\"obleig.scenarios\" name=\"" << xml_escape(e.name) << "\"";
    if (e.ok) {
      out << "/>\n";
      continue;
    }
    out << ">\n    <" << (e.errored ? "error" : "failure") << " message=\""
        << xml_escape(e.message) << "\"/>\n  </testcase>\n";
  }
  out << "</testsuite>\n";
}

int run_one(const std::string& ref, const CommonFlags& flags) {
  obleig::RunReport rep = obleig::run_scenario(load_scenario(ref), to_run_options(flags));
  if (flags.as_json)
    std::cout << obleig::report_json(rep).dump(2) << "\n";
  else
    print_report(rep);
  return rep.ok ? kExitOk : kExitExpectation;
}

int run_suite(const CommonFlags& flags, int workers, const std::string& junit_path) {
  const obleig::ScenarioRegistry& reg = obleig::ScenarioRegistry::builtin();
  std::vector<std::string> names = reg.names();
  std::sort(names.begin(), names.end());
  obleig::RunOptions opt = to_run_options(flags);

  std::vector<SuiteEntry> entries(names.size());
  std::atomic<size_t> next{0};
  std::mutex progress_mutex;
  auto work = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= names.size()) return;
      SuiteEntry& e = entries[i];
      e.name = names[i];
      try {
        obleig::RunReport rep = obleig::run_scenario(reg.get(names[i]), opt);
        e.ok = rep.ok;
        if (!rep.ok) {
          std::string failed;
          for (const obleig::CheckResult& c : rep.checks)
            if (!c.passed) failed += (failed.empty() ? "" : ", ") + c.name;
          e.message = "missed: " + failed;
        }
      } catch (const std::exception& ex) {
        e.errored = true;
        e.message = ex.what();
      }
      std::lock_guard<std::mutex> lock(progress_mutex);
      std::cerr << "[" << (e.errored ? "ERROR" : (e.ok ? "pass" : "FAIL")) << "] " << e.name
                << "\n";
    }
  };
  workers = std::clamp<int>(workers, 1, static_cast<int>(names.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();

  // buffered, name-ordered summary regardless of completion order
  bool any_fail = false, any_error = false;
  for (const SuiteEntry& e : entries) {
    any_fail |= !e.ok && !e.errored;
    any_error |= e.errored;
    if (flags.as_json) {
      nlohmann::json j{{"scenario", e.name},
                       {"ok", e.ok},
                       {"errored", e.errored},
                       {"message", e.message}};
      std::cout << j.dump() << "\n";
    } else {
      std::cout << (e.errored ? "ERROR " : (e.ok ? "pass  " : "FAIL  ")) << e.name
                << (e.message.empty() ? "" : "  (" + e.message + ")") << "\n";
    }
  }
  if (!junit_path.empty()) write_junit(junit_path, entries);
  if (any_error) return kExitError;
  return any_fail ? kExitExpectation : kExitOk;
}

int run_list(bool as_json) {
  const obleig::ScenarioRegistry& reg = obleig::ScenarioRegistry::builtin();
  std::vector<std::string> names = reg.names();
  std::sort(names.begin(), names.end());
  for (const std::string& n : names) {
    const obleig::Scenario& sc = reg.get(n);
    if (as_json) {
      nlohmann::json j{{"name", sc.name()},
                       {"task", sc.task()},
                       {"provenance", sc.provenance()},
                       {"anchor", sc.anchor()}};
      std::cout << j.dump() << "\n";
    } else {
      std::cout << sc.name() << "  (" << sc.task() << ", " << sc.provenance() << ")\n";
    }
  }
  return kExitOk;
}

int run_plot(const std::string& kind, const std::string& csv, std::string out) {
  if (out.empty()) out = std::filesystem::path(csv).replace_extension(".svg").string();
  if (kind == "lambda_vs_r") {
    obleig::CsvTable t = obleig::read_csv(csv);
    bool grouped = false;
    int ci = -1;
    for (size_t i = 0; i < t.header.size(); ++i)
      if (t.header[i] == "center_x") ci = static_cast<int>(i);
    if (ci >= 0)
      for (const auto& row : t.rows) grouped |= row[ci] != t.rows.front()[ci];
    obleig::plot_csv(csv, out, "r", "lambda", grouped ? "center_x" : "");
  } else if (kind == "front_position") {
    obleig::plot_csv(csv, out, "t", "x");
  } else if (kind == "envelope_vs_t") {
    // wide table: first column is time, every other column one window
    obleig::CsvTable t = obleig::read_csv(csv);
    if (t.header.size() < 2) throw obleig::SchemaMismatch("envelope table needs data columns");
    std::vector<obleig::PlotSeries> series(t.header.size() - 1);
    for (size_t c = 1; c < t.header.size(); ++c) series[c - 1].name = t.header[c];
    for (const auto& row : t.rows) {
      double x = std::stod(row.at(0));
      for (size_t c = 1; c < t.header.size() && c < row.size() + 1; ++c) {
        series[c - 1].x.push_back(x);
        series[c - 1].y.push_back(std::stod(row.at(c)));
      }
    }
    obleig::write_svg_plot(out, "window minima", t.header[0], "min over window", series);
  } else {
    throw obleig::ConfigError("unknown plot kind '" + kind +
                              "' (expected lambda_vs_r, envelope_vs_t or front_position)");
  }
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oblique-boundary generalized principal eigenvalues: scenarios, sweeps, "
               "certificates and long-run classification"};
  app.require_subcommand(1);
  // long-only help everywhere so -h stays free for a future short spacing flag
  app.set_help_flag("--help", "print usage");

  CommonFlags flags;
  std::string scenario_ref, junit_path, plot_kind, plot_csv_path, plot_out;
  int workers = 1;

  CLI::App* run = app.add_subcommand("run", "run one scenario by name or file path");
  run->add_option("scenario", scenario_ref, "built-in scenario name or path to a JSON file")
      ->required();
  run->add_option("--out", flags.out_dir, "directory for CSV/SVG/OBLP/report artifacts");
  run->add_option("--h", flags.h, "grid spacing override");
  run->add_option("--dt", flags.dt, "time step override");
  run->add_option("--tol", flags.tol, "eigensolver tolerance override");
  run->add_option("--radii", flags.radii_arg, "radius schedule override, comma separated");
  run->add_flag("--json", flags.as_json, "print the whole report as JSON");

  CLI::App* list = app.add_subcommand("list", "list built-in scenarios");
  list->add_flag("--json", flags.as_json, "one JSON object per line");

  CLI::App* suite = app.add_subcommand("suite", "run every built-in scenario");
  suite->add_option("--out", flags.out_dir, "directory for per-scenario artifacts");
  suite->add_option("--report", junit_path, "write a JUnit XML summary here");
  suite->add_option("--workers", workers, "parallel scenario runners")
      ->check(CLI::PositiveNumber);
  suite->add_flag("--json", flags.as_json, "one JSON summary object per line");

  CLI::App* plot = app.add_subcommand("plot", "render an SVG chart from a CSV artifact");
  plot->add_option("kind", plot_kind, "lambda_vs_r, envelope_vs_t or front_position")
      ->required();
  plot->add_option("csv", plot_csv_path, "input CSV file")->required();
  plot->add_option("-o,--out", plot_out, "output SVG path (default: input with .svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return run_one(scenario_ref, flags);
    if (*list) return run_list(flags.as_json);
    if (*suite) return run_suite(flags, workers, junit_path);
    if (*plot) return run_plot(plot_kind, plot_csv_path, plot_out);
  } catch (const obleig::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const obleig::SchemaMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitConfig;
}
