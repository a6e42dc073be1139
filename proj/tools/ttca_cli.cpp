// Command line front end: plan, compare, ttc, fit.
//
// Exit codes: 0 ok, 2 the planner declined (brake first or an infeasible
// corridor), 1 anything else.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ttca/curve_fit.hpp"
#include "ttca/error.hpp"
#include "ttca/log.hpp"
#include "ttca/planner.hpp"
#include "ttca/report.hpp"
#include "ttca/scenario.hpp"
#include "ttca/ttc.hpp"

namespace fs = std::filesystem;
using namespace ttca;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kDeclined = 2;

std::string num(double v) { return format_double(v); }

void print_metrics(std::ostream& os, const std::string& who, const PlanResult& r) {
  if (!r.metrics) {
    os << who << ": " << r.metrics_error << '\n';
    return;
  }
  for (const auto& f : kMetricFields) {
    os << who << '.' << f.name << " = " << num((*r.metrics).*f.member) << '\n';
  }
}

// Runs a callable and maps library errors to exit codes.
template <typename F>
int guarded(F&& f, std::ostream& err = std::cerr) {
  try {
    return f();
  } catch (const BrakeFirst& e) {
    err << e.what() << '\n';
    return kDeclined;
  } catch (const Infeasible& e) {
    err << "infeasible: " << e.what() << '\n';
    return kDeclined;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailed;
  }
}

int do_plan(const std::string& scenario, const std::string& planner,
            const std::string& out, bool plot) {
  const Scenario s = load_scenario_file(scenario);
  const bool cpf = planner == "cpf";
  const PlanResult r = cpf ? run_cpf(s) : run_ttca(s);
  if (r.ttc) {
    std::cout << "ttc = " << num(r.ttc->seconds) << " (" << to_string(r.ttc->regime) << ")\n";
  }
  print_metrics(std::cout, planner, r);
  if (!out.empty()) {
    ttca::detail::ensure_dir(out);
    export_run(r, fs::path(out) / (cpf ? kCpfTrajectoryFile : kTtcaTrajectoryFile));
    std::optional<LcMetrics> none;
    ttca::detail::write_text(fs::path(out) / kMetricsFile,
                             cpf ? metrics_csv(r.metrics, none) : metrics_csv(none, r.metrics));
    if (plot) {
      ttca::detail::write_text(fs::path(out) / kPlotFile,
                               paths_svg({{cpf ? "CPF-LC" : "TTCA-LC", "#2563eb", &r.log}}, s.road));
    }
  }
  return kOk;
}

int do_compare(const std::string& scenario, const std::string& out, bool plot,
               std::ostream& os) {
  const Scenario s = load_scenario_file(scenario);
  const ComparisonReport rep = compare(s);
  print_metrics(os, "cpf", rep.cpf);
  print_metrics(os, "ttca", rep.ttca);
  if (rep.cpf.metrics && rep.ttca.metrics) {
    for (const auto& f : kMetricFields) {
      os << "reduction." << f.name << " = "
         << num(reduction((*rep.cpf.metrics).*f.member, (*rep.ttca.metrics).*f.member)) << '\n';
    }
  }
  if (!out.empty()) export_report(rep, s, out, plot);
  return kOk;
}

// Every *.json in the directory, each into its own subdirectory of out.
int do_batch(const std::string& dir, const std::string& out, bool plot) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .json scenarios in " + dir);

  struct Outcome {
    int code;
    std::string text;
  };
  std::vector<std::future<Outcome>> jobs;
  for (const auto& f : files) {
    const std::string sub = out.empty() ? std::string() : (fs::path(out) / f.stem()).string();
    jobs.push_back(std::async(std::launch::async, [f, sub, plot] {
      std::ostringstream os;
      const int code = guarded([&] { return do_compare(f.string(), sub, plot, os); }, os);
      return Outcome{code, os.str()};
    }));
  }
  int worst = kOk;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Outcome o = jobs[i].get();
    std::cout << "== " << files[i].filename().string() << " (exit " << o.code << ")\n" << o.text;
    if (o.code == kFailed || worst == kFailed) {
      worst = kFailed;
    } else {
      worst = std::max(worst, o.code);
    }
  }
  return worst;
}

struct TtcArgs {
  std::string scenario;
  double v1 = 0, a1 = 0, v2 = 0, a2 = 0, gap = 0;
  double d_stop = 5.0;
  double threshold = kDefaultTtcThreshold;
};

int do_ttc(const TtcArgs& a) {
  LongitudinalPair p{a.v1, a.a1, a.v2, a.a2, a.gap, a.d_stop};
  double threshold = a.threshold;
  if (!a.scenario.empty()) {
    const Scenario s = load_scenario_file(a.scenario);
    if (!s.obstacle) throw ValidationError("scenario has no obstacle");
    p = longitudinal_pair(s);
    threshold = s.ttc.threshold;
  }
  const TtcResult r = compute_ttc(p);
  const bool brake = gate_lane_change(r, threshold) == GateDecision::BrakeFirst;
  std::cout << "ttc = " << num(r.seconds) << '\n'
            << "regime = " << to_string(r.regime) << '\n'
            << "gate = " << (brake ? "brake_first" : "proceed") << '\n';
  return brake ? kDeclined : kOk;
}

// x,y[,weight] rows; an optional header line is skipped.
WaypointSet read_waypoints(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  WaypointSet w;
  std::string line;
  int no = 0;
  bool weighted = false;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path + ":" + std::to_string(no);
    if (no == 1 && !cells.empty() && cells[0] == "x") continue;
    if (cells.size() < 2 || cells.size() > 3) throw ParseError(where + ": expected x,y[,weight]");
    w.points.push_back({parse_double(cells[0], where), parse_double(cells[1], where)});
    if (cells.size() == 3) {
      weighted = true;
      w.weights.push_back(parse_double(cells[2], where));
    } else if (weighted) {
      throw ParseError(where + ": missing weight");
    }
  }
  if (weighted && w.weights.size() != w.points.size()) {
    throw ParseError(path + ": weights given on some rows only");
  }
  return w;
}

struct FitArgs {
  std::string waypoints;
  double x_start = 0, x_end = 0, y_upper = 0, y_lower = 0;
  double spacing = 0.5;
  bool unconstrained = false;
};

int do_fit(const FitArgs& a) {
  const WaypointSet w = read_waypoints(a.waypoints);
  FitReport r;
  if (a.unconstrained) {
    r = fit_unconstrained(w);
  } else {
    ConstraintWindow win{a.x_start, a.x_end, a.y_upper, a.y_lower, a.spacing};
    r = fit_constrained(w, build_constraints(win));
  }
  const CubicCoeffs& c = r.coeffs;
  std::cout << "a0 = " << num(c.a0) << '\n'
            << "a1 = " << num(c.a1) << '\n'
            << "a2 = " << num(c.a2) << '\n'
            << "a3 = " << num(c.a3) << '\n'
            << "residual = " << num(r.residual) << '\n'
            << "active = " << r.active_constraints << '\n'
            << "kkt = " << num(r.kkt_residual) << '\n'
            << "status = " << (r.status == FitStatus::Optimal ? "optimal" : "stalled") << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TTC-aware lane-change planner"};
  app.require_subcommand(1);

  std::string scenario, out, planner = "ttca", batch;
  bool plot = false;

  auto* plan = app.add_subcommand("plan", "run one planner on a scenario");
  plan->add_option("--scenario", scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  plan->add_option("--planner", planner, "cpf or ttca")->check(CLI::IsMember({"cpf", "ttca"}));
  plan->add_option("--out", out, "output directory");
  plan->add_flag("--plot", plot, "also write paths.svg");

  auto* cmp = app.add_subcommand("compare", "run both planners and report the differences");
  auto* cmp_s = cmp->add_option("--scenario", scenario, "scenario JSON")->check(CLI::ExistingFile);
  auto* cmp_b = cmp->add_option("--batch", batch, "directory of scenario JSON files")
                    ->check(CLI::ExistingDirectory);
  cmp_s->excludes(cmp_b);
  cmp->add_option("--out", out, "output directory");
  cmp->add_flag("--plot", plot, "also write paths.svg");

  TtcArgs ta;
  auto* ttc = app.add_subcommand("ttc", "time to collision of one longitudinal pair");
  ttc->add_option("--scenario", ta.scenario, "take the pair from a scenario")->check(CLI::ExistingFile);
  ttc->add_option("--v1", ta.v1, "rear speed [m/s]");
  ttc->add_option("--a1", ta.a1, "rear acceleration [m/s^2]");
  ttc->add_option("--v2", ta.v2, "front speed [m/s]");
  ttc->add_option("--a2", ta.a2, "front acceleration [m/s^2]");
  ttc->add_option("--gap", ta.gap, "center to center gap [m]");
  ttc->add_option("--d-stop", ta.d_stop, "standstill margin [m]");
  ttc->add_option("--threshold", ta.threshold, "gate threshold [s]");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "cubic fit of waypoints from a CSV");
  fit->add_option("--waypoints", fa.waypoints, "CSV of x,y[,weight]")->required()->check(CLI::ExistingFile);
  fit->add_option("--x-start", fa.x_start, "window start [m]");
  fit->add_option("--x-end", fa.x_end, "window end [m]");
  fit->add_option("--y-upper", fa.y_upper, "corridor upper bound [m]");
  fit->add_option("--y-lower", fa.y_lower, "corridor lower bound [m]");
  fit->add_option("--spacing", fa.spacing, "constraint sample spacing [m]");
  fit->add_flag("--unconstrained", fa.unconstrained, "plain least squares");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kFailed;
  }

  if (*plan) return guarded([&] { return do_plan(scenario, planner, out, plot); });
  if (*cmp) {
    if (!batch.empty()) return guarded([&] { return do_batch(batch, out, plot); });
    if (scenario.empty()) {
      std::cerr << "compare needs --scenario or --batch\n";
      return kFailed;
    }
    return guarded([&] { return do_compare(scenario, out, plot, std::cout); });
  }
  if (*ttc) return guarded([&] { return do_ttc(ta); });
  if (*fit) return guarded([&] { return do_fit(fa); });
  return kFailed;
}
