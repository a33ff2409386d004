// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include "cavcoord/cli.hpp"
#include "cavcoord/config.hpp"
#include "cavcoord/errors.hpp"
#include "cavcoord/results_io.hpp"
#include "cavcoord/scheduler.hpp"
#include "cavcoord/simulator.hpp"
#include "cavcoord/trajectory.hpp"

#include "../oracle/instances.hpp"
#include "../oracle/schedule_oracle.hpp"
#include "../oracle/transcription_qp.hpp"
#include "../support/fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

using namespace cavcoord;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double limit_s, const std::function<Verdict()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (elapsed >= limit_s) {
    v.pass = false;
    v.detail += "; runtime over the limit";
  }
  if (!v.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.2f s, limit %.0f s)\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str(),
              elapsed, limit_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Verdict unconstrained_exactness() {
  std::mt19937_64 rng(101);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const BvpProblem pr = oracle::random_unconstrained(rng);
    const CubicArcd arc = solve_unconstrained(pr);
    worst = std::max({worst, std::abs(arc.position(pr.t0) - pr.p0), std::abs(arc.speed(pr.t0) - pr.v0),
                      std::abs(arc.position(pr.tf) - pr.pf), std::abs(arc.control(pr.tf))});
  }
  return {worst < 1e-9, fmt("1000 instances, max boundary residual %.3g", worst)};
}

Verdict optimality_vs_transcription() {
  std::mt19937_64 rng(202);
  double worst_gap = -1e300;
  double worst_dev = 0;
  for (int i = 0; i < 100; ++i) {
    const BvpProblem pr = oracle::random_unconstrained(rng);
    const CubicArcd arc = solve_unconstrained(pr);
    const auto qp = oracle::solve_transcription({pr.t0, pr.tf, pr.p0, pr.v0, pr.pf, 100, {}});
    if (!qp) return {false, "oracle failed on instance " + std::to_string(i)};
    worst_gap = std::max(worst_gap, arc.effort() - qp->effort);
    for (std::size_t n = 0; n < qp->t.size(); ++n)
      worst_dev = std::max(worst_dev, std::abs(arc.position(qp->t[n]) - qp->p[n]));
  }
  return {worst_gap <= 1e-6 && worst_dev < 1e-2,
          fmt("100 instances, max (J - J_oracle) %.3g, max position deviation %.3g m", worst_gap, worst_dev)};
}

Verdict constrained_correctness() {
  std::mt19937_64 rng(303);
  double min_margin = 1e300, max_jump = 0, max_identity = 0, max_effort_gap = 0;
  int constrained_arcs = 0;
  for (int i = 0; i < 50; ++i) {
    const BvpProblem pr = oracle::random_constrained(rng);
    const auto sol = solve_constrained_detailed(pr);
    const PiecewiseTrajectory& traj = sol.trajectory;
    min_margin = std::min(min_margin, min_rear_end_margin(traj, *pr.leader, pr.delta, {pr.t0, pr.tf}).margin);
    const auto pieces = traj.pieces();
    for (std::size_t k = 0; k + 1 < pieces.size(); ++k) {
      const double t = pieces[k].t_end;
      const Stated l = pieces[k].evaluate(t);
      const Stated r = pieces[k + 1].evaluate(t);
      max_jump = std::max({max_jump, std::abs(l.p - r.p), std::abs(l.v - r.v), std::abs(l.u - r.u)});
    }
    const PiecewiseTrajectory lead = pr.leader->extended_to(pr.tf);
    for (const auto& arc : traj.arcs()) {
      const auto* con = std::get_if<LeaderOffsetArc>(&arc);
      if (!con) continue;
      ++constrained_arcs;
      for (int k = 0; k <= 50; ++k) {
        const double t = con->t_start + (con->t_end - con->t_start) * k / 50.0;
        const Stated s = con->evaluate(t);
        const Stated l = evaluate(lead, t);
        max_identity = std::max({max_identity, std::abs(s.p - (l.p - pr.delta)), std::abs(s.v - l.v),
                                 std::abs(s.u - l.u)});
      }
    }
    oracle::TranscriptionProblem tp{pr.t0, pr.tf, pr.p0, pr.v0, pr.pf, 100,
                                    [&](double t) { return evaluate(lead, t).p - pr.delta; }};
    const auto qp = oracle::solve_transcription(tp);
    if (!qp) return {false, "oracle failed on instance " + std::to_string(i)};
    const double J = effort(traj);
    max_effort_gap = std::max(max_effort_gap, std::abs(J - qp->effort) / std::max(1.0, qp->effort));
  }
  const bool pass = min_margin >= -1e-6 && max_jump <= 1e-7 && max_identity <= 1e-12 && max_effort_gap <= 1e-2;
  return {pass, fmt("50 instances, min margin %.3g m, max junction jump %.3g, leader identity error %.3g, ",
                    min_margin, max_jump, max_identity) +
                    fmt("max effort gap to oracle %.3g (relative to max(1, J)); %.0f constrained arcs",
                        max_effort_gap, constrained_arcs)};
}

// One zone with crossing approaches A1, A2 and a free approach A3; 100 m
// control zones and v_max = 12.5 m/s put every time on the 0.1 s grid.
CorridorSpec grid_zone() {
  CorridorSpec c = fixtures::single_zone(100);
  c.params.v_max = 12.5;
  c.params.v_min = 2.0;
  return c;
}

Verdict scheduler_oracle() {
  const CorridorSpec c = grid_zone();
  const auto& zone = c.zones[0];
  std::mt19937_64 rng(404);
  const double speeds[] = {5.0, 8.0, 10.0, 12.5};
  const char* approaches[] = {"A1", "A2", "A3"};
  int instances = 0, mismatches = 0, infeasible = 0;
  for (; instances < 1000; ++instances) {
    const int n = std::uniform_int_distribution<int>(1, 5)(rng);
    std::vector<std::int64_t> t0(static_cast<std::size_t>(n));
    for (auto& t : t0) t = std::uniform_int_distribution<std::int64_t>(0, 80)(rng);
    std::sort(t0.begin(), t0.end());
    ScheduleLedger ledger(c);
    std::vector<oracle::GridArrival> grid;
    std::vector<std::optional<double>> ours;
    for (int k = 0; k < n; ++k) {
      const std::string approach = approaches[std::uniform_int_distribution<int>(0, 2)(rng)];
      const double v = speeds[std::uniform_int_distribution<int>(0, 3)(rng)];
      const std::int64_t travel = std::llround(1000.0 / v);
      grid.push_back({approach, t0[static_cast<std::size_t>(k)] + travel, t0[static_cast<std::size_t>(k)] + 500});
      try {
        ours.push_back(ledger.schedule_entry(k + 1, "Z1", approach, t0[static_cast<std::size_t>(k)] / 10.0, v).t_assigned);
      } catch (const InfeasibleScheduleError&) {
        ours.push_back(std::nullopt);
        break;
      }
    }
    const auto expected = oracle::greedy_grid_schedule(
        grid, 12, [&](const std::string& a, const std::string& b) { return zone.conflicts(a, b); });
    bool same = expected.size() == ours.size();
    for (std::size_t k = 0; same && k < ours.size(); ++k) {
      if (expected[k].has_value() != ours[k].has_value()) same = false;
      else if (ours[k] && std::abs(*ours[k] - static_cast<double>(*expected[k]) / 10.0) > 1e-9) same = false;
    }
    if (!ours.back()) ++infeasible;
    if (!same) ++mismatches;
  }
  return {mismatches == 0, fmt("%.0f instances (%.0f hit the latest-entry bound), %.0f mismatches", instances,
                               infeasible, mismatches)};
}

// Three zones, four approaches each; north/south cross east/west.
CorridorSpec crossroads(int zones) {
  CorridorSpec c;
  for (int k = 1; k <= zones; ++k) {
    ConflictZoneSpec z;
    z.id = "Z" + std::to_string(k);
    z.zone_length = 12;
    z.approaches = {{"N", 150}, {"S", 150}, {"E", 150}, {"W", 150}};
    for (const char* a : {"N", "S"})
      for (const char* b : {"E", "W"}) z.add_conflict(a, b);
    c.zones.push_back(z);
  }
  return c;
}

Verdict scheduler_safety() {
  const CorridorSpec c = crossroads(3);
  std::mt19937_64 rng(505);
  const char* approaches[] = {"N", "S", "E", "W"};
  long long violations = 0, assigned = 0, refused = 0;
  for (int scenario = 0; scenario < 10000; ++scenario) {
    ScheduleLedger ledger(c);
    // (control entry time, vehicle, zone index, approach)
    using Ev = std::tuple<double, int, int, std::string>;
    std::priority_queue<Ev, std::vector<Ev>, std::greater<>> events;
    double t = 0;
    for (int id = 1; id <= 20; ++id) {
      t += oracle::uniform(rng, 0.0, 3.0);
      events.push({t, id, std::uniform_int_distribution<int>(0, 2)(rng),
                   approaches[std::uniform_int_distribution<int>(0, 3)(rng)]});
    }
    while (!events.empty()) {
      const auto [t0, id, z, approach] = events.top();
      events.pop();
      try {
        const auto e = ledger.schedule_entry(id, c.zones[static_cast<std::size_t>(z)].id, approach, t0,
                                             oracle::uniform(rng, c.params.v_min + 4, c.params.v_max));
        ++assigned;
        if (z + 1 < 3) events.push({e.t_assigned + oracle::uniform(rng, 1.0, 6.0), id, z + 1, approach});
      } catch (const InfeasibleScheduleError&) {
        ++refused;
      }
    }
    for (const auto& zone : c.zones) {
      const auto entries = ledger.snapshot(zone.id).entries;
      for (std::size_t i = 0; i < entries.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
          const double gap = std::abs(entries[i].t_assigned - entries[j].t_assigned);
          const bool lateral = zone.conflicts(entries[i].approach, entries[j].approach);
          const bool same_lane = entries[i].approach == entries[j].approach;
          if ((lateral || same_lane) && gap < c.params.rho - 1e-9) ++violations;
        }
    }
  }
  return {violations == 0, fmt("10000 scenarios, %.0f entries assigned, %.0f refused as infeasible, %.0f violations",
                               static_cast<double>(assigned), static_cast<double>(refused),
                               static_cast<double>(violations))};
}

// The 4-zone arterial used for the end-to-end runs.
struct Arterial {
  CorridorSpec corridor = fixtures::arterial(4, 150, 12, 50);
  std::map<RouteId, Route> routes = fixtures::arterial_routes(4);
};

Verdict end_to_end_safety() {
  const Arterial a;
  const double rho = a.corridor.params.rho;
  int aborted = 0;
  double min_margin = 1e300, min_lateral = 1e300;
  std::size_t vehicles = 0;
  std::string first_abort;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto arrivals = generate_arrivals(fixtures::poisson(seed, 3 * rho, 300, a.routes), a.corridor, a.routes);
    try {
      const auto r = run_scenario(a.corridor, a.routes, arrivals, Mode::Optimal);
      vehicles += r.vehicles.size();
      min_margin = std::min(min_margin, r.aggregate.min_rear_end_margin);
      min_lateral = std::min(min_lateral, r.aggregate.min_lateral_headway);
    } catch (const ScenarioAbort& e) {
      if (aborted++ == 0) first_abort = e.what();
    }
  }
  const bool pass = aborted == 0 && min_margin >= -1e-6 && min_lateral >= rho - 1e-9;
  return {pass, fmt("100 runs, %.0f vehicles, mean headway %.1f s per route; min gap - delta %.3g m, "
                    "min lateral headway %.4g s; ",
                    static_cast<double>(vehicles), 3 * rho, min_margin, min_lateral) +
                    std::to_string(aborted) + " aborted" + (first_abort.empty() ? "" : " (" + first_abort + ")")};
}

Verdict directional_comparison() {
  const Arterial a;
  double effort_opt = 0, effort_base = 0, tt_opt = 0, tt_base = 0, sg_opt = 0, sg_base = 0;
  const int runs = 20;
  for (int seed = 1; seed <= runs; ++seed) {
    const auto arrivals = generate_arrivals(fixtures::poisson(static_cast<std::uint64_t>(1000 + seed), 3.6, 300, a.routes),
                                            a.corridor, a.routes);
    const auto opt = run_scenario(a.corridor, a.routes, arrivals, Mode::Optimal);
    const auto base = run_scenario(a.corridor, a.routes, arrivals, Mode::Baseline);
    effort_opt += opt.aggregate.mean_effort / runs;
    effort_base += base.aggregate.mean_effort / runs;
    tt_opt += opt.aggregate.mean_travel_time / runs;
    tt_base += base.aggregate.mean_travel_time / runs;
    sg_opt += opt.aggregate.mean_stop_and_go / runs;
    sg_base += base.aggregate.mean_stop_and_go / runs;
  }
  const double reduction = 100.0 * (effort_base - effort_opt) / effort_base;
  const bool pass = effort_opt < effort_base && tt_opt <= tt_base && sg_opt == 0 && sg_base > 0;
  return {pass, fmt("20 scenarios; mean effort %.4g vs baseline %.4g (%.1f %% lower); ", effort_opt, effort_base,
                    reduction) +
                    fmt("mean travel time %.2f s vs %.2f s; stop-and-go %.3g vs %.3g", tt_opt, tt_base, sg_opt, sg_base) +
                    (reduction >= 20 ? "" : "; effort reduction below the expected 20 %")};
}

int cli(const std::vector<std::string>& args, std::string& out) {
  std::vector<const char*> argv{"cavcoord"};
  for (const auto& s : args) argv.push_back(s.c_str());
  std::ostringstream o, e;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), o, e);
  out = o.str() + e.str();
  return code;
}

Verdict determinism() {
  const std::string config = std::string(CAVCOORD_SOURCE_DIR) + "/configs/congested.yaml";
  const fs::path root = fs::temp_directory_path() / "cavcoord_acceptance_determinism";
  fs::remove_all(root);
  std::string out_a, out_b;
  const int ca = cli({"compare", config, "--out", (root / "a").string()}, out_a);
  const int cb = cli({"compare", config, "--out", (root / "b").string()}, out_b);
  if (ca != 0 || cb != 0) return {false, "compare exited with " + std::to_string(ca) + " / " + std::to_string(cb)};
  int files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path other = root / "b" / fs::relative(entry.path(), root / "a");
    if (!fs::exists(other) || read_file(entry.path().string()) != read_file(other.string())) ++differing;
  }
  if (out_a != out_b) ++differing;
  fs::remove_all(root);
  return {files == 7 && differing == 0,
          fmt("%.0f output files plus console report compared, %.0f differ", files, differing)};
}

}  // namespace

int main() {
  report(1, "unconstrained BVP exactness", 1, unconstrained_exactness);
  report(2, "optimality vs transcription oracle", 30, optimality_vs_transcription);
  report(3, "constrained-arc correctness", 120, constrained_correctness);
  report(4, "scheduler oracle equivalence", 60, scheduler_oracle);
  report(5, "scheduler safety", 120, scheduler_safety);
  report(6, "end-to-end safety", 600, end_to_end_safety);
  report(7, "directional comparison", 300, directional_comparison);
  report(8, "determinism", 120, determinism);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
