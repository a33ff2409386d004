#include "cavcoord/errors.hpp"
#include "cavcoord/scheduler.hpp"

#include "../oracle/instances.hpp"
#include "../oracle/schedule_oracle.hpp"
#include "../support/fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace cavcoord;

namespace {

std::vector<double> v(std::initializer_list<double> xs) { return xs; }

}  // namespace

TEST_SUITE("scheduler") {
  TEST_CASE("same-lane entry time") {
    CHECK(entry_time_same_lane(20.0, 1.2, 12.0, 40.0) == doctest::Approx(21.2));
    CHECK(entry_time_same_lane(39.5, 1.2, 12.0, 40.0) == doctest::Approx(40.0));
    CHECK(entry_time_same_lane(9.8, 1.2, 12.0, 40.0) == doctest::Approx(12.0));
  }

  TEST_CASE("first vehicle on a lane") {
    GlobalParams p;
    p.v_max = 20;
    p.v_min = 5;
    CHECK(first_vehicle_time(0, 10, {"A", 200}, p) == doctest::Approx(20));
    CHECK_THROWS_AS(first_vehicle_time(0, 25, {"A", 200}, p), DomainError);
    CHECK(first_vehicle_time(3, 20, {"A", 200}, p) == doctest::Approx(13));
  }

  TEST_CASE("later and gap sets") {
    auto s = build_sets_A_L(22, v({18, 25, 30}), 1.2);
    CHECK(s.later == v({25, 30}));
    CHECK(s.gap_after == v({25}));
    s = build_sets_A_L(22, v({25, 27}), 1.2);
    CHECK(s.later == v({25, 27}));
    CHECK(s.gap_after.empty());
    s = build_sets_A_L(31, v({18, 25, 30}), 1.2);
    CHECK(s.later.empty());
    CHECK(s.gap_after.empty());
    CHECK_THROWS_AS(build_sets_A_L(0, v({3, 1}), 1.2), DomainError);
  }

  TEST_CASE("lateral resolution cases") {
    auto d = resolve_lateral(20, v({18}), 1.2);
    CHECK(d.time == doctest::Approx(20));
    CHECK(d.which == ScheduleCase::NoLaterConflict);
    d = resolve_lateral(22, v({25, 30}), 1.2);
    CHECK(d.time == doctest::Approx(22));
    CHECK(d.which == ScheduleCase::BeforeNextConflict);
    d = resolve_lateral(24.5, v({25, 30}), 1.2);
    CHECK(d.time == doctest::Approx(26.2));
    CHECK(d.which == ScheduleCase::InGap);
    d = resolve_lateral(24.5, v({25, 27}), 1.2);
    CHECK(d.time == doctest::Approx(28.2));
    CHECK(d.which == ScheduleCase::AfterLastConflict);
    // An earlier conflicting vehicle still blocks a candidate inside its headway.
    d = resolve_lateral(20, v({19.5, 30}), 1.2);
    CHECK(d.time == doctest::Approx(20.7));
    CHECK(std::abs(resolve_lateral(5, {}, 1.2).time - 5) < 1e-12);
  }

  TEST_CASE("ledger assigns, stores and refuses reassignment") {
    const CorridorSpec c = fixtures::single_zone(200);
    ScheduleLedger ledger(c);
    const auto e1 = ledger.schedule_entry(1, "Z1", "A1", 0, 10);
    CHECK(e1.t_assigned == doctest::Approx(20));
    CHECK_FALSE(e1.same_lane_predecessor);
    // Conflicting vehicle with the same desired time goes rho later.
    const auto e2 = ledger.schedule_entry(2, "Z1", "A2", 0, 10);
    CHECK(e2.t_assigned == doctest::Approx(21.2));
    CHECK(e2.lateral_dependencies == std::vector<int>{1});
    // Non-conflicting approach is unaffected.
    CHECK(ledger.schedule_entry(3, "Z1", "A3", 0, 10).t_assigned == doctest::Approx(20));
    // Same lane, close behind: pushed to the predecessor plus rho, then past vehicle 2.
    const auto e4 = ledger.schedule_entry(4, "Z1", "A1", 0.5, 10);
    CHECK(e4.same_lane_predecessor == 1);
    CHECK(e4.t_candidate == doctest::Approx(21.2));
    CHECK(e4.t_assigned == doctest::Approx(22.4));
    CHECK_THROWS_AS(ledger.schedule_entry(4, "Z1", "A1", 1, 10), DomainError);
    CHECK(ledger.snapshot("Z1").entries.size() == 4);
    CHECK(ledger.last_on_approach("Z1", "A1")->vehicle_id == 4);
  }

  TEST_CASE("spaced same-lane vehicles keep their desired times") {
    const CorridorSpec c = fixtures::single_zone(200);
    ScheduleLedger ledger(c);
    const double gap_time = (1.2 * 10 + 5) / 10;  // (rho v + delta) / v
    const auto a = ledger.schedule_entry(1, "Z1", "A1", 0, 10);
    const auto b = ledger.schedule_entry(2, "Z1", "A1", gap_time, 10);
    CHECK(b.t_assigned == doctest::Approx(a.t_assigned + gap_time));
    CHECK(b.t_assigned >= a.t_assigned + 1.2);
  }

  TEST_CASE("infeasible same-lane headway") {
    CorridorSpec tight = fixtures::single_zone(2);
    tight.params.v_min = 2;
    ScheduleLedger l2(tight);
    l2.schedule_entry(1, "Z1", "A1", 0, 2);  // enters at 1 s; the next one must by 1 s too
    CHECK_THROWS_AS(l2.schedule_entry(2, "Z1", "A1", 0, 15), InfeasibleScheduleError);
  }

  TEST_CASE("lateral resolution matches the grid oracle") {
    std::mt19937_64 rng(3);
    const double rho = 1.2;
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<double> times;
      const int n = std::uniform_int_distribution<int>(0, 6)(rng);
      for (int k = 0; k < n; ++k) times.push_back(std::uniform_int_distribution<int>(0, 200)(rng) / 10.0);
      const double cand = std::uniform_int_distribution<int>(0, 220)(rng) / 10.0;
      const auto d = resolve_lateral(cand, times, rho);
      // Smallest grid time >= cand with |t - t_c| >= rho for all.
      std::int64_t t = std::llround(cand * 10);
      for (;; ++t) {
        bool ok = true;
        for (double c : times)
          if (std::abs(t - std::llround(c * 10)) < 12) ok = false;
        if (ok) break;
      }
      CHECK(std::abs(d.time - t / 10.0) < 1e-9);
    }
  }

  TEST_CASE("ledger invariants on random traffic") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
      const CorridorSpec c = fixtures::single_zone(150);
      ScheduleLedger ledger(c);
      double t = 0;
      for (int id = 1; id <= 30; ++id) {
        t += oracle::uniform(rng, 0.3, 4);
        const char* approach = std::array{"A1", "A2", "A3"}[std::uniform_int_distribution<int>(0, 2)(rng)];
        try {
          ledger.schedule_entry(id, "Z1", approach, t, oracle::uniform(rng, 5, 15));
        } catch (const InfeasibleScheduleError&) {
          break;
        }
      }
      const auto entries = ledger.snapshot("Z1").entries;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        CHECK(entries[i].t_assigned >= entries[i].t_min - 1e-9);
        CHECK(entries[i].t_assigned <= entries[i].t_max + 1e-9);
        for (std::size_t j = 0; j < i; ++j) {
          const double gap = std::abs(entries[i].t_assigned - entries[j].t_assigned);
          if (c.zones[0].conflicts(entries[i].approach, entries[j].approach)) CHECK(gap >= 1.2 - 1e-9);
          if (entries[i].approach == entries[j].approach)
            CHECK(entries[i].t_assigned >= entries[j].t_assigned + 1.2 - 1e-9);
        }
      }
    }
  }
}
