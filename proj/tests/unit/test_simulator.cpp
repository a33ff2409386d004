#include "cavcoord/errors.hpp"
#include "cavcoord/results_io.hpp"
#include "cavcoord/simulator.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace cavcoord;

namespace {

std::map<RouteId, Route> single_zone_routes() {
  return {{"A1", fixtures::single_route("A1")}, {"A2", fixtures::single_route("A2")}, {"A3", fixtures::single_route("A3")}};
}

double max_abs_control(const VehicleRecord& v) {
  double worst = 0;
  for (const auto& piece : std::get<PiecewiseTrajectory>(v.path).pieces())
    worst = std::max({worst, std::abs(piece.control(piece.t_start)), std::abs(piece.control(piece.t_end))});
  return worst;
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("single vehicle cruises at its spawn speed") {
    const auto c = fixtures::single_zone(200);
    const auto r = run_scenario(c, single_zone_routes(), {{0.0, 10.0, "A1"}}, Mode::Optimal);
    REQUIRE(r.vehicles.size() == 1);
    const auto& v = r.vehicles[0];
    CHECK(v.zones[0].t_conflict_entry == doctest::Approx(20.0));
    CHECK(max_abs_control(v) < 1e-12);
    CHECK(r.metrics[0].effort == doctest::Approx(0.0));
    CHECK(v.exit_time == doctest::Approx(21.0));
  }

  TEST_CASE("same-lane pair spaced beyond the headway keeps cruising") {
    const auto c = fixtures::single_zone(200);
    // 20 m apart at 10 m/s: more than rho * v + delta = 17 m.
    const auto r = run_scenario(c, single_zone_routes(), {{0.0, 10.0, "A1"}, {2.0, 10.0, "A1"}}, Mode::Optimal);
    const double t1 = r.vehicles[0].zones[0].t_conflict_entry;
    const double t2 = r.vehicles[1].zones[0].t_conflict_entry;
    CHECK(t2 == doctest::Approx(t1 + 2.0));
    CHECK(t2 >= t1 + c.params.rho);
    CHECK(max_abs_control(r.vehicles[0]) < 1e-12);
    CHECK(max_abs_control(r.vehicles[1]) < 1e-12);
    CHECK(r.vehicles[1].zones[0].leader == 1);
  }

  TEST_CASE("laterally conflicting tie delays the second vehicle by rho") {
    const auto c = fixtures::single_zone(200);
    const auto r = run_scenario(c, single_zone_routes(), {{0.0, 10.0, "A2"}, {0.0, 10.0, "A1"}}, Mode::Optimal);
    // Ids follow (t, route, v): A1 is vehicle 1.
    CHECK(r.vehicles[0].route == "A1");
    CHECK(r.vehicles[0].zones[0].t_conflict_entry == doctest::Approx(20.0));
    CHECK(r.vehicles[1].zones[0].t_conflict_entry == doctest::Approx(21.2));
    CHECK(r.aggregate.min_lateral_headway == doctest::Approx(1.2));
    CHECK(r.metrics[1].effort > 0);
  }

  TEST_CASE("non-conflicting approaches are independent") {
    const auto c = fixtures::single_zone(200);
    const auto r = run_scenario(c, single_zone_routes(), {{0.0, 10.0, "A1"}, {0.0, 10.0, "A3"}}, Mode::Optimal);
    CHECK(r.vehicles[0].zones[0].t_conflict_entry == doctest::Approx(20.0));
    CHECK(r.vehicles[1].zones[0].t_conflict_entry == doctest::Approx(20.0));
  }

  TEST_CASE("fast follower gets its crossing speed capped behind a slow leader") {
    auto c = fixtures::single_zone(100);
    c.zones[0].zone_length = 30;
    const auto r = run_scenario(c, single_zone_routes(), {{0.0, 5.0, "A1"}, {12.0, 14.0, "A1"}}, Mode::Optimal);
    const auto& f = r.vehicles[1];
    CHECK(f.zones[0].speed_capped);
    CHECK(f.zones[0].speed_in_zone <= 5.5);
    CHECK(r.metrics[1].min_rear_end_margin >= -1e-6);
  }

  TEST_CASE("same-lane follower waits until the leader is delta into the zone") {
    auto c = fixtures::single_zone(100);
    // Leader crawls at 2 m/s: covering delta takes 2.5 s, more than rho.
    const auto r = run_scenario(c, single_zone_routes(), {{0.0, 2.0, "A1"}, {4.0, 10.0, "A1"}}, Mode::Optimal);
    const double t1 = r.vehicles[0].zones[0].t_conflict_entry;
    const double t2 = r.vehicles[1].zones[0].t_conflict_entry;
    CHECK(t2 >= t1 + 2.5 - 1e-9);
    CHECK(r.metrics[1].min_rear_end_margin >= -1e-6);
  }

  TEST_CASE("spawns closer than delta are rejected") {
    const auto c = fixtures::single_zone(200);
    CHECK_THROWS_AS(run_scenario(c, single_zone_routes(), {{0.0, 10.0, "A1"}, {0.3, 10.0, "A1"}}, Mode::Optimal),
                    ConfigError);
    CHECK_THROWS_AS(run_scenario(c, single_zone_routes(), {{0.0, 10.0, "nowhere"}}, Mode::Optimal), ConfigError);
    CHECK_THROWS_AS(run_scenario(c, single_zone_routes(), {{0.0, 40.0, "A1"}}, Mode::Optimal), ConfigError);
  }

  TEST_CASE("infeasible schedule aborts naming the vehicle") {
    auto c = fixtures::single_zone(100);
    c.params.v_min = 9.9;
    c.params.v_max = 10.0;
    try {
      run_scenario(c, single_zone_routes(), {{0.0, 10.0, "A1"}, {0.0, 10.0, "A2"}}, Mode::Optimal);
      FAIL("expected an abort");
    } catch (const ScenarioAbort& e) {
      CHECK(e.vehicle_id() == 2);
      CHECK(e.zone_id() == "Z1");
    }
  }

  TEST_CASE("mode names") {
    CHECK(parse_mode("optimal") == Mode::Optimal);
    CHECK(parse_mode("baseline") == Mode::Baseline);
    CHECK_THROWS_AS(parse_mode("fast"), DomainError);
    CHECK(std::string(to_string(Mode::Baseline)) == "baseline");
  }

  TEST_CASE("random arterial runs are safe, ordered and deterministic") {
    const auto c = fixtures::arterial(4, 150, 12, 50);
    const auto routes = fixtures::arterial_routes(4);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      CAPTURE(seed);
      const auto arrivals = generate_arrivals(fixtures::poisson(seed, 3.6, 120, routes), c, routes);
      const auto r = run_scenario(c, routes, arrivals, Mode::Optimal);
      CHECK(r.aggregate.min_rear_end_margin >= -1e-6);
      CHECK(r.aggregate.min_lateral_headway >= c.params.rho - 1e-9);
      CHECK(r.aggregate.total_stop_and_go == 0);
      // Dependency audit: everything a commit depends on was committed
      // earlier at the same zone.
      std::set<std::pair<int, ZoneId>> done;
      for (const auto& commit : r.commits) {
        for (int d : commit.depends_on) CHECK(done.count({d, commit.zone}) == 1);
        done.insert({commit.vehicle_id, commit.zone});
      }
      // Trajectories are continuous in position and speed along the route.
      for (const auto& v : r.vehicles) {
        const auto pieces = std::get<PiecewiseTrajectory>(v.path).pieces();
        for (std::size_t k = 1; k < pieces.size(); ++k) {
          const double t = pieces[k].t_start;
          CHECK(pieces[k - 1].position(t) == doctest::Approx(pieces[k].position(t)).epsilon(1e-9));
          CHECK(pieces[k - 1].speed(t) == doctest::Approx(pieces[k].speed(t)).epsilon(1e-7));
        }
        CHECK(vehicle_state(v, v.exit_time).p == doctest::Approx(v.geometry.length).epsilon(1e-9));
      }
      const auto again = run_scenario(c, routes, arrivals, Mode::Optimal);
      CHECK(metrics_json(r) == metrics_json(again));
      CHECK(schedule_json(r) == schedule_json(again));
    }
  }

  TEST_CASE("sample_path integrates piecewise-constant control") {
    SampledPath p{{0.0, 1.0, 2.0}, {0.0, 10.0, 21.0}, {10.0, 12.0, 12.0}, {2.0, 0.0, 0.0}};
    const Stated s = sample_path(p, 0.5);
    CHECK(s.p == doctest::Approx(5.25));
    CHECK(s.v == doctest::Approx(11.0));
    CHECK(s.u == doctest::Approx(2.0));
    CHECK(sample_path(p, 5.0).p == doctest::Approx(21.0));
  }
}
