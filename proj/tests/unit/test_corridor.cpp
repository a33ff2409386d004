#include "cavcoord/corridor.hpp"
#include "cavcoord/errors.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>

using namespace cavcoord;

namespace {

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST_SUITE("corridor") {
  TEST_CASE("relation classes") {
    const CorridorSpec c = fixtures::single_zone();
    const auto& z = c.zones[0];
    CHECK(classify_relation(z, fixtures::single_route("A1"), fixtures::single_route("A1")) == RelationClass::SameLane);
    CHECK(classify_relation(z, fixtures::single_route("A1"), fixtures::single_route("A2")) ==
          RelationClass::LateralConflict);
    CHECK(classify_relation(z, fixtures::single_route("A1"), fixtures::single_route("A3")) ==
          RelationClass::NoConflict);
    // Symmetric for every pair.
    for (const char* x : {"A1", "A2", "A3"})
      for (const char* y : {"A1", "A2", "A3"}) CHECK(classify_approaches(z, x, y) == classify_approaches(z, y, x));
  }

  TEST_CASE("route must traverse the zone") {
    const CorridorSpec c = fixtures::arterial(2, 100, 10, 0);
    CHECK_THROWS_AS(classify_relation(c.zones[1], fixtures::arterial_side(1), fixtures::arterial_main(2)),
                    DomainError);
  }

  TEST_CASE("feasible time bounds") {
    GlobalParams p;
    p.v_max = 20;
    p.v_min = 5;
    auto b = feasible_time_bounds({"A", 200}, 0, p);
    CHECK(b.t_min == doctest::Approx(10));
    CHECK(b.t_max == doctest::Approx(40));
    b = feasible_time_bounds({"A", 200}, 7, p);
    CHECK(b.t_min == doctest::Approx(17));
    CHECK(b.t_max == doctest::Approx(47));
    p.v_max = 15;
    b = feasible_time_bounds({"A", 150}, 0, p);
    CHECK(b.t_min == doctest::Approx(10));
    CHECK(b.t_max == doctest::Approx(30));
    CHECK(b.t_min < b.t_max);
  }

  TEST_CASE("zero minimum speed needs a horizon cap") {
    GlobalParams p;
    p.v_min = 0;
    CHECK_THROWS_AS(feasible_time_bounds({"A", 100}, 0, p), ConfigError);
    CHECK(mentions(p.validate(), "horizon_cap"));
    p.horizon_cap = 60;
    CHECK(p.validate().empty());
    CHECK(feasible_time_bounds({"A", 100}, 2, p).t_max == doctest::Approx(62));
  }

  TEST_CASE("parameter invariants") {
    GlobalParams p;
    CHECK(p.validate().empty());
    p.rho = 0;
    p.u_max = -1;
    const auto issues = p.validate();
    CHECK(mentions(issues, "params.rho"));
    CHECK(mentions(issues, "params.u_max"));
  }

  TEST_CASE("structural validation") {
    CorridorSpec c = fixtures::single_zone();
    CHECK(c.validate().empty());
    c.zones[0].add_conflict("A1", "A9");
    c.zones[0].approaches.push_back({"A1", 50});
    const auto issues = c.validate();
    CHECK(mentions(issues, "duplicate approach id"));
    CHECK(mentions(issues, "unknown approach"));
  }

  TEST_CASE("route validation and geometry") {
    const CorridorSpec c = fixtures::arterial(3, 150, 12, 20);
    CHECK(c.validate().empty());
    const Route main = fixtures::arterial_main(3);
    CHECK(c.validate_route(main, "routes[0]").empty());

    Route backwards{"bad", {main.legs[1], main.legs[0]}};
    CHECK(mentions(c.validate_route(backwards, "routes[1]"), "routes[1].legs[1].zone"));

    Route stops_early{"short", {main.legs[0], main.legs[1]}};
    CHECK(mentions(c.validate_route(stops_early, "routes[2]"), "exit_link"));

    const RouteGeometry g = route_geometry(c, main);
    REQUIRE(g.legs.size() == 3);
    CHECK(g.legs[0].conflict_entry == doctest::Approx(150));
    CHECK(g.legs[1].control_entry == doctest::Approx(182));
    CHECK(g.length == doctest::Approx(3 * 182));
  }
}
