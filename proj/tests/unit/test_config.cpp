#include "cavcoord/config.hpp"
#include "cavcoord/errors.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <string>

using namespace cavcoord;

namespace {

// Issues raised for `text`, empty when it parses.
std::vector<std::string> issues_of(const std::string& text) {
  try {
    parse_config(text, "cfg");
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& issues, const std::string& needle) {
  return std::any_of(issues.begin(), issues.end(), [&](const std::string& s) { return s.find(needle) != s.npos; });
}

std::string replaced(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("minimal scenario parses") {
    const auto c = parse_config(fixtures::kSingleZoneYaml);
    CHECK(c.corridor.zones.size() == 1);
    CHECK(c.corridor.zones[0].id == "X");
    CHECK(c.routes.size() == 2);
    CHECK(c.arrivals.size() == 3);
    CHECK(c.arrivals[2].v == 12.0);
    CHECK(c.corridor.params.rho == 1.2);
    CHECK(c.modes.size() == 2);
    CHECK(c.output.sample_dt == 0.1);
  }

  TEST_CASE("non-positive rho names its field") {
    const auto issues = issues_of(replaced(fixtures::kSingleZoneYaml, "rho: 1.2", "rho: 0"));
    REQUIRE(!issues.empty());
    CHECK(any_contains(issues, "params.rho"));
    CHECK(issues[0].rfind("cfg: ", 0) == 0);
  }

  TEST_CASE("unknown route is reported at its arrival") {
    const auto issues = issues_of(replaced(fixtures::kSingleZoneYaml, "{t: 0, v: 10, route: ns}", "{t: 0, v: 10, route: sn}"));
    CHECK(any_contains(issues, "arrivals[0]"));
  }

  TEST_CASE("unknown fields are rejected") {
    const auto issues = issues_of(replaced(fixtures::kSingleZoneYaml, "length: 10", "length: 10\n    colour: red"));
    CHECK(any_contains(issues, "colour"));
  }

  TEST_CASE("syntax errors report a line") {
    const auto issues = issues_of("params: {rho: 1.2\nzones: [");
    REQUIRE(issues.size() == 1);
    CHECK(any_contains(issues, "line"));
  }

  TEST_CASE("every problem is reported at once") {
    std::string text = replaced(fixtures::kSingleZoneYaml, "rho: 1.2", "rho: -1");
    text = replaced(text, "u_max: 2", "u_max: -2");
    text = replaced(text, "{id: out_n, length: 20}", "{id: out_n, length: -20}");
    const auto issues = issues_of(text);
    CHECK(issues.size() >= 3);
    CHECK(any_contains(issues, "params.rho"));
    CHECK(any_contains(issues, "params.u_max"));
    CHECK(any_contains(issues, "links[0]"));
  }

  TEST_CASE("missing arrivals and generator is an error") {
    const std::string text(fixtures::kSingleZoneYaml);
    const auto issues = issues_of(text.substr(0, text.find("arrivals:")));
    CHECK(any_contains(issues, "arrivals"));
  }

  TEST_CASE("dump and parse round trip") {
    auto c = parse_config(fixtures::kSingleZoneYaml);
    c.generator = GeneratorSpec{42, 5.0, 60.0, 2.0, {{"ns", 4.0, 8.0, 12.5}, {"ew", 6.0, 9.0, 10.0}}};
    c.options.baseline.dt = 0.02;
    c.output.sample_dt = 0.25;
    const std::string text = dump_config(c);
    const auto back = parse_config(text);
    CHECK(dump_config(back) == text);
    REQUIRE(back.generator);
    CHECK(back.generator->seed == 42);
    CHECK(back.generator->streams[0].v_high == 12.5);
    CHECK(back.options.baseline.dt == 0.02);
    CHECK(scenario_arrivals(back).size() == scenario_arrivals(c).size());
  }

  TEST_CASE("generator is reproducible and keeps spawns apart") {
    const auto c = fixtures::arterial(4, 150, 12, 50);
    const auto routes = fixtures::arterial_routes(4);
    const auto spec = fixtures::poisson(9, 1.0, 200, routes);
    const auto a = generate_arrivals(spec, c, routes);
    const auto b = generate_arrivals(spec, c, routes);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() > 100);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].t == b[i].t);
      CHECK(a[i].v == b[i].v);
      CHECK(a[i].route == b[i].route);
    }
    CHECK(validate_arrivals(c, routes, a).empty());
    std::map<RouteId, double> last;
    for (const auto& x : a) {
      CHECK(x.v >= 8.0);
      CHECK(x.v <= 14.0);
      if (auto it = last.find(x.route); it != last.end()) CHECK(x.t - it->second >= c.params.rho - 1e-9);
      last[x.route] = x.t;
    }
    auto other = spec;
    other.seed = 10;
    CHECK(generate_arrivals(other, c, routes).front().t != a.front().t);
  }
}
