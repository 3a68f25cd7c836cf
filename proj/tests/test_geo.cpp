#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cnl/geo.hpp"

using namespace cnl;
using namespace std::chrono;

namespace {

constexpr double kKmPerDegree = kEarthRadiusKm * std::numbers::pi / 180.0;  // 111.19508...

// Spherical law of cosines; an independent route to the great-circle distance.
double cosine_law_km(const GeoPoint& p, const GeoPoint& q) {
  const double c = std::sin(radians(p.lat())) * std::sin(radians(q.lat())) +
                   std::cos(radians(p.lat())) * std::cos(radians(q.lat())) * std::cos(radians(q.lon() - p.lon()));
  return kEarthRadiusKm * std::acos(std::clamp(c, -1.0, 1.0));
}

EventRecord event(std::string id, Date date, std::string country, double lat, double lon, long fatalities = 0) {
  EventRecord e;
  e.id = std::move(id);
  e.date = date;
  e.country = std::move(country);
  e.location = GeoPoint(lat, lon);
  e.actor_a = "AQIM";
  e.fatalities = fatalities;
  return e;
}

BorderSet meridian() { return BorderSet({{"East-West", {{-5.0, 0.0}, {5.0, 0.0}}}}); }

}  // namespace

TEST(GeoPoint, Validation) {
  EXPECT_NO_THROW(GeoPoint(90, 180));
  EXPECT_NO_THROW(GeoPoint(-90, -180));
  for (auto [lat, lon] : {std::pair{90.5, 0.0}, {0.0, -181.0}, {NAN, 0.0}}) {
    try {
      GeoPoint(lat, lon);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidCoordinate);
    }
  }
}

TEST(Haversine, KnownDistances) {
  EXPECT_NEAR(haversine_km({0, 0}, {0, 180}), std::numbers::pi * kEarthRadiusKm, 1e-9);
  EXPECT_NEAR(haversine_km({0, 0}, {0, 1}), 111.19508, 1e-5);
  EXPECT_NEAR(haversine_km({0, 0}, {1, 0}), 111.19508, 1e-5);
  EXPECT_EQ(haversine_km({18.44, 1.41}, {18.44, 1.41}), 0.0);
}

TEST(Haversine, MetricProperties) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> lat(-89, 89), lon(-179, 179);
  for (int i = 0; i < 2000; ++i) {
    const GeoPoint a(lat(rng), lon(rng)), b(lat(rng), lon(rng)), c(lat(rng), lon(rng));
    const double ab = haversine_km(a, b);
    EXPECT_NEAR(ab, haversine_km(b, a), 1e-9);
    EXPECT_LE(ab, haversine_km(a, c) + haversine_km(c, b) + 1e-9);
    EXPECT_NEAR(ab, cosine_law_km(a, b), 1e-4);
  }
}

TEST(Borders, DensifiedSpacing) {
  const auto b = meridian();
  const auto& v = b.lines().front().vertices;
  EXPECT_GT(v.size(), 1000u);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LE(haversine_km(v[i - 1], v[i]), 1.0 + 1e-9);
  EXPECT_EQ(v.front(), GeoPoint(-5.0, 0.0));
  EXPECT_EQ(v.back(), GeoPoint(5.0, 0.0));
}

TEST(Borders, DistanceToMeridian) {
  EXPECT_NEAR(distance_to_border({0.0, 0.5}, meridian()), 0.5 * kKmPerDegree, 0.01);
  EXPECT_NEAR(distance_to_border({0.0, -2.0}, meridian()), 2.0 * kKmPerDegree, 0.01);
  // Beyond the segment end the nearest point is the endpoint.
  EXPECT_NEAR(distance_to_border({6.0, 0.0}, meridian()), kKmPerDegree, 1e-6);
}

TEST(Borders, WithinHalfSpacingOfBruteForce) {
  const BorderSet coarse({{"X", {{10.0, -3.0}, {14.0, 2.0}, {12.0, 6.0}}}}, 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lat(8, 16), lon(-5, 8);
  for (int i = 0; i < 50; ++i) {
    const GeoPoint p(lat(rng), lon(rng));
    // Brute force: sample each original segment every ~50 m.
    double best = 1e18;
    const std::vector<GeoPoint> raw{{10.0, -3.0}, {14.0, 2.0}, {12.0, 6.0}};
    for (std::size_t s = 1; s < raw.size(); ++s) {
      const int n = int(haversine_km(raw[s - 1], raw[s]) / 0.05) + 1;
      for (int t = 0; t <= n; ++t) best = std::min(best, haversine_km(p, detail::slerp(raw[s - 1], raw[s], double(t) / n)));
    }
    const double got = distance_to_border(p, coarse);
    EXPECT_GE(got, best - 0.05);
    EXPECT_LE(got, best + 0.5);
  }
}

TEST(Borders, EmptySetAndBadLines) {
  try {
    distance_to_border({0, 0}, BorderSet({}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBorderSet);
  }
  EXPECT_THROW(BorderSet({{"one", {{0, 0}}}}), Error);
}

TEST(Borders, FromGeoJson) {
  const auto doc = nlohmann::json::parse(R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "properties": {"countries": ["Algeria", "Mali"]},
       "geometry": {"type": "LineString", "coordinates": [[0, 20], [1, 20]]}},
      {"type": "Feature", "properties": {"countries": "Mali-Niger"},
       "geometry": {"type": "MultiLineString", "coordinates": [[[3, 15], [3, 16]], [[4, 14], [4, 15]]]}}
    ]})");
  const auto b = BorderSet::from_geojson(doc);
  ASSERT_EQ(b.lines().size(), 3u);
  EXPECT_EQ(b.lines()[0].label, "Algeria-Mali");
  EXPECT_EQ(b.lines()[2].label, "Mali-Niger");
  EXPECT_EQ(b.lines()[0].vertices.front(), GeoPoint(20, 0));
  EXPECT_THROW(BorderSet::from_geojson(nlohmann::json::object()), Error);
}

TEST(Chain, OrderedByDateStableAndDropsUnlocated) {
  auto late = event("late", 2012y / 5 / 1, "Mali", 16, 0);
  auto first = event("first", 2012y / 1 / 1, "Mali", 16, 0);
  auto same1 = event("same1", 2012y / 3 / 1, "Mali", 16, 0);
  auto same2 = event("same2", 2012y / 3 / 1, "Mali", 16, 0);
  auto nowhere = event("nowhere", 2012y / 2 / 1, "Mali", 16, 0);
  nowhere.location.reset();
  const auto chain = chain_events({late, same1, nowhere, first, same2});
  ASSERT_EQ(chain.size(), 4u);
  EXPECT_EQ(chain.dropped, 1u);
  std::vector<std::string> ids;
  for (const auto& l : chain.links) ids.push_back(l.event.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"first", "same1", "same2", "late"}));
}

TEST(YearMetrics, HandComputedRows) {
  const double step = 0.9;  // degrees of longitude on the equator
  const std::vector<EventRecord> events{
      event("e1", 2012y / 1 / 1, "Mali", 0, 0, 3),
      event("e2", 2012y / 1 / 11, "Niger", 0, step, 0),
      event("e3", 2012y / 1 / 31, "Niger", 0, 2 * step, 5),
      event("e4", 2013y / 1 / 5, "Algeria", 0, 10, 7),
  };
  const auto chain = chain_events(events);
  const auto b = meridian();
  const auto rows = year_metrics(chain, &b);
  ASSERT_EQ(rows.size(), 2u);

  EXPECT_EQ(rows[0].year, 2012);
  EXPECT_EQ(rows[0].n_events, 3u);
  EXPECT_EQ(rows[0].cross_border_pct, 50);
  EXPECT_EQ(rows[0].victims, 8);
  EXPECT_NEAR(*rows[0].avg_step_km, step * kKmPerDegree, 1e-9);
  EXPECT_NEAR(*rows[0].avg_border_km, step * kKmPerDegree, 0.01);  // mean of 0, 1 and 2 steps
  EXPECT_DOUBLE_EQ(*rows[0].avg_gap_days, 15.0);

  EXPECT_EQ(rows[1].year, 2013);
  EXPECT_EQ(rows[1].n_events, 1u);
  EXPECT_FALSE(rows[1].cross_border_pct);
  EXPECT_FALSE(rows[1].avg_step_km);
  EXPECT_FALSE(rows[1].avg_gap_days);
  EXPECT_EQ(rows[1].victims, 7);

  const auto cross = year_metrics(chain, nullptr, GapMode::CrossYear);
  EXPECT_FALSE(cross[0].avg_border_km);
  EXPECT_DOUBLE_EQ(*cross[0].avg_gap_days, 15.0);
  EXPECT_DOUBLE_EQ(*cross[1].avg_gap_days, 340.0);  // 2012 is a leap year
  EXPECT_FALSE(cross[1].avg_step_km);
}

TEST(YearMetrics, RoundingRules) {
  // One crossing in three steps is 33%.
  const std::vector<EventRecord> events{
      event("a", 2014y / 6 / 1, "Mali", 15, 0), event("b", 2014y / 6 / 2, "Niger", 15, 1),
      event("c", 2014y / 6 / 4, "Niger", 15, 2), event("d", 2014y / 6 / 5, "Niger", 15, 3)};
  const auto rows = year_metrics(chain_events(events));
  EXPECT_EQ(rows[0].cross_border_pct, 33);
  EXPECT_DOUBLE_EQ(*rows[0].avg_gap_days, 1.3);  // (1 + 2 + 1) / 3
}

TEST(YearMetrics, Conservation) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> day(0, 1500), fat(0, 20);
  std::uniform_real_distribution<double> lat(10, 25), lon(-5, 10);
  std::vector<EventRecord> events;
  long victims = 0;
  for (int i = 0; i < 200; ++i) {
    const Date d{sys_days(2011y / 1 / 1) + days(day(rng))};
    events.push_back(event("x" + std::to_string(i), d, i % 3 ? "Mali" : "Niger", lat(rng), lon(rng), fat(rng)));
    victims += events.back().fatalities;
  }
  const auto rows = year_metrics(chain_events(events));
  std::size_t n = 0;
  long v = 0;
  for (const auto& r : rows) {
    n += r.n_events;
    v += r.victims;
    if (r.cross_border_pct) {
      EXPECT_GE(*r.cross_border_pct, 0);
      EXPECT_LE(*r.cross_border_pct, 100);
    }
  }
  EXPECT_EQ(n, events.size());
  EXPECT_EQ(v, victims);
}

TEST(Scenario, AllAtOnePointIsIndeterminate) {
  std::vector<EventRecord> events;
  for (int i = 0; i < 5; ++i) events.push_back(event("p" + std::to_string(i), 2012y / 1 / (i + 1), "Mali", 18, 1));
  const auto r = classify_scenario(chain_events(events));
  EXPECT_EQ(r.verdict, Scenario::Indeterminate);
  EXPECT_DOUBLE_EQ(r.concentration, 1.0);
  EXPECT_EQ(r.mean_step_km, 0.0);
}

TEST(Scenario, LongEastwardChainIsMobility) {
  std::vector<EventRecord> events;
  const double hop = 500.0 / kKmPerDegree;
  for (int i = 0; i < 6; ++i) {
    events.push_back(event("m" + std::to_string(i), 2013y / 1 / (i + 1), "Mali", 0, -12 + i * hop));
  }
  const auto r = classify_scenario(chain_events(events));
  EXPECT_EQ(r.verdict, Scenario::Mobility);
  EXPECT_NEAR(r.mean_step_km, 500.0, 1e-6);
  EXPECT_LT(r.concentration, 0.6);
}

TEST(Scenario, BaseWithExcursionsIsSanctuary) {
  // Seven events clustered near a base in Mali, three raids into Algeria.
  std::vector<EventRecord> events;
  const std::vector<std::pair<double, double>> base{{18.0, 1.0}, {18.1, 1.1}, {17.9, 0.9}, {18.2, 1.0},
                                                    {18.0, 1.2}, {17.8, 1.1}, {18.1, 0.8}};
  int d = 1;
  for (std::size_t i = 0; i < base.size(); ++i) {
    events.push_back(event("b" + std::to_string(i), 2012y / 3 / d++, "Mali", base[i].first, base[i].second));
    if (i % 2 == 1) events.push_back(event("r" + std::to_string(i), 2012y / 3 / d++, "Algeria", 22.0, 3.0));
  }
  ASSERT_EQ(events.size(), 10u);
  const auto chain = chain_events(events);
  const auto r = classify_scenario(chain);
  EXPECT_EQ(r.verdict, Scenario::Sanctuary);
  EXPECT_DOUBLE_EQ(r.concentration, 0.7);
  EXPECT_EQ(r.border_crossings, 6u);
  EXPECT_EQ(chain.links[r.medoid_index].event.country, "Mali");
  const auto j = to_json(r);
  EXPECT_EQ(j["verdict"], "sanctuary");
  EXPECT_EQ(j["params"]["radius_km"], 150.0);
}

TEST(Scenario, TooShort) {
  try {
    classify_scenario(chain_events({event("a", 2012y / 1 / 1, "Mali", 0, 0)}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChainTooShort);
  }
}

TEST(GeoJson, PointsAndDashedSteps) {
  const std::vector<EventRecord> events{event("e1", 2012y / 12 / 30, "Mali", 0, 0, 2),
                                        event("e2", 2013y / 1 / 2, "Niger", 0, 1), event("e3", 2013y / 1 / 3, "Niger", 1, 1)};
  const auto doc = export_chain_geojson(chain_events(events));
  EXPECT_EQ(doc["type"], "FeatureCollection");
  const auto& f = doc["features"];
  ASSERT_EQ(f.size(), 5u);
  EXPECT_EQ(f[0]["geometry"]["type"], "Point");
  EXPECT_EQ(f[0]["geometry"]["coordinates"], nlohmann::json({0.0, 0.0}));
  EXPECT_EQ(f[0]["properties"]["date"], "2012-12-30");
  EXPECT_EQ(f[0]["properties"]["actors"], nlohmann::json({"AQIM"}));
  EXPECT_EQ(f[2]["geometry"]["coordinates"], nlohmann::json({1.0, 1.0}));
  EXPECT_EQ(f[3]["geometry"]["type"], "LineString");
  EXPECT_EQ(f[3]["properties"]["style"], "dashed");
  EXPECT_EQ(f[3]["properties"]["year"], 2013);
  EXPECT_EQ(f[3]["properties"]["crosses_border"], true);
  EXPECT_NEAR(f[3]["properties"]["step_km"].get<double>(), kKmPerDegree, 1e-9);
  EXPECT_EQ(f[4]["properties"]["crosses_border"], false);
}

TEST(GeoJson, EmptyChain) {
  try {
    export_chain_geojson(EventChain{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyChain);
  }
}
