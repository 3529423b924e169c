#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "isac/scenario.hpp"

using namespace isac;

TEST_SUITE("scenario") {
  TEST_CASE("steering vector values") {
    const Eigen::VectorXcd a0 = make_steering(0.0, 4);
    for (int m = 0; m < 4; ++m) CHECK(std::abs(a0[m] - cplx(1.0, 0.0)) < 1e-15);

    const Eigen::VectorXcd a90 = make_steering(90.0, 2);
    CHECK(std::abs(a90[0] - cplx(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(a90[1] - cplx(-1.0, 0.0)) < 1e-15);

    const Eigen::VectorXcd a15 = make_steering(15.0, 10);
    const double s = 0.25881904510252074;  // sin 15 deg
    for (int m = 0; m < 10; ++m) {
      CHECK(std::abs(a15[m] - cplx(std::cos(std::numbers::pi * m * s), std::sin(std::numbers::pi * m * s))) < 1e-13);
      CHECK(std::abs(a15[m]) == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(a15.squaredNorm() == doctest::Approx(10.0).epsilon(1e-14));
    CHECK_THROWS_AS(make_steering(0.0, 0), std::invalid_argument);
  }

  TEST_CASE("steering norm equals N for sampled angles") {
    for (double ang = -90.0; ang <= 90.0; ang += 7.5)
      for (int n : {1, 3, 8, 17}) CHECK(make_steering(ang, n).squaredNorm() == doctest::Approx(n).epsilon(1e-13));
  }

  TEST_CASE("unit conversions") {
    CHECK(dbm_to_watts(20.0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(dbm_to_watts(0.0) == doctest::Approx(0.001).epsilon(1e-15));
    CHECK(dbm_to_watts(-94.0) == doctest::Approx(3.9810717055349565e-13).epsilon(1e-12));
    CHECK(db_to_linear(10.0) == doctest::Approx(10.0));
    CHECK(linear_to_db(100.0) == doctest::Approx(20.0));
  }

  TEST_CASE("defaults follow the table of simulation parameters") {
    const ScenarioConfig cfg = ScenarioConfig::defaults();
    CHECK(cfg.n_antennas == 10);
    CHECK(cfg.n_users == 5);
    CHECK(cfg.stream_len == 50);
    CHECK(cfg.n_paths == 3);
    CHECK(cfg.carrier_hz == 24e9);
    CHECK(cfg.bandwidth_hz == 100e6);
    CHECK(cfg.power_cap_dbm == 20.0);
    CHECK(cfg.sigma_c_dbm == -94.0);
    CHECK(cfg.sigma_r_dbm == -94.0);
    for (int b = 0; b < kStations; ++b) {
      for (double th : cfg.user_angles_deg[b]) {
        CHECK(th >= 10.0);
        CHECK(th <= 20.0);
      }
      CHECK(cfg.radar_path_gains_db[b][0] == 0.0);
      CHECK(cfg.radar_path_gains_db[b][1] == -10.0);
      CHECK(cfg.radar_path_gains_db[b][2] == -10.0);
    }
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("validation rejects broken configs") {
    ScenarioConfig cfg = ScenarioConfig::defaults();
    cfg.stream_len = 4;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ScenarioConfig::defaults();
    cfg.radar_path_gains_db[0][1] = NAN;
    CHECK_THROWS_AS(generate_channels(cfg), std::invalid_argument);
    cfg = ScenarioConfig::defaults();
    cfg.user_angles_deg[1].pop_back();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ScenarioConfig::defaults();
    cfg.cross_echo_gain_db = INFINITY;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  TEST_CASE("channels are a pure function of the config") {
    ScenarioConfig cfg = ScenarioConfig::defaults();
    cfg.seed = 1;
    const ChannelSet a = generate_channels(cfg);
    const ChannelSet b = generate_channels(cfg);
    for (int s = 0; s < kStations; ++s) {
      for (int i = 0; i < cfg.n_users; ++i) {
        CHECK(a.h[s][i] == b.h[s][i]);
        CHECK(a.cross_h[s][i] == b.cross_h[s][i]);
      }
      for (int l = 0; l < cfg.n_paths; ++l) CHECK(a.radar_paths[s][l] == b.radar_paths[s][l]);
      CHECK(a.cross_echo[s] == b.cross_echo[s]);
    }
    cfg.seed = 2;
    CHECK(generate_channels(cfg).h[0][0] != a.h[0][0]);
  }

  TEST_CASE("channel shapes and radar path powers") {
    const ScenarioConfig cfg = ScenarioConfig::defaults();
    const ChannelSet ch = generate_channels(cfg);
    for (int b = 0; b < kStations; ++b) {
      REQUIRE(ch.h[b].size() == 5);
      for (const auto& h : ch.h[b]) {
        CHECK(h.size() == 10);
        CHECK(h.allFinite());
      }
      REQUIRE(ch.radar_paths[b].size() == 3);
      const double p0 = ch.radar_paths[b][0].squaredNorm();
      CHECK(p0 > 0.0);
      CHECK(ch.radar_paths[b][1].squaredNorm() / p0 == doctest::Approx(0.1).epsilon(1e-12));
      CHECK(ch.radar_paths[b][2].squaredNorm() / p0 == doctest::Approx(0.1).epsilon(1e-12));
      // Rank-one cross echo.
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ch.cross_echo[b]);
      CHECK(svd.singularValues()[1] < 1e-12 * svd.singularValues()[0]);
      CHECK(svd.singularValues()[0] == doctest::Approx(std::pow(10.0, -0.5) * 10.0).epsilon(1e-12));
    }
  }

  TEST_CASE("configured gains scale the generated powers") {
    ScenarioConfig cfg = ScenarioConfig::defaults();
    const ChannelSet base = generate_channels(cfg);
    const double c_db = 6.0;
    for (int b = 0; b < kStations; ++b)
      for (double& g : cfg.radar_path_gains_db[b]) g += c_db;
    cfg.cross_echo_gain_db += c_db;
    const ChannelSet scaled = generate_channels(cfg);
    const double c = db_to_linear(c_db);
    for (int b = 0; b < kStations; ++b) {
      for (int l = 0; l < cfg.n_paths; ++l)
        CHECK(scaled.radar_paths[b][l].squaredNorm() ==
              doctest::Approx(c * base.radar_paths[b][l].squaredNorm()).epsilon(1e-12));
      CHECK(scaled.cross_echo[b].squaredNorm() == doctest::Approx(c * base.cross_echo[b].squaredNorm()).epsilon(1e-12));
    }
  }

  TEST_CASE("user channels carry unit average power per antenna") {
    double total = 0.0;
    int count = 0;
    for (std::uint64_t seed = 1; seed <= 400; ++seed) {
      ScenarioConfig cfg = ScenarioConfig::defaults(5, 8);
      cfg.seed = seed;
      const ChannelSet ch = generate_channels(cfg);
      for (const auto& h : ch.h[0]) {
        total += h.squaredNorm() / h.size();
        ++count;
      }
    }
    CHECK(total / count == doctest::Approx(1.0).epsilon(0.03));
  }

  TEST_CASE("JSON round trip and unknown fields") {
    ScenarioConfig cfg = ScenarioConfig::defaults(3, 6, 2);
    cfg.seed = 99;
    cfg.cross_echo_gain_db = -13.0;
    const ScenarioConfig back = scenario_from_json(to_json(cfg));
    CHECK(back.n_users == 3);
    CHECK(back.n_antennas == 6);
    CHECK(back.n_paths == 2);
    CHECK(back.seed == 99);
    CHECK(back.cross_echo_gain_db == -13.0);
    CHECK(back.user_angles_deg == cfg.user_angles_deg);
    nlohmann::json j = to_json(cfg);
    j["colour"] = "blue";
    CHECK_THROWS_AS(scenario_from_json(j), std::invalid_argument);
  }
}
