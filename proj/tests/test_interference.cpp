#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "isac/interference.hpp"
#include "oracles.hpp"

using namespace isac;
using fixture::row;

namespace {

CovarianceSet one_station(std::vector<Eigen::MatrixXcd> t) {
  CovarianceSet c;
  c.T[0] = std::move(t);
  return c;
}

}  // namespace

TEST_SUITE("interference") {
  TEST_CASE("single-user comm SINR") {
    const ChannelSet ch = fixture::manual_channels(2, {row({1, 0})}, {row({1, 0})});
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(2, 2);
    t(0, 0) = 4.0;
    CHECK(comm_sinr(0, 0, one_station({t}), ch, 1.0) == doctest::Approx(4.0));
    CHECK(comm_sinr(0, 0, one_station({Eigen::MatrixXcd::Zero(2, 2)}), ch, 1.0) == 0.0);
    CHECK_THROWS_AS(comm_sinr(0, 0, one_station({t}), ch, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(comm_sinr(0, 0, one_station({Eigen::MatrixXcd::Zero(3, 3)}), ch, 1.0), std::invalid_argument);
  }

  TEST_CASE("orthogonal two-user comm SINR in both interference modes") {
    const ChannelSet ch = fixture::manual_channels(2, {row({1, 0}), row({0, 1})}, {row({1, 0})});
    Eigen::MatrixXcd t1 = Eigen::MatrixXcd::Zero(2, 2), t2 = Eigen::MatrixXcd::Zero(2, 2);
    t1(0, 0) = 1.0;
    t2(1, 1) = 1.0;
    const CovarianceSet cov = one_station({t1, t2});
    CHECK(comm_sinr(0, 0, cov, ch, 1.0, InterferenceMode::OwnChannel) == doctest::Approx(1.0));
    CHECK(comm_sinr(1, 0, cov, ch, 1.0, InterferenceMode::OwnChannel) == doctest::Approx(1.0));
    // Literal form adds |h_j x_j|^2 = 1 for the other user.
    CHECK(comm_sinr(0, 0, cov, ch, 1.0, InterferenceMode::Literal) == doctest::Approx(0.5));
  }

  TEST_CASE("cross-station term enters the comm denominator") {
    ChannelSet ch = fixture::manual_channels(1, {row({1})}, {row({1})});
    ch.cross_h[0][0] = row({2});
    CovarianceSet cov;
    cov.T[0] = {Eigen::MatrixXcd::Constant(1, 1, 3.0)};
    cov.T[1] = {Eigen::MatrixXcd::Constant(1, 1, 0.5)};
    // 3 / (4 * 0.5 + 1)
    CHECK(comm_sinr(0, 0, cov, ch, 1.0) == doctest::Approx(1.0));
  }

  TEST_CASE("radar SINR examples") {
    const ChannelSet ch = fixture::manual_channels(2, {row({1, 0})}, {row({1, 0})});
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(2, 2);
    r(0, 0) = 2.0;
    CHECK(radar_sinr(0, one_station({r}), ch, 1.0) == doctest::Approx(2.0));

    ScenarioConfig cfg = ScenarioConfig::defaults(1, 6, 3);
    const ChannelSet full = generate_channels(cfg);
    const CovarianceSet iso = one_station({1e6 * Eigen::MatrixXcd::Identity(6, 6)});
    CHECK(radar_sinr(0, iso, full, 1e-12) == doctest::Approx(5.0).epsilon(1e-9));
  }

  TEST_CASE("radar cross forms") {
    ScenarioConfig cfg = ScenarioConfig::defaults(1, 4, 1);
    const ChannelSet ch = generate_channels(cfg);
    CovarianceSet cov;
    cov.T[0] = {Eigen::MatrixXcd::Identity(4, 4)};
    std::mt19937_64 rng(3);
    cov.T[1] = {fixture::random_psd(4, 2, rng)};
    const Eigen::MatrixXcd rp = cov.T[1][0];
    const Eigen::MatrixXcd& g = ch.cross_echo[0];
    const double full = (g.adjoint() * g * rp).trace().real();
    const double los = (ch.cross_los[0] * rp * ch.cross_los[0].adjoint())(0, 0).real();
    const double signal = (ch.radar_paths[0][0] * ch.radar_paths[0][0].adjoint())(0, 0).real();
    CHECK(radar_sinr(0, cov, ch, 0.5, RadarCrossForm::FullEcho) == doctest::Approx(signal / (full + 0.5)));
    CHECK(radar_sinr(0, cov, ch, 0.5, RadarCrossForm::LosRow) == doctest::Approx(signal / (los + 0.5)));
  }

  TEST_CASE("average rate") {
    CHECK(avg_rate({1, 1, 1, 1, 1}) == doctest::Approx(1.0));
    CHECK(avg_rate({0, 0, 0}) == 0.0);
    CHECK(avg_rate({10.0}) == doctest::Approx(3.4594316186372973).epsilon(1e-14));
    CHECK_THROWS_AS(avg_rate({-1.0}), std::invalid_argument);
    double prev = -1.0;
    for (double g = 0.0; g < 100.0; g += 0.37) {
      const double v = avg_rate({g, 2.0});
      CHECK(v >= prev);
      prev = v;
    }
  }

  TEST_CASE("detection probability special values") {
    CHECK(std::abs(detection_probability(0.0, 1e-7) - 1e-7) <= 1e-12 * 1e-7);
    CHECK(detection_probability(1e6, 1e-7) >= 1.0 - 1e-9);
    CHECK(miss_probability(0.0, 1e-7) == doctest::Approx(1.0 - 1e-7).epsilon(1e-15));
    CHECK_THROWS_AS(detection_probability(-1.0, 1e-7), std::domain_error);
    CHECK_THROWS_AS(detection_probability(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(detection_probability(1.0, 1.0), std::domain_error);
    CHECK(std::sqrt(-2.0 * std::log(1e-7)) == doctest::Approx(5.6777).epsilon(1e-4));
    for (double b : {0.1, 1.0, 3.0, 5.6777, 9.0}) CHECK(std::abs(marcum_q1(0.0, b) - std::exp(-0.5 * b * b)) <= 1e-12);
  }

  TEST_CASE("Marcum Q matches quadrature of its integral") {
    const double b = std::sqrt(-2.0 * std::log(1e-7));
    const double pd20 = detection_probability(20.0, 1e-7);
    CHECK(std::abs(pd20 - oracle::marcum_q1_integral(std::sqrt(40.0), b)) <= 1e-8);
    for (double a : {0.0, 0.3, 1.0, 2.5, 4.0, 6.0, 9.0, 15.0, 30.0})
      for (double bb : {0.2, 1.0, 3.0, 5.0, 8.0, 12.0})
        CHECK(std::abs(marcum_q1(a, bb) - oracle::marcum_q1_integral(a, bb)) <= 1e-10);
  }

  TEST_CASE("detection probability is monotone") {
    double prev = 0.0, prev_miss = 2.0;
    for (double db = -20.0; db <= 16.0; db += 0.5) {
      const double g = db_to_linear(db);
      const double pd = detection_probability(g, 1e-7);
      const double miss = miss_probability(g, 1e-7);
      CHECK(pd > prev);
      CHECK(miss < prev_miss);
      CHECK(pd + miss == doctest::Approx(1.0).epsilon(1e-12));
      prev = pd;
      prev_miss = miss;
    }
    double prev_pf = 0.0;
    for (double pf : {1e-9, 1e-7, 1e-5, 1e-3, 1e-1}) {
      const double pd = detection_probability(5.0, pf);
      CHECK(pd > prev_pf);
      prev_pf = pd;
    }
  }

  TEST_CASE("metrics are invariant to common scaling and beam phase") {
    ScenarioConfig cfg = ScenarioConfig::defaults(3, 6);
    const ChannelSet ch = generate_channels(cfg);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    CovarianceSet cov, rotated, scaled;
    for (int b = 0; b < kStations; ++b)
      for (int i = 0; i < 3; ++i) {
        Eigen::VectorXcd x(6);
        for (int m = 0; m < 6; ++m) x[m] = {g(rng), g(rng)};
        const Eigen::VectorXcd xr = std::polar(1.0, 0.3 + i) * x;
        cov.T[b].push_back(x * x.adjoint());
        rotated.T[b].push_back(xr * xr.adjoint());
        scaled.T[b].push_back(7.0 * x * x.adjoint());
      }
    const MetricsReport a = compute_metrics(cov, ch, 0.2, 0.3);
    const MetricsReport r = compute_metrics(rotated, ch, 0.2, 0.3);
    const MetricsReport s = compute_metrics(scaled, ch, 1.4, 2.1);
    for (int b = 0; b < kStations; ++b) {
      for (int i = 0; i < 3; ++i) {
        CHECK(r.comm_sinr[b][i] == doctest::Approx(a.comm_sinr[b][i]).epsilon(1e-12));
        CHECK(s.comm_sinr[b][i] == doctest::Approx(a.comm_sinr[b][i]).epsilon(1e-12));
      }
      CHECK(s.radar_sinr[b] == doctest::Approx(a.radar_sinr[b]).epsilon(1e-12));
      CHECK(r.detect_prob[b] == doctest::Approx(a.detect_prob[b]).epsilon(1e-12));
      CHECK(a.detect_prob[b] >= kFalseAlarm);
      CHECK(a.detect_prob[b] <= 1.0);
    }
    CHECK(a.avg_rate >= 0.0);
    CHECK(s.avg_rate == doctest::Approx(a.avg_rate).epsilon(1e-12));
  }

  TEST_CASE("silent station reports no users") {
    const ScenarioConfig cfg = ScenarioConfig::defaults(2, 4);
    const ChannelSet ch = generate_channels(cfg);
    CovarianceSet cov;
    cov.T[0] = {Eigen::MatrixXcd::Identity(4, 4), Eigen::MatrixXcd::Identity(4, 4)};
    const MetricsReport m = compute_metrics(cov, ch, 1.0, 1.0);
    CHECK(m.comm_sinr[1].empty());
    CHECK(m.avg_rate == doctest::Approx(m.station_rate[0]));
    CHECK(m.total_power[0] == doctest::Approx(8.0));
    CHECK(m.per_antenna_power[0] == doctest::Approx(2.0));
    CHECK(cov.valid());
    cov.T[0][0](0, 1) = 1.0;
    CHECK_FALSE(cov.valid());
  }
}
