#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "drivemine/ingest.hpp"

using namespace drivemine;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

Channel make_channel(std::vector<double> times, std::vector<double> values) {
  Channel ch;
  ch.name = "test";
  ch.times = std::move(times);
  ch.values = std::move(values);
  return ch;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("load_csv parses a simple heart-rate file") {
  const auto p = write_temp("dm_hr.csv", "t,bpm\n0,70\n1,71\n2,72\n");
  LoadStats stats;
  const Channel ch = load_csv(p, {"t", "bpm", "hr", "bpm"}, &stats);
  CHECK(ch.size() == 3);
  CHECK(ch.values[0] == 70.0);
  CHECK(ch.values[2] == 72.0);
  CHECK(stats.rows_dropped == 0);
}

TEST_CASE("load_csv rejects duplicate timestamps with the line number") {
  const auto p = write_temp("dm_dup.csv", "t,bpm\n0,70\n1,71\n1,72\n");
  CHECK_THROWS_AS(load_csv(p, {"t", "bpm"}), MalformedRow);
  try {
    load_csv(p, {"t", "bpm"});
  } catch (const MalformedRow& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("load_csv drops non-finite rows and counts them") {
  std::string body = "t,bpm\n";
  for (int i = 0; i < 100; ++i)
    body += std::to_string(i) + (i == 42 ? ",nan\n" : ",70\n");
  const auto p = write_temp("dm_nan.csv", body);
  LoadStats stats;
  const Channel ch = load_csv(p, {"t", "bpm"}, &stats);
  CHECK(ch.size() == 99);
  CHECK(stats.rows_dropped == 1);
}

TEST_CASE("load_csv error paths") {
  CHECK_THROWS_AS(load_csv("/nonexistent/x.csv", {"t", "bpm"}), FileNotFound);
  const auto headers_only = write_temp("dm_empty.csv", "t,bpm\n");
  CHECK_THROWS_AS(load_csv(headers_only, {"t", "bpm"}), EmptyChannel);
  const auto bad = write_temp("dm_bad.csv", "t,bpm\n0,70\n1\n");
  CHECK_THROWS_AS(load_csv(bad, {"t", "bpm"}), MalformedRow);
}

TEST_CASE("resample linear fills the gap") {
  const Channel ch = make_channel({0.0, 2.0}, {1.0, 3.0});
  const Channel out = resample(ch, 1.0, ResampleMethod::linear);
  REQUIRE(out.size() == 3);
  CHECK(out.times[1] == doctest::Approx(1.0));
  CHECK(out.values[0] == doctest::Approx(1.0));
  CHECK(out.values[1] == doctest::Approx(2.0));
  CHECK(out.values[2] == doctest::Approx(3.0));
}

TEST_CASE("resample of an already uniform channel is the identity") {
  const Channel ch = make_channel({0.0, 0.5, 1.0, 1.5}, {1.0, 4.0, 9.0, 16.0});
  const Channel out = resample(ch, 2.0, ResampleMethod::linear);
  REQUIRE(out.size() == ch.size());
  for (std::size_t i = 0; i < ch.size(); ++i) {
    CHECK(out.times[i] == doctest::Approx(ch.times[i]).epsilon(1e-12));
    CHECK(out.values[i] == doctest::Approx(ch.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("resample is idempotent at a fixed rate") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> jitter(0.05, 0.4);
  std::normal_distribution<double> val(0.0, 3.0);
  Channel ch;
  ch.name = "r";
  double t = 0.0;
  for (int i = 0; i < 200; ++i) {
    ch.times.push_back(t);
    ch.values.push_back(val(rng));
    t += jitter(rng);
  }
  for (auto method : {ResampleMethod::linear, ResampleMethod::hold_last}) {
    const Channel once = resample(ch, 10.0, method);
    const Channel twice = resample(once, 10.0, method);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i)
      CHECK(std::abs(once.values[i] - twice.values[i]) < 1e-9);
  }
}

TEST_CASE("resample rejects degenerate channels") {
  CHECK_THROWS_AS(resample(make_channel({1.0}, {2.0}), 1.0, ResampleMethod::linear),
                  EmptyChannel);
}

TEST_CASE("zscore of {1,2,3}") {
  const Channel out = zscore(make_channel({0, 1, 2}, {1.0, 2.0, 3.0}));
  CHECK(out.values[0] == doctest::Approx(-1.0));
  CHECK(out.values[1] == doctest::Approx(0.0));
  CHECK(out.values[2] == doctest::Approx(1.0));
}

TEST_CASE("zscore rejects constant channels") {
  CHECK_THROWS_AS(zscore(make_channel({0, 1, 2}, {5.0, 5.0, 5.0})),
                  DegenerateVariance);
}

TEST_CASE("zscore postconditions hold over random channels") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(2, 400);
  std::normal_distribution<double> val(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = len(rng);
    const double s = scale(rng), off = 10.0 * val(rng);
    Channel ch;
    for (int i = 0; i < n; ++i) {
      ch.times.push_back(i);
      ch.values.push_back(off + s * val(rng));
    }
    Channel z;
    try {
      z = zscore(ch);
    } catch (const DegenerateVariance&) {
      continue;  // astronomically unlikely, but a legal outcome
    }
    double mean = 0.0;
    for (double v : z.values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : z.values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1));
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(sd - 1.0) < 1e-9);
    // idempotence: re-standardizing changes nothing
    const Channel zz = zscore(z);
    for (std::size_t i = 0; i < z.values.size(); ++i)
      CHECK(std::abs(zz.values[i] - z.values[i]) < 1e-9);
  }
}

TEST_CASE("accel_from_speed on a linear ramp") {
  const Channel speed = make_channel({0, 1, 2}, {0.0, 10.0, 20.0});
  const Channel acc = accel_from_speed(speed);
  REQUIRE(acc.size() == 3);
  for (double v : acc.values) CHECK(v == doctest::Approx(10.0));
}

TEST_CASE("accel_from_speed of constant speed is zero") {
  const Channel acc =
      accel_from_speed(make_channel({0, 1, 2, 3}, {50, 50, 50, 50}));
  for (double v : acc.values) CHECK(v == 0.0);
}

TEST_CASE("accel_from_speed exact on interior of any linear ramp") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> slope(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = slope(rng), b = slope(rng);
    Channel speed;
    for (int i = 0; i < 50; ++i) {
      speed.times.push_back(0.5 * i);
      speed.values.push_back(a * (0.5 * i) + b);
    }
    const Channel acc = accel_from_speed(speed);
    for (std::size_t i = 1; i + 1 < acc.size(); ++i)
      CHECK(acc.values[i] == doctest::Approx(a).epsilon(1e-9));
  }
}

TEST_CASE("accel_from_speed error paths") {
  CHECK_THROWS_AS(accel_from_speed(make_channel({0}, {1})), EmptyChannel);
  CHECK_THROWS_AS(accel_from_speed(make_channel({0, 1, 3}, {1, 2, 3})),
                  NonUniformTimeline);
}

TEST_CASE("assemble_matrix keeps column order and shares one timeline") {
  Session s;
  s.participant_id = "p";
  s.channels["a"] = make_channel({0, 1, 2, 3}, {1, 2, 3, 4});
  s.channels["b"] = make_channel({0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0},
                                 {0, 1, 2, 3, 4, 5, 6});
  const KinematicMatrix m = assemble_matrix(s, {"b", "a"}, 2.0);
  CHECK(m.columns == std::vector<std::string>{"b", "a"});
  REQUIRE(m.rows() == 7);
  CHECK(m.values(1, 0) == doctest::Approx(1.0));   // channel b at t=0.5
  CHECK(m.values(1, 1) == doctest::Approx(1.5));   // channel a interpolated
}

TEST_CASE("assemble_matrix single channel is that channel resampled") {
  Session s;
  s.channels["a"] = make_channel({0, 1, 2}, {5, 6, 7});
  const KinematicMatrix m = assemble_matrix(s, {"a"}, 1.0);
  REQUIRE(m.rows() == 3);
  REQUIRE(m.cols() == 1);
  CHECK(m.values(2, 0) == doctest::Approx(7.0));
}

TEST_CASE("assemble_matrix unknown channel") {
  Session s;
  s.channels["a"] = make_channel({0, 1}, {1, 2});
  CHECK_THROWS_AS(assemble_matrix(s, {"a", "missing"}, 1.0), UnknownChannel);
}

TEST_CASE("load_session_dir reads the documented CSV layout") {
  const fs::path dir = fs::temp_directory_path() / "dm_session";
  fs::create_directories(dir);
  {
    std::ofstream t(dir / "telemetry.csv");
    t << "t,ax,ay,wz\n0,0.1,0.0,0.01\n0.01,0.2,0.0,0.01\n";
    std::ofstream h(dir / "hr.csv");
    h << "t,bpm\n0,70\n1,72\n";
    std::ofstream g(dir / "gaze.csv");
    g << "t,gaze_angle_x,gaze_angle_y\n0,0.1,-0.2\n0.033,0.12,-0.18\n";
  }
  const Session s = load_session_dir(dir, "p01");
  CHECK(s.has_channel("ax"));
  CHECK(s.has_channel("ay"));
  CHECK(s.has_channel("wz"));
  CHECK(s.has_channel("hr"));
  CHECK(s.has_channel("gaze_x"));
  CHECK(s.has_channel("gaze_y"));
  CHECK_FALSE(s.has_channel("speed"));
  CHECK(s.participant_id == "p01");
}

}  // TEST_SUITE
