#include "stplan/obstacle.hpp"

#include <gtest/gtest.h>

using namespace stplan;

namespace {

ObstacleState make(DrivingStyle style, double s0, double v0, double a0 = 0.0,
                   std::uint64_t seed = 7) {
  ObstacleState o;
  o.s0 = s0;
  o.v0 = v0;
  o.a0 = a0;
  o.style = style;
  o.seed = seed;
  return o;
}

TEST(PredictPosition, NormalIsLinear) {
  EXPECT_DOUBLE_EQ(predict_position(make(DrivingStyle::Normal, 10.0, 5.0), 1.0), 15.0);
}

TEST(PredictPosition, AggressiveIsQuadratic) {
  EXPECT_DOUBLE_EQ(predict_position(make(DrivingStyle::Aggressive, 0.0, 10.0, 2.0), 2.0), 24.0);
}

TEST(PredictPosition, UncertainIsDeterministicUnderSeed) {
  const auto o = make(DrivingStyle::Uncertain, 5.0, 12.0, 0.0, 99);
  for (double t : {0.3, 1.7, 4.9}) {
    EXPECT_EQ(predict_position(o, t), predict_position(o, t));
    EXPECT_EQ(predict_speed(o, t), predict_speed(o, t));
  }
  auto other = o;
  other.seed = 100;
  EXPECT_NE(predict_position(o, 4.9), predict_position(other, 4.9));
}

TEST(PredictPosition, NegativeTimeThrows) {
  EXPECT_THROW(predict_position(make(DrivingStyle::Normal, 0.0, 1.0), -0.1), Error);
}

TEST(PredictPosition, AggressiveStopsAtZeroSpeed) {
  // v0 = 4, a0 = -2 stops at t = 2 having travelled 4 m.
  const auto o = make(DrivingStyle::Aggressive, 0.0, 4.0, -2.0);
  EXPECT_DOUBLE_EQ(predict_position(o, 2.0), 4.0);
  EXPECT_DOUBLE_EQ(predict_position(o, 5.0), 4.0);
  EXPECT_DOUBLE_EQ(predict_speed(o, 5.0), 0.0);
}

TEST(PredictTrack, SampleCountAndValues) {
  const auto o = make(DrivingStyle::Normal, 3.0, 5.0);
  const auto track = predict_track(o, 2.0, 1.0);
  ASSERT_EQ(track.samples.size(), 3u);
  EXPECT_DOUBLE_EQ(track.samples[0].l, 3.0);
  EXPECT_DOUBLE_EQ(track.samples[1].l, 8.0);
  EXPECT_DOUBLE_EQ(track.samples[2].l, 13.0);
  for (const auto& s : track.samples) EXPECT_DOUBLE_EQ(s.d, o.d0);
}

TEST(PredictTrack, MonotoneThenConstantUnderBraking) {
  const auto o = make(DrivingStyle::Aggressive, 0.0, 4.0, -2.0);
  const auto track = predict_track(o, 5.0, 0.1);
  double prev = -1.0;
  for (const auto& s : track.samples) {
    EXPECT_GE(s.l, prev - 1e-12);
    prev = s.l;
  }
  EXPECT_DOUBLE_EQ(track.samples.back().l, 4.0);
}

TEST(PredictTrack, InvalidHorizonThrows) {
  const auto o = make(DrivingStyle::Normal, 0.0, 1.0);
  EXPECT_THROW(predict_track(o, 0.0, 0.1), Error);
  EXPECT_THROW(predict_track(o, 1.0, 0.0), Error);
  EXPECT_THROW(predict_track(o, 1.0, 2.0), Error);
}

TEST(PredictTrack, InterpolationCoversHorizon) {
  const auto o = make(DrivingStyle::Normal, 0.0, 10.0);
  const auto track = predict_track(o, 3.0, 0.5);
  EXPECT_NEAR(track.at(1.25).l, 12.5, 1e-12);
  EXPECT_THROW(track.at(3.5), Error);
}

TEST(RelativeVelocity, SignsAndStyles) {
  EXPECT_DOUBLE_EQ(relative_velocity(make(DrivingStyle::Normal, 0, 10.0), 15.0, 0.0), 5.0);
  EXPECT_DOUBLE_EQ(relative_velocity(make(DrivingStyle::Normal, 0, 10.0), 10.0, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_velocity(make(DrivingStyle::Aggressive, 0, 8.0, 1.0), 10.0, 3.0), -1.0);
}

TEST(Styles, AggressiveWithZeroAccelEqualsNormal) {
  const auto agg = make(DrivingStyle::Aggressive, 4.0, 9.0, 0.0);
  const auto nor = make(DrivingStyle::Normal, 4.0, 9.0);
  for (double t = 0.0; t <= 8.0; t += 0.37)
    EXPECT_DOUBLE_EQ(predict_position(agg, t), predict_position(nor, t));
}

TEST(Styles, UncertainSpeedStaysClamped) {
  const auto o = make(DrivingStyle::Uncertain, 0.0, 1.0, 0.0, 1234);
  for (double t = 0.0; t <= 30.0; t += 0.13) {
    const double v = predict_speed(o, t);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 40.0);
  }
}

TEST(Styles, UncertainPositionIsContinuous) {
  const auto o = make(DrivingStyle::Uncertain, 0.0, 10.0, 0.0, 5);
  double prev = predict_position(o, 0.0);
  for (double t = 0.01; t <= 5.0; t += 0.01) {
    const double s = predict_position(o, t);
    EXPECT_NEAR(s, prev, 41.0 * 0.01);
    prev = s;
  }
}

}  // namespace
