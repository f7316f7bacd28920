#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "test_util.h"
#include "unrank/error.h"
#include "unrank/scorer.h"

namespace unrank {
namespace {

TEST(ScorerTest, BiEncoderIdentityProjections) {
  const ScorerParams w({ScorerKind::kBiEncoder, 2, 2}, {1, 0, 0, 1, 1, 0, 0, 1});
  const double e1[] = {1, 0}, e2[] = {0, 1};
  EXPECT_EQ(Score(w, e1, e1), 1.0);
  EXPECT_EQ(Score(w, e1, e2), 0.0);
}

TEST(ScorerTest, CrossMlpHandValue) {
  // W = 0, b = (0.5, -1), u = (2, 3): score = 2 tanh(0.5) + 3 tanh(-1).
  const ScorerShape shape{ScorerKind::kCrossMlp, 2, 2};
  std::vector<double> weights(shape.NumWeights(), 0.0);
  weights[8] = 0.5;
  weights[9] = -1.0;
  weights[10] = 2.0;
  weights[11] = 3.0;
  const ScorerParams w(shape, weights);
  const double q[] = {0.3, -0.7}, d[] = {1.1, 2.0};
  EXPECT_NEAR(Score(w, q, d), 2.0 * std::tanh(0.5) + 3.0 * std::tanh(-1.0),
              1e-15);
  EXPECT_EQ(Score(ScorerParams::Zeros(shape), q, d), 0.0);
}

TEST(ScorerTest, DimensionMismatchIsShapeError) {
  const auto w = ScorerParams::RandomInit({ScorerKind::kBiEncoder, 3, 2}, 1);
  const double q[] = {1, 2, 3}, d[] = {1, 2};
  EXPECT_THROW(Score(w, q, d), ShapeError);
  EXPECT_THROW(ScorerParams({ScorerKind::kBiEncoder, 3, 2}, {1.0}),
               ShapeError);
}

TEST(ScorerTest, NonFiniteNamesTheLayer) {
  const double inf = std::numeric_limits<double>::infinity();
  const double q[] = {inf, 0}, d[] = {1, 1};
  for (auto kind : {ScorerKind::kBiEncoder, ScorerKind::kCrossMlp}) {
    const auto w = ScorerParams::RandomInit({kind, 2, 2}, 5);
    try {
      Score(w, q, d);
      FAIL();
    } catch (const NumericError& e) {
      EXPECT_NE(std::string(e.what()).find(ScorerKindName(kind)),
                std::string::npos)
          << e.what();
    }
  }
}

TEST(ScorerTest, ScoreIsPureAndBilinear) {
  const auto w = ScorerParams::RandomInit({ScorerKind::kBiEncoder, 4, 3}, 9);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> q(4), d(4);
    for (auto& x : q) x = rng.Uniform(-1, 1);
    for (auto& x : d) x = rng.Uniform(-1, 1);
    const double s = Score(w, q, d);
    EXPECT_EQ(s, Score(w, q, d));
    const double alpha = rng.Uniform(-3, 3);
    std::vector<double> scaled = q;
    for (auto& x : scaled) x *= alpha;
    EXPECT_NEAR(Score(w, scaled, d), alpha * s, 1e-12);
  }
}

TEST(ScorerTest, BiEncoderGradientIsOuterProduct) {
  // d score / d E_q = (E_d d) ⊗ q.
  const ScorerParams w({ScorerKind::kBiEncoder, 2, 1}, {0.5, -1.0, 2.0, 3.0});
  const double q[] = {1.5, 0.5}, d[] = {-1.0, 2.0};
  std::vector<double> grad(4, 0.0);
  AccumulateScoreGradient(w, q, d, 1.0, grad);
  const double ed = 2.0 * -1.0 + 3.0 * 2.0;
  const double eq = 0.5 * 1.5 + -1.0 * 0.5;
  EXPECT_DOUBLE_EQ(grad[0], ed * q[0]);
  EXPECT_DOUBLE_EQ(grad[1], ed * q[1]);
  EXPECT_DOUBLE_EQ(grad[2], eq * d[0]);
  EXPECT_DOUBLE_EQ(grad[3], eq * d[1]);
}

TEST(ScorerTest, InactiveHingeHasZeroGradient) {
  const auto w = ScorerParams::RandomInit({ScorerKind::kCrossMlp, 3, 4}, 3);
  const double q[] = {0.1, 0.2, 0.3}, d[] = {0.3, 0.2, 0.1};
  const double c = Score(w, q, d) + 1.0;
  const PairFeatures pair[] = {{q, d}};
  const auto g = ComputeLossGradient(
      w, pair, [c](std::span<const double> s, std::span<double> ds) {
        ds[0] = s[0] > c ? 1.0 : 0.0;
        return std::max(0.0, s[0] - c);
      });
  EXPECT_EQ(g.loss, 0.0);
  for (double x : g.grad) EXPECT_EQ(x, 0.0);
}

TEST(ScorerTest, GradientMatchesCentralDifferences) {
  EXPECT_LT(testing::MaxGradientError(ScorerKind::kBiEncoder, 100, 1), 1e-4);
  EXPECT_LT(testing::MaxGradientError(ScorerKind::kCrossMlp, 100, 2), 1e-4);
}

TEST(SgdTest, Arithmetic) {
  const ScorerParams w({ScorerKind::kBiEncoder, 1, 1}, {1.0, 4.0});
  const double g[] = {2.0, 0.0};
  const ScorerParams next = SgdStep(w, g, 0.5);
  EXPECT_EQ(next.weights()[0], 0.0);
  EXPECT_EQ(next.weights()[1], 4.0);
  const double zero[] = {0.0, 0.0};
  EXPECT_EQ(SgdStep(w, zero, 0.1), w);
  EXPECT_THROW(SgdStep(w, g, 0.0), ValidationError);
}

TEST(SgdTest, ConvergesOnConvexQuadratic) {
  // L(w) = sum_i c_i (w_i - m_i)^2 with minimiser m.
  const double c[] = {0.5, 2.0, 1.0}, m[] = {3.0, -1.0, 0.25};
  ScorerParams w({ScorerKind::kBiEncoder, 3, 1},
                 std::vector<double>(6, 0.0));
  std::vector<double> grad(6, 0.0);
  for (int step = 0; step < 2000; ++step) {
    for (int i = 0; i < 3; ++i) grad[i] = 2.0 * c[i] * (w.weights()[i] - m[i]);
    ApplySgdStep(w, grad, 0.1);
  }
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(w.weights()[i], m[i], 1e-6);
}

TEST(CheckpointTest, RoundTripIsExact) {
  for (auto kind : {ScorerKind::kBiEncoder, ScorerKind::kCrossMlp}) {
    const auto w = ScorerParams::RandomInit({kind, 5, 3}, 77);
    EXPECT_EQ(CheckpointFromJson(CheckpointToJson(w)), w);
  }
  const auto path = std::filesystem::temp_directory_path() / "unrank_ckpt.json";
  const auto w = ScorerParams::RandomInit({ScorerKind::kCrossMlp, 2, 2}, 4);
  SaveCheckpoint(path, w);
  EXPECT_EQ(LoadCheckpoint(path), w);
  std::filesystem::remove(path);
}

TEST(CheckpointTest, RejectsMalformedInput) {
  EXPECT_THROW(CheckpointFromJson("{"), ValidationError);
  EXPECT_THROW(CheckpointFromJson(R"({"format_version": 99})"),
               ValidationError);
}

}  // namespace
}  // namespace unrank
