#ifndef UNRANK_SCORER_H_
#define UNRANK_SCORER_H_

// Differentiable relevance scorers f_w(q, d) with closed-form gradients.
//
// kBiEncoder:  f = <E_q q, E_d d>, two hidden_dim x feature_dim projections.
// kCrossMlp:   f = u . tanh(W [q; d] + b), one hidden layer of hidden_dim.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace unrank {

enum class ScorerKind { kBiEncoder, kCrossMlp };

std::string_view ScorerKindName(ScorerKind kind);
// Accepts "bi_encoder" / "cross_mlp". Throws ValidationError otherwise.
ScorerKind ParseScorerKind(std::string_view name);

struct ScorerShape {
  ScorerKind kind = ScorerKind::kBiEncoder;
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 0;

  std::size_t NumWeights() const;
  bool operator==(const ScorerShape&) const = default;
};

// The parameter vector w of a scorer, laid out flat.
//
// BiEncoder: E_q row-major, then E_d row-major.
// CrossMlp:  W row-major (hidden_dim x 2*feature_dim), then b, then u.
class ScorerParams {
 public:
  // Throws ShapeError if the weight count disagrees with the shape, or
  // NumericError on a non-finite weight.
  ScorerParams(ScorerShape shape, std::vector<double> weights);

  static ScorerParams Zeros(const ScorerShape& shape);
  // Each weight uniform in (-0.1, 0.1).
  static ScorerParams RandomInit(const ScorerShape& shape, std::uint64_t seed);

  const ScorerShape& shape() const { return shape_; }
  ScorerKind kind() const { return shape_.kind; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> mutable_weights() { return weights_; }
  std::size_t size() const { return weights_.size(); }

  bool operator==(const ScorerParams&) const = default;

 private:
  ScorerShape shape_;
  std::vector<double> weights_;
};

// A frozen copy of the trained model M, used as the distillation teacher.
class TeacherSnapshot {
 public:
  explicit TeacherSnapshot(ScorerParams params) : params_(std::move(params)) {}
  const ScorerParams& params() const { return params_; }

 private:
  const ScorerParams params_;
};

// f_w(q, d). Throws ShapeError on a feature length mismatch.
double Score(const ScorerParams& params, std::span<const double> query,
             std::span<const double> doc);

// Returns f_w(q, d) and adds scale * df/dw into grad (length params.size()).
// Throws NumericError naming the layer if an intermediate is non-finite.
double AccumulateScoreGradient(const ScorerParams& params,
                               std::span<const double> query,
                               std::span<const double> doc, double scale,
                               std::span<double> grad);

struct PairFeatures {
  std::span<const double> query;
  std::span<const double> doc;
};

// Loss over the student scores of a list of pairs. Writes dloss/dscore for
// every pair into the second argument and returns the loss.
using PairLoss = std::function<double(std::span<const double> scores,
                                      std::span<double> dscores)>;

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

// dloss/dw by the chain rule through each pair's score.
LossGradient ComputeLossGradient(const ScorerParams& params,
                                 std::span<const PairFeatures> pairs,
                                 const PairLoss& loss);

// w - lr * grad. Requires lr > 0.
ScorerParams SgdStep(const ScorerParams& params, std::span<const double> grad,
                     double lr);
// In-place variant of SgdStep.
void ApplySgdStep(ScorerParams& params, std::span<const double> grad,
                  double lr);

// Checkpoint file: JSON with format_version, kind, shape and weights.
std::string CheckpointToJson(const ScorerParams& params);
ScorerParams CheckpointFromJson(const std::string& text);
void SaveCheckpoint(const std::filesystem::path& path,
                    const ScorerParams& params);
ScorerParams LoadCheckpoint(const std::filesystem::path& path);

}  // namespace unrank

#endif  // UNRANK_SCORER_H_
