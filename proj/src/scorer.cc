#include "unrank/scorer.h"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "unrank/error.h"
#include "unrank/io.h"
#include "unrank/rng.h"

namespace unrank {

namespace {

constexpr int kCheckpointVersion = 1;

void CheckFeatures(const ScorerShape& shape, std::span<const double> query,
                   std::span<const double> doc) {
  if (query.size() != shape.feature_dim || doc.size() != shape.feature_dim) {
    std::ostringstream msg;
    msg << "feature length mismatch: scorer expects " << shape.feature_dim
        << ", got query " << query.size() << " and doc " << doc.size();
    throw ShapeError(msg.str());
  }
}

void CheckFinite(std::span<const double> values, const char* layer) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value in ") + layer);
    }
  }
}

// out = M x for a row-major rows x cols block starting at m.
void MatVec(const double* m, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::vector<double>& out) {
  out.assign(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    double acc = 0.0;
    for (std::size_t k = 0; k < cols; ++k) acc += row[k] * x[k];
    out[i] = acc;
  }
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Forward pass; fills the activations the backward pass needs. When grad is
// non-empty also adds scale * df/dw into it.
double Forward(const ScorerParams& params, std::span<const double> query,
               std::span<const double> doc, double scale,
               std::span<double> grad) {
  const ScorerShape& shape = params.shape();
  CheckFeatures(shape, query, doc);
  const std::size_t f = shape.feature_dim;
  const std::size_t h = shape.hidden_dim;
  const double* w = params.weights().data();
  thread_local std::vector<double> a, b;

  if (shape.kind == ScorerKind::kBiEncoder) {
    MatVec(w, h, f, query, a);
    MatVec(w + h * f, h, f, doc, b);
    const double score = Dot(a, b);
    if (!std::isfinite(score)) {
      CheckFinite(a, "bi_encoder.query_projection");
      CheckFinite(b, "bi_encoder.doc_projection");
      throw NumericError("non-finite value in bi_encoder.score");
    }
    if (!grad.empty()) {
      double* gq = grad.data();
      double* gd = grad.data() + h * f;
      for (std::size_t i = 0; i < h; ++i) {
        const double bi = scale * b[i];
        const double ai = scale * a[i];
        for (std::size_t k = 0; k < f; ++k) {
          gq[i * f + k] += bi * query[k];
          gd[i * f + k] += ai * doc[k];
        }
      }
    }
    return score;
  }

  // Cross MLP: z = W [q; d] + b, score = u . tanh(z).
  const std::size_t in = 2 * f;
  const double* bias = w + h * in;
  const double* u = bias + h;
  a.assign(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    const double* row = w + j * in;
    double acc = 0.0;
    for (std::size_t k = 0; k < f; ++k) acc += row[k] * query[k];
    for (std::size_t k = 0; k < f; ++k) acc += row[f + k] * doc[k];
    const double z = acc + bias[j];
    if (!std::isfinite(z)) {
      throw NumericError("non-finite value in cross_mlp.hidden");
    }
    a[j] = std::tanh(z);
  }
  double score = 0.0;
  for (std::size_t j = 0; j < h; ++j) score += u[j] * a[j];
  if (!std::isfinite(score)) {
    throw NumericError("non-finite value in cross_mlp.output");
  }
  if (!grad.empty()) {
    double* gw = grad.data();
    double* gb = gw + h * in;
    double* gu = gb + h;
    for (std::size_t j = 0; j < h; ++j) {
      const double delta = scale * u[j] * (1.0 - a[j] * a[j]);
      gu[j] += scale * a[j];
      gb[j] += delta;
      double* row = gw + j * in;
      for (std::size_t k = 0; k < f; ++k) row[k] += delta * query[k];
      for (std::size_t k = 0; k < f; ++k) row[f + k] += delta * doc[k];
    }
  }
  return score;
}

}  // namespace

std::string_view ScorerKindName(ScorerKind kind) {
  return kind == ScorerKind::kBiEncoder ? "bi_encoder" : "cross_mlp";
}

ScorerKind ParseScorerKind(std::string_view name) {
  if (name == "bi_encoder") return ScorerKind::kBiEncoder;
  if (name == "cross_mlp") return ScorerKind::kCrossMlp;
  throw ValidationError("unknown scorer kind '" + std::string(name) + "'");
}

std::size_t ScorerShape::NumWeights() const {
  if (kind == ScorerKind::kBiEncoder) return 2 * hidden_dim * feature_dim;
  return hidden_dim * 2 * feature_dim + 2 * hidden_dim;
}

ScorerParams::ScorerParams(ScorerShape shape, std::vector<double> weights)
    : shape_(shape), weights_(std::move(weights)) {
  if (shape_.feature_dim == 0 || shape_.hidden_dim == 0) {
    throw ShapeError("scorer dimensions must be positive");
  }
  if (weights_.size() != shape_.NumWeights()) {
    std::ostringstream msg;
    msg << ScorerKindName(shape_.kind) << " expects " << shape_.NumWeights()
        << " weights, got " << weights_.size();
    throw ShapeError(msg.str());
  }
  CheckFinite(weights_, "weights");
}

ScorerParams ScorerParams::Zeros(const ScorerShape& shape) {
  return ScorerParams(shape, std::vector<double>(shape.NumWeights(), 0.0));
}

ScorerParams ScorerParams::RandomInit(const ScorerShape& shape,
                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(shape.NumWeights());
  for (auto& x : w) x = rng.Uniform(-0.1, 0.1);
  return ScorerParams(shape, std::move(w));
}

double Score(const ScorerParams& params, std::span<const double> query,
             std::span<const double> doc) {
  return Forward(params, query, doc, 0.0, {});
}

double AccumulateScoreGradient(const ScorerParams& params,
                               std::span<const double> query,
                               std::span<const double> doc, double scale,
                               std::span<double> grad) {
  if (grad.size() != params.size()) {
    throw ShapeError("gradient buffer length does not match weight count");
  }
  return Forward(params, query, doc, scale, grad);
}

LossGradient ComputeLossGradient(const ScorerParams& params,
                                 std::span<const PairFeatures> pairs,
                                 const PairLoss& loss) {
  std::vector<double> scores(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    scores[i] = Score(params, pairs[i].query, pairs[i].doc);
  }
  std::vector<double> dscores(pairs.size(), 0.0);
  LossGradient out;
  out.loss = loss(scores, dscores);
  if (!std::isfinite(out.loss)) throw NumericError("non-finite loss");
  CheckFinite(dscores, "loss");
  out.grad.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (dscores[i] == 0.0) continue;
    Forward(params, pairs[i].query, pairs[i].doc, dscores[i], out.grad);
  }
  return out;
}

void ApplySgdStep(ScorerParams& params, std::span<const double> grad,
                  double lr) {
  if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
  auto w = params.mutable_weights();
  if (grad.size() != w.size()) {
    throw ShapeError("gradient length does not match weight count");
  }
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * grad[i];
}

ScorerParams SgdStep(const ScorerParams& params, std::span<const double> grad,
                     double lr) {
  ScorerParams out = params;
  ApplySgdStep(out, grad, lr);
  return out;
}

std::string CheckpointToJson(const ScorerParams& params) {
  nlohmann::ordered_json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = std::string(ScorerKindName(params.kind()));
  j["feature_dim"] = params.shape().feature_dim;
  j["hidden_dim"] = params.shape().hidden_dim;
  j["weights"] = std::vector<double>(params.weights().begin(),
                                     params.weights().end());
  return j.dump() + "\n";
}

ScorerParams CheckpointFromJson(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kCheckpointVersion) {
      throw ValidationError("unsupported checkpoint format_version");
    }
    ScorerShape shape;
    shape.kind = ParseScorerKind(j.at("kind").get<std::string>());
    shape.feature_dim = j.at("feature_dim").get<std::size_t>();
    shape.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    return ScorerParams(shape, j.at("weights").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void SaveCheckpoint(const std::filesystem::path& path,
                    const ScorerParams& params) {
  WriteTextFile(path, CheckpointToJson(params));
}

ScorerParams LoadCheckpoint(const std::filesystem::path& path) {
  return CheckpointFromJson(ReadTextFile(path));
}

}  // namespace unrank
