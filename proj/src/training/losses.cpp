#include "dbaug/training/losses.hpp"

#include <algorithm>
#include <cmath>

#include "dbaug/error.hpp"

namespace dbaug::training {

namespace {

void require_eps(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw ValueError("label smoothing must lie in [0, 1], got " + std::to_string(eps));
  }
}

void require_simplex(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < -kSimplexTolerance) {
      throw ValueError(std::string(what) + ": prediction has a negative or non-finite entry");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw ValueError(std::string(what) + ": prediction sums to " + std::to_string(total) +
                     ", not 1");
  }
}

}  // namespace

std::vector<double> smoothed_target(std::size_t true_class, std::size_t num_classes, double eps) {
  require_eps(eps);
  if (true_class >= num_classes) {
    throw ValueError("class " + std::to_string(true_class) + " out of range for " +
                     std::to_string(num_classes) + " classes");
  }
  std::vector<double> t(num_classes, eps / static_cast<double>(num_classes));
  t[true_class] += 1.0 - eps;
  return t;
}

double cross_entropy(std::span<const double> predicted, std::span<const double> target) {
  if (predicted.size() != target.size()) {
    throw ShapeError("cross_entropy: prediction of size " + std::to_string(predicted.size()) +
                     " against target of size " + std::to_string(target.size()));
  }
  require_simplex(predicted, "cross_entropy");
  double loss = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (target[i] == 0.0) continue;
    loss -= target[i] * std::log(std::max(predicted[i], kLogFloor));
  }
  return loss;
}

double classification_loss(std::span<const double> predicted, std::size_t true_class, double eps) {
  require_simplex(predicted, "classification_loss");
  return cross_entropy(predicted, smoothed_target(true_class, predicted.size(), eps));
}

double reconstruction_loss(std::span<const std::vector<double>> per_step_predictions,
                           std::span<const model::TokenId> true_tokens, double eps) {
  if (per_step_predictions.size() != true_tokens.size()) {
    throw ShapeError("reconstruction_loss: " + std::to_string(per_step_predictions.size()) +
                     " predictions for " + std::to_string(true_tokens.size()) + " target tokens");
  }
  double loss = 0.0;
  for (std::size_t s = 0; s < true_tokens.size(); ++s) {
    const auto& p = per_step_predictions[s];
    require_simplex(p, "reconstruction_loss");
    loss += cross_entropy(p, smoothed_target(true_tokens[s], p.size(), eps));
  }
  return loss;
}

nx::Var soft_cross_entropy(nx::Tape& tape, nx::Var logits, const nx::Tensor& targets) {
  if (logits.shape() != targets.shape()) {
    throw ShapeError("soft_cross_entropy: logits " + nx::shape_str(logits.shape()) +
                     " against targets " + nx::shape_str(targets.shape()));
  }
  nx::Var weighted = nx::mul(nx::log_softmax(logits), tape.constant(targets));
  return nx::scale(nx::sum(weighted), -1.0);
}

}  // namespace dbaug::training
