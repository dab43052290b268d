#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dbaug/model/vocabulary.hpp"
#include "dbaug/numerics/tape.hpp"

namespace dbaug::training {

/// Predictions are clamped to this floor before taking logs.
inline constexpr double kLogFloor = 1e-12;
/// Allowed distance of a prediction's total mass from 1.
inline constexpr double kSimplexTolerance = 1e-6;

/// (1 - eps) * onehot(true_class) + eps / num_classes.
std::vector<double> smoothed_target(std::size_t true_class, std::size_t num_classes, double eps);

/// -sum_i target_i * log(max(predicted_i, kLogFloor)); `predicted` must lie on
/// the simplex.
double cross_entropy(std::span<const double> predicted, std::span<const double> target);

/// Label-smoothed classification loss over |C| classes.
double classification_loss(std::span<const double> predicted, std::size_t true_class, double eps);

/// Sum over steps of the label-smoothed token cross-entropy, with the
/// uniform component spread over the whole vocabulary.
double reconstruction_loss(std::span<const std::vector<double>> per_step_predictions,
                           std::span<const model::TokenId> true_tokens, double eps);

/// Recorded -sum_rows sum_j targets[r, j] * log_softmax(logits)[r, j].
/// `targets` must have the same shape as `logits`.
nx::Var soft_cross_entropy(nx::Tape& tape, nx::Var logits, const nx::Tensor& targets);

}  // namespace dbaug::training
