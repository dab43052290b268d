#pragma once

#include <span>
#include <string>

#include "dbaug/pipeline/evaluation.hpp"

namespace dbaug::pipeline {

/// Library version with the git description of the build tree.
std::string version();

/// Fixed-point decimal with `digits` places; locale independent.
std::string fixed(double v, int digits = 6);

/// One row per condition: condition,seeds,mean,std and, when any report
/// was attacked, clean_accuracy,aua,asr (means over seeds).
std::string summary_csv(std::span<const EvalReport> reports);

/// One row per (condition, seed): condition,seed,accuracy and, when
/// attacked, total,clean_correct,flipped,clean_accuracy,aua,asr.
std::string per_seed_csv(std::span<const EvalReport> reports);

/// Aligned table for a terminal, "mean (std)" in percent.
std::string human_summary(std::span<const EvalReport> reports);

}  // namespace dbaug::pipeline
