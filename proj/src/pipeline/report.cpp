#include "dbaug/pipeline/report.hpp"

#include <algorithm>
#include <cstdio>

#ifndef DBAUG_VERSION
#define DBAUG_VERSION "unknown"
#endif

namespace dbaug::pipeline {

std::string version() { return DBAUG_VERSION; }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

namespace {

bool any_attacked(std::span<const EvalReport> reports) {
  return std::any_of(reports.begin(), reports.end(),
                     [](const EvalReport& r) { return r.attacked(); });
}

}  // namespace

std::string summary_csv(std::span<const EvalReport> reports) {
  const bool attacked = any_attacked(reports);
  std::string out = "condition,seeds,mean,std";
  if (attacked) out += ",clean_accuracy,aua,asr";
  out += '\n';
  for (const auto& r : reports) {
    out += r.condition + ',' + std::to_string(r.seeds.size()) + ',' + fixed(r.mean) + ',' +
           fixed(r.std);
    if (attacked) {
      out += r.attacked() ? ',' + fixed(r.mean_clean_accuracy()) + ',' + fixed(r.mean_aua()) +
                                ',' + fixed(r.mean_asr())
                          : std::string(",,,");
    }
    out += '\n';
  }
  return out;
}

std::string per_seed_csv(std::span<const EvalReport> reports) {
  const bool attacked = any_attacked(reports);
  std::string out = "condition,seed,accuracy";
  if (attacked) out += ",total,clean_correct,flipped,clean_accuracy,aua,asr";
  out += '\n';
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      out += r.condition + ',' + std::to_string(r.seeds[i]) + ',' + fixed(r.accuracies[i]);
      if (attacked) {
        if (i < r.attacks.size()) {
          const auto& a = r.attacks[i];
          out += ',' + std::to_string(a.total) + ',' + std::to_string(a.clean_correct) + ',' +
                 std::to_string(a.flipped) + ',' + fixed(a.clean_accuracy()) + ',' +
                 fixed(a.aua()) + ',' + fixed(a.asr());
        } else {
          out += ",,,,,,";
        }
      }
      out += '\n';
    }
  }
  return out;
}

std::string human_summary(std::span<const EvalReport> reports) {
  std::size_t width = 9;
  for (const auto& r : reports) width = std::max(width, r.condition.size());
  const bool attacked = any_attacked(reports);
  auto pad = [&](const std::string& s) { return s + std::string(width - s.size() + 2, ' '); };
  std::string out = pad("condition") + "accuracy";
  if (attacked) out += "        clean     AUA      ASR";
  out += '\n';
  for (const auto& r : reports) {
    std::string acc = fixed(100.0 * r.mean, 1) + " (" + fixed(100.0 * r.std, 1) + ")";
    out += pad(r.condition) + acc;
    if (attacked && r.attacked()) {
      out += std::string(acc.size() < 16 ? 16 - acc.size() : 1, ' ') +
             fixed(100.0 * r.mean_clean_accuracy(), 1) + "%   " + fixed(100.0 * r.mean_aua(), 1) +
             "%   " + fixed(100.0 * r.mean_asr(), 1) + "%";
    }
    out += '\n';
  }
  return out;
}

}  // namespace dbaug::pipeline
