// Acceptance checks. Each criterion prints one PASS/FAIL line with the
// measured quantities. Usage: acceptance [criterion numbers...] (default all).
// Criteria 7-10 share one experiment run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dbaug/boundary/boundary.hpp"
#include "dbaug/cli/cli.hpp"
#include "dbaug/decoding/decoding.hpp"
#include "dbaug/pipeline/augmentation.hpp"
#include "dbaug/pipeline/corpus.hpp"
#include "dbaug/pipeline/experiment.hpp"
#include "dbaug/pipeline/report.hpp"
#include "dbaug/training/trainer.hpp"
#include "fixtures.hpp"
#include "gradcases.hpp"
#include "oracles.hpp"

namespace db = dbaug::boundary;
namespace dd = dbaug::decoding;
namespace dm = dbaug::model;
namespace dp = dbaug::pipeline;
namespace tr = dbaug::training;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass;
  std::string detail;
};

Outcome report(int id, const std::string& name, Outcome o) {
  std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  return o;
}

// 1
Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::size_t ok = 0;
  double worst = 0.0;
  std::string worst_name;
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < 100; ++i) {
    auto c = oracle::make_grad_case(i, rng);
    const double err = oracle::gradient_error(c.f, c.inputs, 1e-5);
    ++seen[c.name];
    if (err <= 1e-4) ++ok;
    if (err > worst) {
      worst = err;
      worst_name = c.name;
    }
  }
  const double secs = seconds_since(t0);
  return {ok == 100 && secs < 10.0,
          std::to_string(ok) + "/100 cases within 1e-4 over " + std::to_string(seen.size()) +
              " ops, worst " + fmt("%.2e", worst) + " (" + worst_name + "), " + fmt("%.2f", secs) +
              " s"};
}

// 2
Outcome closed_form() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const std::size_t classes = 2 + trial % 4, dim = 3 + trial % 14;
    dm::ClassifierParams pi{oracle::random_tensor({classes, dim}, rng, -2.0, 2.0),
                            oracle::random_tensor({classes}, rng)};
    std::vector<std::vector<double>> W(classes, std::vector<double>(dim));
    std::vector<double> b(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      b[c] = pi.bias[c];
      for (std::size_t j = 0; j < dim; ++j) W[c][j] = pi.weight.at(c, j);
    }
    const auto zt = oracle::random_tensor({dim}, rng, -3.0, 3.0);
    const dm::LatentVector z{zt.storage()};
    const double lambda = trial % 2 ? 0.1 : 0.5;
    for (std::size_t n : {1u, 3u, 10u}) {
      auto ref = z.values;
      for (std::size_t i = 0; i < n; ++i) ref = oracle::boundary_step(ref, W, b, lambda);
      const auto got = db::modify_latent(z, pi, {lambda, n});
      for (std::size_t j = 0; j < dim; ++j) worst = std::max(worst, std::abs(got.values[j] - ref[j]));
      ++cases;
    }
  }
  return {worst <= 1e-10,
          std::to_string(cases) + " (head, z, n) cases for n in {1,3,10}, max abs deviation " +
              fmt("%.2e", worst)};
}

// 3
Outcome boundary_approach() {
  const auto corpus = dp::generate_toy_corpus(100, 1);
  const auto vocab = dp::build_vocabulary(corpus);
  const auto seqs = dp::to_sequences(corpus, vocab);
  dm::ModelConfig mc;
  mc.vocab_size = vocab.size();
  tr::TrainConfig tc;
  const auto fit = tr::train_stage1(seqs, mc, tc);
  std::vector<dm::LatentVector> latents;
  for (const auto& s : seqs) latents.push_back(dm::encode(s.tokens, fit.encoder));

  const std::size_t steps = 10;
  double lambda = 0.1, frac = 0.0;
  int halvings = 0;
  for (; halvings <= 10; ++halvings, lambda /= 2.0) {
    std::size_t good = 0;
    for (const auto& z : latents) {
      const auto traj = db::modify_latent_trajectory(z, fit.classifier, {lambda, steps});
      bool mono = true;
      double prev = db::kl_to_uniform(dm::classify(traj[0], fit.classifier));
      for (std::size_t i = 1; i < traj.size(); ++i) {
        const double kl = db::kl_to_uniform(dm::classify(traj[i], fit.classifier));
        mono = mono && kl <= prev + 1e-15;
        prev = kl;
      }
      good += mono;
    }
    frac = double(good) / double(latents.size());
    if (frac >= 0.95) break;
  }
  return {frac >= 0.95, fmt("%.1f%%", 100.0 * frac) + " of " + std::to_string(latents.size()) +
                            " training latents non-increasing over " + std::to_string(steps) +
                            " steps; final lambda " + fmt("%g", lambda) + " after " +
                            std::to_string(halvings) + " halvings"};
}

// 4
Outcome mid_k_exactness() {
  struct Case {
    std::vector<double> p;
    std::size_t k, kp;
    double t;
  };
  std::vector<Case> cases{{{0.4, 0.3, 0.15, 0.1, 0.05}, 4, 2, 0.8},
                          {{0.97, 0.01, 0.01, 0.01}, 4, 1, 0.5},
                          {{0.9, 0.08, 0.02}, 2, 1, 0.5}};
  std::mt19937_64 rng(99);
  while (cases.size() < 24) {
    const std::size_t v = 4 + rng() % 5;
    std::vector<double> logits(v);
    const double spread = (cases.size() % 2) ? 0.3 : 2.5;
    for (auto& x : logits) x = std::normal_distribution<double>(0.0, spread)(rng);
    const std::size_t k = 2 + rng() % (v - 1);
    const std::size_t kp = 1 + rng() % (k - 1);
    const double t = std::uniform_real_distribution<double>(0.2, 0.95)(rng);
    cases.push_back({oracle::softmax(logits), k, kp, t});
  }
  const std::size_t draws = 100000;
  std::size_t flat_cases = 0, skew_cases = 0, violations = 0, within = 0;
  double worst = 0.0;
  dbaug::Rng sampler(5);
  for (const auto& c : cases) {
    const auto ref = oracle::mid_k_distribution(c.p, c.k, c.kp, c.t);
    std::vector<std::size_t> order(c.p.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return c.p[a] > c.p[b]; });
    double top = 0.0, head = 0.0;
    for (std::size_t i = 0; i < c.k; ++i) top += c.p[order[i]];
    for (std::size_t i = 0; i < c.kp; ++i) head += c.p[order[i]] / top;
    const bool flat = head < c.t;
    (flat ? flat_cases : skew_cases)++;
    std::vector<double> f(c.p.size(), 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
      const auto tok = dd::mid_k_sample(c.p, c.k, c.kp, c.t, sampler);
      f[tok] += 1.0;
      if (flat) {
        for (std::size_t i = 0; i < c.kp; ++i) violations += tok == order[i];
      }
    }
    for (auto& x : f) x /= double(draws);
    const double tv = oracle::total_variation(f, ref);
    worst = std::max(worst, tv);
    within += tv <= 0.01;
  }
  const bool pass = within == cases.size() && violations == 0 && flat_cases > 0 && skew_cases > 0 &&
                    cases.size() >= 20;
  return {pass, std::to_string(within) + "/" + std::to_string(cases.size()) + " cases (" +
                    std::to_string(flat_cases) + " flat, " + std::to_string(skew_cases) +
                    " skewed) within TV 0.01 over 1e5 draws, worst TV " + fmt("%.4f", worst) +
                    "; " + std::to_string(violations) + " top-k' emissions in the flat branch"};
}

// 5
Outcome reductions() {
  // beam(1) vs greedy on random latents through a random decoder.
  dm::ModelConfig c;
  c.vocab_size = 40;
  c.latent_dim = 16;
  c.max_len = 12;
  dbaug::Rng init(3);
  const auto gamma = dm::init_decoder(c, init);
  dd::DecodingStrategy greedy;
  greedy.variant = dd::Greedy{};
  greedy.max_len = c.max_len;
  std::mt19937_64 rng(4);
  std::size_t equal = 0, nonempty = 0;
  for (int i = 0; i < 100; ++i) {
    const auto zt = oracle::random_tensor({c.latent_dim}, rng, -3.0, 3.0);
    const dm::LatentVector z{zt.storage()};
    dbaug::Rng r(1);
    const auto g = dd::decode_sequence(z, gamma, greedy, r);
    equal += g == dd::beam_decode(z, gamma, 1, c.max_len);
    nonempty += !g.empty();
  }

  // Frequency matches over a handful of distributions.
  const std::size_t draws = 200000;
  double worst_topk = 0.0, worst_midk = 0.0;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> logits(10);
    for (auto& x : logits) x = std::normal_distribution<double>(0.0, 1.0 + i)(rng);
    const auto p = oracle::softmax(logits);
    dbaug::Rng a(10 + i), b(20 + i);
    oracle::Ancestral anc(30 + i);
    const auto topk_full = oracle::frequencies(10, draws, [&] { return dd::top_k_sample(p, 10, a); });
    const auto ancestral = oracle::frequencies(10, draws, [&] { return anc(p); });
    worst_topk = std::max(worst_topk, oracle::total_variation(topk_full, ancestral));
    const std::size_t k = 6;
    const auto topk = oracle::frequencies(10, draws, [&] { return dd::top_k_sample(p, k, a); });
    const auto midk = oracle::frequencies(10, draws, [&] { return dd::mid_k_sample(p, k, 2, 1e-12, b); });
    worst_midk = std::max(worst_midk, oracle::total_variation(midk, topk));
  }
  const bool pass = equal == 100 && worst_topk < 0.01 && worst_midk < 0.01;
  return {pass, "beam(1) == greedy on " + std::to_string(equal) + "/100 latents (" +
                    std::to_string(nonempty) + " non-empty); top-K(k=|V|) vs ancestral worst TV " +
                    fmt("%.4f", worst_topk) + "; mid-K(t=1e-12) vs top-K worst TV " +
                    fmt("%.4f", worst_midk)};
}

// 6
Outcome reconstruction() {
  const auto t0 = Clock::now();
  const auto corpus = dp::generate_toy_corpus(10, 1);
  const auto vocab = dp::build_vocabulary(corpus);
  const auto seqs = dp::to_sequences(corpus, vocab);
  dm::ModelConfig mc;
  mc.vocab_size = vocab.size();
  tr::TrainConfig tc;
  tc.epochs_stage2 = 400;
  auto s1 = tr::train_stage1(seqs, mc, tc);
  auto s2 = tr::train_stage2(seqs, s1.encoder, mc, tc);
  const dm::Model m{mc, vocab, std::move(s1.encoder), std::move(s1.classifier), std::move(s2.decoder)};

  dp::AugmentationConfig ac;
  ac.modification = {0.1, 0};
  ac.strategy.variant = dd::Greedy{};
  ac.max_failure_rate = 1.0;
  const auto res = dp::run_augmentation(seqs, m, ac);
  std::size_t match = 0, total = 0;
  for (const auto& p : res.pairs) {
    const auto [mt, n] = oracle::token_matches(p.tokens, seqs[p.provenance.source_id].tokens);
    match += mt;
    total += n;
  }
  // Failed (empty) generations count as zero matches over the source length.
  std::vector<bool> produced(seqs.size(), false);
  for (const auto& p : res.pairs) produced[p.provenance.source_id] = true;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (!produced[i]) total += seqs[i].tokens.size();
  }
  const double acc = total ? double(match) / double(total) : 0.0;
  const double secs = seconds_since(t0);
  return {acc >= 0.9 && secs < 120.0,
          fmt("%.4f", acc) + " token accuracy over " + std::to_string(seqs.size()) +
              " sources (" + std::to_string(res.failures.size()) + " empty), train+check " +
              fmt("%.1f", secs) + " s"};
}

// 7-10
struct TrendRun {
  std::map<std::string, dp::EvalReport> by_name;
  double secs = 0.0;
};

const TrendRun& trend_run() {
  static const TrendRun run = [] {
    const auto t0 = Clock::now();
    const auto corpus = dp::generate_toy_corpus(100, 1);
    dp::ExperimentConfig cfg;
    cfg.attack = true;
    dd::DecodingStrategy midk;
    std::vector<dp::Condition> conds{dp::baseline_condition()};
    dp::Condition soft{"mid_k_soft", true, dp::LabelMode::kSoft, midk, false};
    dp::Condition hard{"mid_k_hard", true, dp::LabelMode::kHard, midk, false};
    dd::DecodingStrategy g;
    g.variant = dd::Greedy{};
    dp::Condition greedy{"greedy_soft", true, dp::LabelMode::kSoft, g, false};
    conds.push_back(soft);
    conds.push_back(hard);
    conds.push_back(greedy);
    const auto res = dp::run_experiment(corpus, cfg, conds);
    TrendRun r;
    for (const auto& rep : res.reports) r.by_name[rep.condition] = rep;
    r.secs = seconds_since(t0);
    std::printf("trend experiment: 5 seeds, toy corpus 100/class, 1%% regime, %.1f s\n%s", r.secs,
                dp::human_summary(res.reports).c_str());
    return r;
  }();
  return run;
}

std::string mean_std(const dp::EvalReport& r) {
  return fmt("%.4f", r.mean) + " (" + fmt("%.4f", r.std) + ")";
}

Outcome trend_augmentation() {
  const auto& r = trend_run().by_name;
  const auto& a = r.at("mid_k_soft");
  const auto& o = r.at("original");
  return {a.mean >= o.mean, "soft mid-K " + mean_std(a) + " vs original " + mean_std(o) +
                                "; gap " + fmt("%+.4f", a.mean - o.mean)};
}

Outcome trend_soft_hard() {
  const auto& r = trend_run().by_name;
  const auto& s = r.at("mid_k_soft");
  const auto& h = r.at("mid_k_hard");
  return {s.mean >= h.mean,
          "soft " + mean_std(s) + " vs hard " + mean_std(h) + "; gap " + fmt("%+.4f", s.mean - h.mean)};
}

Outcome trend_midk_greedy() {
  const auto& r = trend_run().by_name;
  const auto& m = r.at("mid_k_soft");
  const auto& g = r.at("greedy_soft");
  return {m.mean >= g.mean, "mid-K " + mean_std(m) + " vs greedy " + mean_std(g) + "; gap " +
                                fmt("%+.4f", m.mean - g.mean)};
}

Outcome trend_robustness() {
  const auto& r = trend_run().by_name;
  const auto& a = r.at("mid_k_soft");
  const auto& o = r.at("original");
  bool identity = a.attacks.size() == 5 && o.attacks.size() == 5;
  for (const auto* rep : {&a, &o}) {
    for (const auto& s : rep->attacks) {
      identity = identity && s.identity_holds();
    }
  }
  return {identity && a.mean_aua() >= o.mean_aua(),
          "AUA augmented " + fmt("%.4f", a.mean_aua()) + " (ASR " + fmt("%.4f", a.mean_asr()) +
              ", clean " + fmt("%.4f", a.mean_clean_accuracy()) + ") vs original " +
              fmt("%.4f", o.mean_aua()) + " (ASR " + fmt("%.4f", o.mean_asr()) + ", clean " +
              fmt("%.4f", o.mean_clean_accuracy()) + "); AUA = clean x (1 - ASR) " +
              (identity ? "holds" : "VIOLATED") + " on every seed"};
}

// 11
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "dbaug_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream sink;
  auto cli = [&](const fs::path& dir, std::vector<std::string> args, const std::string& threads) {
    args.insert(args.end(), {"--out-dir", dir.string(), "--threads", threads});
    return dbaug::cli::run(args, sink, sink);
  };
  const std::vector<std::string> small{"--epochs1", "10", "--epochs2", "10", "--seed", "3"};
  auto sequence = [&](const fs::path& dir, const std::string& threads) {
    fs::create_directories(dir);
    const auto corpus = (dir / "corpus.jsonl").string();
    const auto ckpt = (dir / "checkpoint.json").string();
    const auto aug = (dir / "augmented.jsonl").string();
    int rc = cli(dir, {"gen-corpus", "--n-per-class", "40", "--seed", "3"}, threads);
    auto with = [&](std::vector<std::string> a) {
      a.insert(a.end(), small.begin(), small.end());
      return a;
    };
    rc |= cli(dir, with({"train", "--corpus", corpus}), threads);
    rc |= cli(dir, with({"augment", "--corpus", corpus, "--checkpoint", ckpt, "--multiplier", "2"}),
              threads);
    rc |= cli(dir, with({"eval", "--corpus", corpus, "--augmented", aug, "--seeds", "1,2,3",
                         "--fraction", "0.1", "--downstream-epochs", "20"}),
              threads);
    rc |= cli(dir, with({"attack", "--corpus", corpus, "--seeds", "1,2", "--fraction", "0.1",
                         "--multiplier", "2", "--downstream-epochs", "20"}),
              threads);
    return rc;
  };
  const auto a = root / "a";
  int rc = sequence(a, "1");
  const auto first = snapshot(a);
  rc |= sequence(a, "1");
  const auto second = snapshot(a);
  rc |= sequence(root / "b", "2");
  const auto threaded = snapshot(root / "b");
  std::size_t compared = 0, differing = 0;
  for (const auto& [name, body] : first) {
    ++compared;
    if (second.count(name) == 0 || second.at(name) != body) ++differing;
  }
  std::size_t thread_diff = 0, thread_compared = 0;
  for (const auto& [name, body] : first) {
    if (name.find("manifest") != std::string::npos) continue;  // records --threads and --out-dir
    ++thread_compared;
    if (threaded.count(name) == 0 || threaded.at(name) != body) ++thread_diff;
  }
  const bool has_reports = first.count("eval.report.csv") && first.count("attack.report.csv");
  fs::remove_all(root);
  return {rc == 0 && differing == 0 && thread_diff == 0 && has_reports && compared > 0,
          "exit status " + std::to_string(rc) + "; " + std::to_string(compared - differing) + "/" +
              std::to_string(compared) + " output files byte-identical on rerun; " +
              std::to_string(thread_compared - thread_diff) + "/" + std::to_string(thread_compared) +
              " data and report files identical with 2 threads"};
}

// 12
Outcome curriculum() {
  std::size_t ok = 0, total = 0;
  for (std::size_t n0 : {1u, 2u, 3u}) {
    for (std::size_t e = 0; e <= 20; ++e) {
      ++total;
      ok += dp::curriculum_steps(e, n0) == n0 + e / 2;
    }
  }
  return {ok == total && dp::curriculum_steps(10) == 6,
          std::to_string(ok) + "/" + std::to_string(total) + " (n0, epoch) pairs exact for epochs 0..20"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient oracle", gradient_oracle},
      {"boundary step closed form", closed_form},
      {"boundary approach", boundary_approach},
      {"mid-K exactness", mid_k_exactness},
      {"reduction identities", reductions},
      {"reconstruction path", reconstruction},
      {"trend: augmentation helps", trend_augmentation},
      {"trend: soft beats hard", trend_soft_hard},
      {"trend: mid-K vs greedy", trend_midk_greedy},
      {"trend: robustness", trend_robustness},
      {"CLI determinism", determinism},
      {"curriculum schedule", curriculum},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty()) {
    for (int i = 1; i <= int(criteria.size()); ++i) wanted.push_back(i);
  }
  int failures = 0;
  for (int id : wanted) {
    if (id < 1 || id > int(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    const auto& [name, fn] = criteria[id - 1];
    Outcome o{false, ""};
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !report(id, name, o).pass;
  }
  return failures == 0 ? 0 : 1;
}
