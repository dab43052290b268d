#include "dbaug/decoding/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dbaug/error.hpp"

namespace dbaug::decoding {

namespace {

void require_distribution(std::span<const double> dist, const char* op) {
  if (dist.empty()) throw ValueError(std::string(op) + ": empty distribution");
  double total = 0.0;
  for (double p : dist) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValueError(std::string(op) + ": distribution has a negative or non-finite entry");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ValueError(std::string(op) + ": distribution sums to " + std::to_string(total));
  }
}

// Inverse-CDF draw over `ids` with unnormalized `weights`.
TokenId sample_weighted(std::span<const TokenId> ids, std::span<const double> weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return ids[i];
  }
  return ids[last_positive];
}

std::vector<double> mask_reserved(std::span<const double> dist) {
  std::vector<double> out(dist.begin(), dist.end());
  for (TokenId id : {model::kPad, model::kBos, model::kUnk}) {
    if (id < out.size()) out[id] = 0.0;
  }
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    out[model::kEos] = 1.0;
    return out;
  }
  for (auto& p : out) p /= total;
  return out;
}

}  // namespace

void DecodingStrategy::validate(std::size_t vocab_size) const {
  if (max_len == 0) throw ValueError("decoding: max_len must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ValueError("decoding: temperature must be positive");
  }
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Beam>) {
          if (s.width < 1) throw ValueError("beam: width must be >= 1");
          if (s.width > vocab_size) throw ValueError("beam: width exceeds vocabulary size");
        } else if constexpr (std::is_same_v<S, TopK>) {
          if (s.k < 1 || s.k > vocab_size) throw ValueError("top_k: k must lie in [1, |V|]");
        } else if constexpr (std::is_same_v<S, MidK>) {
          if (s.k_prime < 1 || s.k_prime >= s.k) throw ValueError("mid_k: need 1 <= k' < k");
          if (s.k > vocab_size) throw ValueError("mid_k: k exceeds vocabulary size");
          if (!(s.threshold > 0.0 && s.threshold <= 1.0)) {
            throw ValueError("mid_k: threshold must lie in (0, 1]");
          }
        }
      },
      variant);
}

std::string DecodingStrategy::name() const {
  switch (variant.index()) {
    case 0: return "greedy";
    case 1: return "beam";
    case 2: return "top_k";
    default: return "mid_k";
  }
}

std::string DecodingStrategy::describe() const {
  std::ostringstream os;
  os << name();
  if (const auto* b = std::get_if<Beam>(&variant)) os << "(width=" << b->width << ")";
  if (const auto* t = std::get_if<TopK>(&variant)) os << "(k=" << t->k << ")";
  if (const auto* m = std::get_if<MidK>(&variant)) {
    os << "(k=" << m->k << ",k'=" << m->k_prime << ",t=" << m->threshold
       << (m->literal_pseudocode ? ",literal" : "") << ")";
  }
  return os.str();
}

DecodingStrategy strategy_from_name(const std::string& name) {
  DecodingStrategy s;
  if (name == "greedy") s.variant = Greedy{};
  else if (name == "beam") s.variant = Beam{};
  else if (name == "top_k") s.variant = TopK{};
  else if (name == "mid_k") s.variant = MidK{};
  else throw ValueError("unknown decoding strategy '" + name + "'");
  return s;
}

std::vector<TokenId> top_k_indices(std::span<const double> dist, std::size_t k) {
  if (k > dist.size()) throw ValueError("top_k_indices: k exceeds distribution size");
  std::vector<TokenId> ids(dist.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                    [&](TokenId a, TokenId b) { return dist[a] > dist[b] || (dist[a] == dist[b] && a < b); });
  ids.resize(k);
  return ids;
}

std::vector<double> apply_temperature(std::span<const double> dist, double temperature) {
  if (!(temperature > 0.0)) throw ValueError("temperature must be positive");
  std::vector<double> out(dist.begin(), dist.end());
  if (temperature == 1.0) return out;
  double total = 0.0;
  for (auto& p : out) {
    p = p > 0.0 ? std::pow(p, 1.0 / temperature) : 0.0;
    total += p;
  }
  for (auto& p : out) p /= total;
  return out;
}

TokenId greedy_pick(std::span<const double> dist) {
  if (dist.empty()) throw ValueError("greedy: empty distribution");
  // max_element returns the first maximum, i.e. the lowest id on ties.
  return static_cast<TokenId>(std::max_element(dist.begin(), dist.end()) - dist.begin());
}

TokenId top_k_sample(std::span<const double> dist, std::size_t k, Rng& rng) {
  require_distribution(dist, "top_k");
  if (k < 1 || k > dist.size()) throw ValueError("top_k: k must lie in [1, |V|]");
  const auto ids = top_k_indices(dist, k);
  std::vector<double> w(k);
  for (std::size_t i = 0; i < k; ++i) w[i] = dist[ids[i]];
  return sample_weighted(ids, w, rng);
}

TokenId mid_k_sample(std::span<const double> dist, std::size_t k, std::size_t k_prime,
                     double threshold, Rng& rng, bool literal_pseudocode) {
  require_distribution(dist, "mid_k");
  if (k_prime < 1 || k_prime >= k) {
    throw ValueError("mid_k: need 1 <= k' < k (k=" + std::to_string(k) +
                     ", k'=" + std::to_string(k_prime) + ")");
  }
  if (k > dist.size()) throw ValueError("mid_k: k exceeds vocabulary size");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ValueError("mid_k: threshold must lie in (0, 1]");
  }

  const auto ids = top_k_indices(dist, k);
  std::vector<double> p_k(k);
  double mass = 0.0;
  for (std::size_t i = 0; i < k; ++i) mass += dist[ids[i]];
  for (std::size_t i = 0; i < k; ++i) p_k[i] = dist[ids[i]] / mass;

  double head = 0.0;
  for (std::size_t i = 0; i < k_prime; ++i) head += p_k[i];

  const bool exclude_head = literal_pseudocode ? head >= threshold : head < threshold;
  if (exclude_head) {
    const std::span<const TokenId> tail_ids(ids.data() + k_prime, k - k_prime);
    const std::span<const double> tail_w(p_k.data() + k_prime, k - k_prime);
    // An all-zero tail (only reachable in literal mode) falls back to top-k.
    if (std::accumulate(tail_w.begin(), tail_w.end(), 0.0) > 0.0) {
      return sample_weighted(tail_ids, tail_w, rng);
    }
  }
  return sample_weighted(ids, p_k, rng);
}

TokenId baseline_step(std::span<const double> dist, const DecodingStrategy& strategy, Rng& rng) {
  const auto p = apply_temperature(dist, strategy.temperature);
  return std::visit(
      [&](const auto& s) -> TokenId {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Greedy>) {
          return greedy_pick(p);
        } else if constexpr (std::is_same_v<S, TopK>) {
          return top_k_sample(p, s.k, rng);
        } else if constexpr (std::is_same_v<S, MidK>) {
          return mid_k_sample(p, s.k, s.k_prime, s.threshold, rng, s.literal_pseudocode);
        } else {
          throw ValueError("baseline_step: beam search is a sequence-level strategy");
        }
      },
      strategy.variant);
}

std::vector<TokenId> beam_decode(const model::LatentVector& z, const model::DecoderParams& gamma,
                                 std::size_t width, std::size_t max_len) {
  const std::size_t vocab = gamma.vocab_size();
  if (width < 1) throw ValueError("beam: width must be >= 1");
  if (width > vocab) throw ValueError("beam: width exceeds vocabulary size");
  const std::size_t steps = std::min(max_len, gamma.max_len);

  struct Hypothesis {
    std::vector<TokenId> prefix;  // starts with BOS
    double log_prob = 0.0;
  };
  struct Candidate {
    double score;
    std::size_t parent;
    TokenId token;
  };
  std::vector<Hypothesis> alive{{{model::kBos}, 0.0}};
  std::vector<Hypothesis> finished;
  std::vector<double> finished_len;

  for (std::size_t pos = 0; pos < steps && !alive.empty(); ++pos) {
    std::vector<Candidate> candidates;
    candidates.reserve(alive.size() * vocab);
    for (std::size_t h = 0; h < alive.size(); ++h) {
      const auto dist = mask_reserved(model::decode_step(z, alive[h].prefix, pos, gamma));
      for (TokenId v = 0; v < vocab; ++v) {
        if (dist[v] <= 0.0) continue;
        candidates.push_back({alive[h].log_prob + std::log(dist[v]), h, v});
      }
    }
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const auto& c = candidates[i];
      Hypothesis h{alive[c.parent].prefix, c.score};
      if (c.token == model::kEos) {
        finished_len.push_back(static_cast<double>(h.prefix.size()));  // body + EOS
        finished.push_back(std::move(h));
      } else {
        h.prefix.push_back(c.token);
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }
  for (auto& h : alive) {
    finished_len.push_back(static_cast<double>(h.prefix.size() - 1));
    finished.push_back(std::move(h));
  }

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < finished.size(); ++i) {
    const double len = std::max(1.0, finished_len[i]);
    const double score = finished[i].log_prob / len;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return {finished[best].prefix.begin() + 1, finished[best].prefix.end()};
}

std::vector<TokenId> decode_sequence(const model::LatentVector& z,
                                     const model::DecoderParams& gamma,
                                     const DecodingStrategy& strategy, Rng& rng) {
  strategy.validate(gamma.vocab_size());
  if (const auto* beam = std::get_if<Beam>(&strategy.variant)) {
    return beam_decode(z, gamma, beam->width, strategy.max_len);
  }
  const std::size_t steps = std::min(strategy.max_len, gamma.max_len);
  std::vector<TokenId> prefix{model::kBos};
  for (std::size_t pos = 0; pos < steps; ++pos) {
    const auto dist = mask_reserved(model::decode_step(z, prefix, pos, gamma));
    const TokenId next = baseline_step(dist, strategy, rng);
    if (next == model::kEos) break;
    prefix.push_back(next);
  }
  return {prefix.begin() + 1, prefix.end()};
}

}  // namespace dbaug::decoding
