#include <array>

#include "dbaug/error.hpp"
#include "dbaug/pipeline/corpus.hpp"
#include "dbaug/rng.hpp"

namespace dbaug::pipeline {

namespace {

using Words = std::vector<std::string>;

const Words kNegAdjectives = {"bad",     "awful",  "terrible", "dull",     "boring", "dreadful",
                              "poor",    "weak",   "tedious",  "horrible", "clumsy", "bland"};
const Words kPosAdjectives = {"good",   "great",     "excellent", "wonderful", "superb",
                              "lovely", "brilliant", "charming",  "fantastic", "delightful",
                              "terrific", "gripping"};
const Words kNegVerbs = {"hated", "disliked", "regretted", "loathed", "resented", "despised"};
const Words kPosVerbs = {"loved", "enjoyed", "adored", "admired", "praised", "cherished"};

const Words kNouns = {"movie",    "film",      "plot",        "story",     "acting",
                      "script",   "cast",      "ending",      "score",     "soundtrack",
                      "direction", "dialogue", "pacing",      "premise",   "sequel",
                      "performance", "characters", "cinematography", "humor", "visuals"};
const Words kDescriptors = {"new",    "old",     "long",   "short",   "french", "animated",
                            "recent", "classic", "silent", "foreign", "indie",  "local"};
const Words kIntensifiers = {"very",  "really",    "truly",  "quite",
                             "so",    "extremely", "rather", "genuinely"};

const Words kPeople = {"friends", "family",   "cousin",   "sister", "brother", "mother",
                       "father",  "neighbor", "coworker", "roommate", "kids",  "parents"};
const Words kNames = {"alice", "bob",   "carol", "dave",  "emma", "frank",
                      "grace", "henry", "irene", "jack",  "kate", "liam"};
const Words kDays = {"monday", "tuesday", "wednesday", "thursday", "friday",
                     "saturday", "sunday", "yesterday", "today",   "tonight"};
const Words kTimes = {"morning", "evening", "afternoon", "weekend", "night", "holiday"};
const Words kPlaces = {"theater", "cinema",  "couch",   "home",    "downtown", "mall",
                       "festival", "library", "airport", "hotel",  "campus",   "cabin",
                       "garage",  "train",   "basement", "office"};
const Words kSnacks = {"popcorn", "soda", "candy", "nachos", "pizza",
                       "tea",     "coffee", "pretzels", "noodles", "fries"};
const Words kColors = {"red", "blue", "green", "yellow", "purple", "orange", "grey", "black"};
const Words kNumbers = {"two", "three", "four", "five", "six", "seven", "eight", "nine"};

const std::string& pick(const Words& w, Rng& rng) { return w[rng() % w.size()]; }

std::string distractor_phrase(Rng& rng) {
  switch (rng() % 8) {
    case 0: return "with " + pick(kPeople, rng);
    case 1: return "with " + pick(kNames, rng);
    case 2: return "on " + pick(kDays, rng);
    case 3: return "in the " + pick(kTimes, rng);
    case 4: return "at the " + pick(kPlaces, rng);
    case 5: return "with " + pick(kSnacks, rng);
    case 6: return "in seat " + pick(kNumbers, rng);
    default: return "wearing " + pick(kColors, rng);
  }
}

std::string sentence(std::size_t label, Rng& rng) {
  const Words& adj = label == 1 ? kPosAdjectives : kNegAdjectives;
  const Words& verb = label == 1 ? kPosVerbs : kNegVerbs;
  std::string core;
  auto noun_phrase = [&] {
    std::string np = "the ";
    if (rng() % 3 == 0) np += pick(kDescriptors, rng) + " ";
    return np + pick(kNouns, rng);
  };
  switch (rng() % 4) {
    case 0:
      core = noun_phrase() + " was " + pick(kIntensifiers, rng) + " " + pick(adj, rng);
      break;
    case 1:
      core = "i " + pick(verb, rng) + " " + noun_phrase();
      break;
    case 2:
      core = "this " + pick(kNouns, rng) + " is " + pick(adj, rng) + " and " + noun_phrase() +
             " is " + pick(kIntensifiers, rng) + " " + pick(adj, rng);
      break;
    default:
      core = pick(kNames, rng) + " " + pick(verb, rng) + " " + noun_phrase() + " it was " +
             pick(adj, rng);
      break;
  }
  const auto suffixes = rng() % 2;
  for (std::size_t i = 0; i < suffixes; ++i) core += " " + distractor_phrase(rng);
  return core;
}

}  // namespace

const std::vector<std::string>& toy_sentiment_words(std::size_t label) {
  static const Words neg = [] {
    Words w = kNegAdjectives;
    w.insert(w.end(), kNegVerbs.begin(), kNegVerbs.end());
    return w;
  }();
  static const Words pos = [] {
    Words w = kPosAdjectives;
    w.insert(w.end(), kPosVerbs.begin(), kPosVerbs.end());
    return w;
  }();
  if (label > 1) throw ValueError("toy corpus has two classes");
  return label == 1 ? pos : neg;
}

std::vector<CorpusRecord> generate_toy_corpus(std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw ValueError("toy corpus: n_per_class must be >= 1");
  Rng rng = derive_rng(seed, 0x70c0);
  std::vector<CorpusRecord> out;
  out.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t label : {std::size_t{1}, std::size_t{0}}) {
      out.push_back({sentence(label, rng), label});
    }
  }
  for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng() % i]);
  return out;
}

}  // namespace dbaug::pipeline
