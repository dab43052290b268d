#include <cmath>
#include <sstream>

#include "doctest.h"
#include "dbaug/decoding/decoding.hpp"
#include "dbaug/error.hpp"
#include "dbaug/pipeline/corpus.hpp"
#include "dbaug/training/losses.hpp"
#include "dbaug/training/trainer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace tr = dbaug::training;
namespace dm = dbaug::model;
namespace dp = dbaug::pipeline;

namespace {

struct Small {
  std::vector<tr::LabeledSequence> seqs;
  dm::ModelConfig mc;
};

Small small_corpus(std::size_t n_per_class) {
  const auto corpus = dp::generate_toy_corpus(n_per_class, 4);
  const auto vocab = dp::build_vocabulary(corpus);
  Small s{dp::to_sequences(corpus, vocab), {}};
  s.mc.vocab_size = vocab.size();
  return s;
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("stage 1 separates the toy corpus within 50 epochs") {
    const auto& t = fixture::toy();
    REQUIRE(t.stage1.size() == 50);
    double best = 0.0;
    for (const auto& row : t.stage1) {
      CHECK(std::isfinite(row.loss));
      best = std::max(best, row.accuracy);
    }
    CHECK(best >= 0.99);
    CHECK(t.stage1.back().accuracy >= 0.99);
  }

  TEST_CASE("stage 1 is bit-deterministic for a fixed seed") {
    auto s = small_corpus(10);
    tr::TrainConfig tc;
    tc.epochs_stage1 = 5;
    tc.seed = 17;
    const auto a = tr::train_stage1(s.seqs, s.mc, tc);
    const auto b = tr::train_stage1(s.seqs, s.mc, tc);
    CHECK(a.encoder == b.encoder);
    CHECK(a.classifier == b.classifier);
    tc.seed = 18;
    const auto c = tr::train_stage1(s.seqs, s.mc, tc);
    CHECK_FALSE(a.encoder == c.encoder);
  }

  TEST_CASE("stage 2 leaves the encoder untouched and is reproducible") {
    auto s = small_corpus(5);
    tr::TrainConfig tc;
    tc.epochs_stage1 = 3;
    tc.epochs_stage2 = 3;
    const auto s1 = tr::train_stage1(s.seqs, s.mc, tc);
    const auto before = dm::checksum(s1.encoder);
    const auto copy = s1.encoder;
    const auto a = tr::train_stage2(s.seqs, s1.encoder, s.mc, tc);
    CHECK(dm::checksum(s1.encoder) == before);
    CHECK(s1.encoder == copy);
    const auto b = tr::train_stage2(s.seqs, s1.encoder, s.mc, tc);
    CHECK(a.decoder == b.decoder);
    for (const auto& row : a.history) CHECK(row.stage == "stage2");
  }

  TEST_CASE("stage 2 memorizes a single sentence") {
    auto s = small_corpus(1);
    s.seqs.resize(1);
    tr::TrainConfig tc;
    tc.epochs_stage1 = 5;
    tc.epochs_stage2 = 150;
    const auto s1 = tr::train_stage1(s.seqs, s.mc, tc);
    const auto s2 = tr::train_stage2(s.seqs, s1.encoder, s.mc, tc);
    dbaug::decoding::DecodingStrategy greedy;
    greedy.variant = dbaug::decoding::Greedy{};
    dbaug::Rng rng(1);
    const auto out = dbaug::decoding::decode_sequence(dm::encode(s.seqs[0].tokens, s1.encoder),
                                                      s2.decoder, greedy, rng);
    CHECK(out == s.seqs[0].tokens);
  }

  TEST_CASE("teacher forcing shifts by one and truncates") {
    const std::vector<dm::TokenId> toks{5, 6, 7};
    auto tf = tr::teacher_forcing(toks, 10);
    CHECK(tf.inputs == std::vector<dm::TokenId>{dm::kBos, 5, 6, 7});
    CHECK(tf.targets == std::vector<dm::TokenId>{5, 6, 7, dm::kEos});
    auto cut = tr::teacher_forcing(toks, 2);
    CHECK(cut.inputs.size() == 2);
    CHECK(cut.targets == std::vector<dm::TokenId>{5, 6});
  }

  TEST_CASE("divergence names the epoch") {
    auto s = small_corpus(5);
    tr::TrainConfig tc;
    tc.learning_rate = 1e200;
    tc.epochs_stage1 = 3;
    try {
      tr::train_stage1(s.seqs, s.mc, tc);
      FAIL("expected NumericError");
    } catch (const dbaug::NumericError& e) {
      CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
  }

  TEST_CASE("bad inputs") {
    auto s = small_corpus(2);
    tr::TrainConfig tc;
    CHECK_THROWS_AS(tr::train_stage1({}, s.mc, tc), dbaug::ValueError);
    auto bad = s.seqs;
    bad[0].label = 5;
    CHECK_THROWS_AS(tr::train_stage1(bad, s.mc, tc), dbaug::ValueError);
    tc.eps_cls = 1.5;
    CHECK_THROWS_AS(tc.validate(), dbaug::ValueError);
  }

  TEST_CASE("metrics csv") {
    std::vector<tr::EpochMetrics> rows{{"stage1", 0, 0.5, 0.75}};
    std::ostringstream out;
    tr::write_metrics(out, rows);
    CHECK(out.str().rfind("stage,epoch,loss,accuracy\n", 0) == 0);
    CHECK(out.str().find("stage1,0,") != std::string::npos);
  }

  TEST_CASE("soft target equal to one-hot gives the hard-label loss") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 10; ++i) {
      dbaug::nx::Tensor logits({1, 3});
      for (auto& v : logits.values()) v = std::normal_distribution<double>()(rng);
      const std::size_t c = rng() % 3;
      dbaug::nx::Tensor onehot({1, 3});
      onehot[c] = 1.0;
      dbaug::nx::Tape t;
      const double soft = tr::soft_cross_entropy(t, t.constant(logits), onehot).value()[0];
      const auto row = logits.row(0);
      const double hard = tr::classification_loss(oracle::softmax({row.begin(), row.end()}), c, 0.0);
      CHECK(std::abs(soft - hard) <= 1e-12);
    }
  }
}
