#include <cmath>

#include "doctest.h"
#include "dbaug/boundary/boundary.hpp"
#include "dbaug/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace db = dbaug::boundary;
namespace dm = dbaug::model;
namespace nx = dbaug::nx;

namespace {

struct Head {
  dm::ClassifierParams pi;
  std::vector<std::vector<double>> W;
  std::vector<double> b;
};

Head random_head(std::size_t classes, std::size_t dim, std::mt19937_64& rng) {
  Head h;
  h.pi.weight = oracle::random_tensor({classes, dim}, rng, -2.0, 2.0);
  h.pi.bias = oracle::random_tensor({classes}, rng);
  h.W.assign(classes, std::vector<double>(dim));
  h.b.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    h.b[c] = h.pi.bias[c];
    for (std::size_t j = 0; j < dim; ++j) h.W[c][j] = h.pi.weight.at(c, j);
  }
  return h;
}

}  // namespace

TEST_SUITE("boundary") {
  TEST_CASE("zero steps return z unchanged") {
    std::mt19937_64 rng(1);
    auto h = random_head(2, 4, rng);
    const dm::LatentVector z{{0.3, -0.1, 0.8, 2.0}};
    CHECK(db::modify_latent(z, h.pi, {0.1, 0}) == z);
  }

  TEST_CASE("uniform output is a fixed point") {
    dm::ClassifierParams pi{nx::Tensor({3, 2}), nx::Tensor::vector({0.5, 0.5, 0.5})};
    const dm::LatentVector z{{1.0, -4.0}};
    CHECK(db::modify_latent(z, pi, {7.0, 5}) == z);
  }

  TEST_CASE("iterates match the closed form") {
    std::mt19937_64 rng(2);
    for (std::size_t classes : {2u, 3u, 5u}) {
      auto h = random_head(classes, 6, rng);
      auto zt = oracle::random_tensor({6}, rng, -2.0, 2.0);
      const dm::LatentVector z{zt.storage()};
      for (std::size_t n : {1u, 3u, 10u}) {
        auto ref = z.values;
        for (std::size_t i = 0; i < n; ++i) ref = oracle::boundary_step(ref, h.W, h.b, 0.2);
        const auto got = db::modify_latent(z, h.pi, {0.2, n});
        for (std::size_t j = 0; j < ref.size(); ++j) CHECK(std::abs(got.values[j] - ref[j]) <= 1e-10);
      }
    }
  }

  TEST_CASE("trajectory holds every iterate") {
    std::mt19937_64 rng(3);
    auto h = random_head(2, 3, rng);
    const dm::LatentVector z{{1.0, 2.0, 3.0}};
    const auto traj = db::modify_latent_trajectory(z, h.pi, {0.1, 4});
    REQUIRE(traj.size() == 5);
    CHECK(traj.front() == z);
    CHECK(traj.back() == db::modify_latent(z, h.pi, {0.1, 4}));
  }

  TEST_CASE("errors") {
    std::mt19937_64 rng(4);
    auto h = random_head(2, 3, rng);
    CHECK_THROWS_AS(db::modify_latent(dm::LatentVector{{1.0}}, h.pi, {0.1, 1}), dbaug::ShapeError);
    CHECK_THROWS_AS(db::modify_latent(dm::LatentVector{{1.0, 2.0, 3.0}}, h.pi, {0.0, 1}),
                    dbaug::ValueError);
    try {
      db::modify_latent(dm::LatentVector{{1.0, 2.0, 3.0}}, h.pi, {1e308, 3});
      FAIL("expected NumericError");
    } catch (const dbaug::NumericError& e) {
      CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
  }

  TEST_CASE("kl to uniform") {
    CHECK(db::kl_to_uniform(std::vector<double>{0.5, 0.5}) == doctest::Approx(0.0));
    CHECK(db::kl_to_uniform(std::vector<double>{1.0, 0.0}) == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("soft label is the composition of encode and classify") {
    const auto& t = fixture::toy();
    for (std::size_t i = 0; i < 10; ++i) {
      const auto& x = t.seqs[i].tokens;
      const auto q = db::score_soft_label(x, t.model.encoder, t.model.classifier);
      CHECK(q == dm::classify(dm::encode(x, t.model.encoder), t.model.classifier));
      double s = 0.0;
      for (double v : q) s += v;
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    const auto pos = t.model.vocab.encode("a truly wonderful brilliant delightful film");
    const auto q = db::score_soft_label(pos, t.model.encoder, t.model.classifier);
    CHECK(q[1] > q[0]);
  }

  TEST_CASE("augment_sentence is deterministic per rng stream") {
    const auto& t = fixture::toy();
    dbaug::decoding::DecodingStrategy s;
    db::ModificationConfig mc{0.1, 3};
    dbaug::Rng a(9), b(9);
    const auto pa = db::augment_sentence(t.seqs[0].tokens, t.model, mc, s, a, {7, 1});
    const auto pb = db::augment_sentence(t.seqs[0].tokens, t.model, mc, s, b, {7, 1});
    CHECK(pa.tokens == pb.tokens);
    CHECK(pa.soft_label == pb.soft_label);
    CHECK(pa.provenance.source_id == 7);
    CHECK(pa.provenance.replicate == 1);
    CHECK(pa.provenance.steps == 3);
    CHECK(pa.provenance.strategy == s.describe());
    CHECK(pa.soft_label == db::score_soft_label(pa.tokens, t.model.encoder, t.model.classifier));
  }
}
