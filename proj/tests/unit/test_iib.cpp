#include <gtest/gtest.h>

#include "chartlink/errors.hpp"
#include "chartlink/iib.hpp"

using namespace chartlink;

TEST(TokenGeometry, Validation) {
  TokenGeometry g{96, 96, 8, 192, 4, 2};
  EXPECT_EQ(g.tokens(), 144);
  EXPECT_NO_THROW(g.validate());
  EXPECT_THROW((TokenGeometry{96, 90, 8, 192, 4, 2}.validate()), InvalidParams);
  EXPECT_THROW((TokenGeometry{96, 96, 8, 190, 4, 2}.validate()), InvalidParams);
}

TEST(Tokenizer, OrthogonalInitIsLosslessThroughDetokenizer) {
  torch::manual_seed(0);
  TokenGeometry g{32, 32, 8, 192, 4, 2};
  PatchTokenizer tok(3, g);
  Detokenizer detok(3, TokenGeometry{32, 32, 8, 192, 4, 1}, false);
  tok->init_orthogonal(make_generator(5));
  detok->init_as_inverse_of(*tok);
  auto x = torch::rand({2, 3, 32, 32});
  auto tokens = tok->forward(x);
  EXPECT_EQ(tokens.sizes(), (std::vector<int64_t>{2, 16, 192}));
  auto y = detok->forward(tokens);
  EXPECT_LT((y - x).abs().max().item<float>(), 1e-5f);
  EXPECT_THROW(tok->forward(torch::rand({1, 3, 32, 40})), ShapeMismatch);
}

TEST(Tokenizer, SigmoidReadoutStaysInUnitInterval) {
  TokenGeometry g{16, 16, 8, 64, 4, 1};
  Detokenizer detok(1, g, true);
  auto out = detok->forward(torch::randn({2, 4, 64}) * 10);
  EXPECT_EQ(out.sizes(), (std::vector<int64_t>{2, 1, 16, 16}));
  EXPECT_GE(out.min().item<float>(), 0.0f);
  EXPECT_LE(out.max().item<float>(), 1.0f);
}

TEST(BroadcastMatrix, RoundTripAfterPerturbation) {
  BroadcastMatrix m(36, 1000.0, make_generator(1));
  {
    torch::NoGradGuard no_grad;
    m->set_learnable(torch::eye(36) + 0.3 * torch::randn({36, 36}, make_generator(2)));
  }
  m->project();
  EXPECT_LE(m->condition_number(), 1000.0 * (1 + 1e-6));
  auto tokens = torch::randn({4, 36, 16});
  {
    torch::NoGradGuard no_grad;
    auto back = m->unbroadcast(m->broadcast(tokens));
    EXPECT_LT((back - tokens).abs().max().item<float>(), 1e-3f);
  }
  // Training-mode solve path gives the same answer.
  auto back = m->unbroadcast(m->broadcast(tokens));
  EXPECT_LT((back - tokens).abs().max().item<float>(), 1e-3f);
}

TEST(BroadcastMatrix, SpreadsEachTokenAcrossAll) {
  BroadcastMatrix m(16, 1000.0, make_generator(3));
  auto tokens = torch::zeros({1, 16, 4});
  tokens[0][5] = 1.0;
  torch::NoGradGuard no_grad;
  auto spread = m->broadcast(tokens);
  EXPECT_GT((spread.abs().sum(-1) > 1e-6).sum().item<int64_t>(), 12);
}

TEST(BroadcastMatrix, ConditionCapEnforced) {
  BroadcastMatrix m(8, 100.0, make_generator(4));
  EXPECT_NEAR(m->condition_number(), 1.0, 1e-6);
  EXPECT_NEAR(m->condition_penalty().item<float>(), 0.0f, 1e-6f);
  auto diag = torch::ones({8});
  diag[7] = 1e-4;
  m->set_learnable(torch::diag(diag));
  EXPECT_GT(m->condition_number(), 100.0);
  EXPECT_GT(m->condition_penalty().item<float>(), 0.0f);
  {
    torch::NoGradGuard no_grad;
    EXPECT_THROW(m->unbroadcast(torch::randn({1, 8, 2})), SingularMatrix);
  }
  m->project();
  EXPECT_LE(m->condition_number(), 100.0);
  EXPECT_THROW(m->broadcast(torch::randn({1, 7, 2})), ShapeMismatch);
  EXPECT_THROW(BroadcastMatrix(8, 1.0, make_generator(0)), InvalidParams);
}

TEST(RandomOrthogonal, IsOrthogonalAndSeeded) {
  auto q = random_orthogonal(20, make_generator(9));
  EXPECT_TRUE(torch::allclose(torch::matmul(q.t(), q), torch::eye(20), 1e-5, 1e-5));
  EXPECT_TRUE(torch::equal(q, random_orthogonal(20, make_generator(9))));
}
