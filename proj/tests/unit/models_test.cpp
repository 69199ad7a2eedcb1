#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "drpan/error.hpp"
#include "drpan/models.hpp"

using namespace drpan;

namespace {

GeneratorSpec small_generator(double dropout = 0.5) {
  GeneratorSpec s;
  s.base_width = 8;
  s.n_residual_blocks = 2;
  s.dropout = dropout;
  return s;
}

// Central difference of f w.r.t. each probed entry of `t` compared with the
// autodiff gradient `grad`.
double max_relative_error(torch::Tensor t, const torch::Tensor& grad, const std::function<double()>& f,
                          const std::vector<int64_t>& probes, double eps) {
  double worst = 0.0;
  auto flat = t.detach().view({-1});
  const auto g = grad.reshape({-1});
  const double f0 = f();
  for (int64_t start : probes) {
    // A step that crosses a ReLU kink gives unequal one-sided slopes. Such
    // probes retry with smaller steps, then at the next index.
    bool measured = false;
    for (int64_t idx = start, tries = 0; tries < 8 && !measured; ++tries, idx = (idx + 1) % flat.numel()) {
      for (double h : {eps, eps / 10, eps / 100}) {
        // Rounding noise of a central difference on a value of size |f0|.
        const double noise = 64 * std::numeric_limits<double>::epsilon() * (std::fabs(f0) + 1.0) / h;
        const double orig = flat[idx].item<double>();
        flat[idx] = orig + h;
        const double up = f();
        flat[idx] = orig - h;
        const double down = f();
        flat[idx] = orig;
        const double fwd = (up - f0) / h;
        const double bwd = (f0 - down) / h;
        if (std::fabs(fwd - bwd) > 1e-4 * std::max(std::fabs(fwd), std::fabs(bwd)) + 4 * noise) continue;
        const double numeric = (up - down) / (2 * h);
        const double analytic = g[idx].item<double>();
        const double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-300});
        worst = std::max(worst, std::max(0.0, std::fabs(numeric - analytic) - noise) / denom);
        measured = true;
        break;
      }
    }
    if (!measured) return std::numeric_limits<double>::infinity();
  }
  return worst;
}

}  // namespace

TEST(LayerArithmetic, ReceptiveFieldIs70) {
  EXPECT_EQ(receptive_field(PatchDiscriminatorSpec{6, 64, 0}.layers()), 70);
  EXPECT_EQ(receptive_field(PatchDiscriminatorSpec{6, 64, 1}.layers()), 70);
}

TEST(LayerArithmetic, ScoreMapSizes) {
  // Hand recurrence, valid convs: 70 -> 34 -> 16 -> 7 -> 4 -> 1; 256 -> 127 -> 62 -> 30 -> 27 -> 24.
  EXPECT_EQ(scoremap_size(70, {6, 64, 0}), 1);
  EXPECT_EQ(scoremap_size(256, {6, 64, 0}), 24);
  // Padded: 256 -> 128 -> 64 -> 32 -> 31 -> 30; 64 -> 32 -> 16 -> 8 -> 7 -> 6.
  EXPECT_EQ(scoremap_size(256, {6, 64, 1}), 30);
  EXPECT_EQ(scoremap_size(64, {6, 64, 1}), 6);
  EXPECT_EQ(scoremap_size(70, {6, 64, 1}), 6);
}

TEST(Generator, PreservesSpatialSize) {
  torch::NoGradGuard no_grad;
  Generator g(small_generator());
  for (int size : {64, 128, 256}) {
    const int n = size == 256 ? 4 : 1;
    const auto y = g->forward(torch::rand({n, 3, size, size}) * 2 - 1);
    EXPECT_EQ(y.sizes(), (std::vector<int64_t>{n, 3, size, size}));
    EXPECT_LE(y.abs().max().item<float>(), 1.0f);
  }
}

TEST(Generator, RejectsIndivisibleSize) {
  Generator g(small_generator());
  EXPECT_THROW(g->forward(torch::rand({1, 3, 30, 30})), ShapeError);
  EXPECT_THROW(g->forward(torch::rand({1, 1, 32, 32})), ShapeError);
}

TEST(Generator, SeededNoiseIsReproducible) {
  torch::NoGradGuard no_grad;
  torch::manual_seed(1);
  Generator g(small_generator());
  const auto x = torch::rand({2, 3, 32, 32});
  const auto a = generate(g, x, 77);
  const auto b = generate(g, x, 77);
  const auto c = generate(g, x, 78);
  EXPECT_TRUE(torch::equal(a, b));
  EXPECT_FALSE(torch::equal(a, c));
}

TEST(Generator, ParameterCountStableAcrossConstructions) {
  torch::manual_seed(1);
  Generator a(small_generator());
  torch::manual_seed(2);
  Generator b(small_generator());
  EXPECT_EQ(parameter_count(*a), parameter_count(*b));
  const auto pa = a->named_parameters();
  const auto pb = b->named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].key(), pb[i].key());
    EXPECT_EQ(pa[i].value().sizes(), pb[i].value().sizes());
  }
}

TEST(PatchDiscriminator, ScoreMapShapesAndRange) {
  torch::NoGradGuard no_grad;
  PatchDiscriminator valid(PatchDiscriminatorSpec{6, 8, 0});
  auto s = score_patches(valid, torch::rand({2, 3, 70, 70}), torch::rand({2, 3, 70, 70}));
  EXPECT_EQ(s.sizes(), (std::vector<int64_t>{2, 1, 1, 1}));
  s = score_patches(valid, torch::rand({1, 3, 256, 256}), torch::rand({1, 3, 256, 256}));
  EXPECT_EQ(s.size(2), scoremap_size(256, valid->spec()));

  PatchDiscriminator padded(PatchDiscriminatorSpec{6, 8, 1});
  s = score_patches(padded, torch::rand({2, 3, 256, 256}) * 2 - 1, torch::rand({2, 3, 256, 256}) * 2 - 1);
  EXPECT_EQ(s.sizes(), (std::vector<int64_t>{2, 1, 30, 30}));
  EXPECT_GT(s.min().item<float>(), 0.0f);
  EXPECT_LT(s.max().item<float>(), 1.0f);
}

TEST(PatchDiscriminator, TooSmallInputThrows) {
  PatchDiscriminator valid(PatchDiscriminatorSpec{6, 8, 0});
  EXPECT_THROW(valid->forward(torch::rand({1, 3, 40, 40}), torch::rand({1, 3, 40, 40})), ShapeError);
  EXPECT_THROW(valid->forward(torch::rand({1, 3, 70, 70}), torch::rand({1, 3, 64, 64})), ShapeError);
}

TEST(PatchDiscriminator, TranslationCovariantOnInteriorCells) {
  torch::NoGradGuard no_grad;
  torch::manual_seed(4);
  PatchDiscriminator d(PatchDiscriminatorSpec{6, 8, 1});
  d->eval();
  const auto x = torch::rand({1, 3, 160, 160});
  const auto y = torch::rand({1, 3, 160, 160});
  // Total stride is 8: shifting the input 8 pixels right shifts the map one cell.
  const auto base = d->forward(x, y);
  const auto moved = d->forward(torch::roll(x, {8}, {3}), torch::roll(y, {8}, {3}));
  const int64_t s = base.size(3);
  ASSERT_EQ(s, 18);
  for (int64_t row = 6; row < 12; ++row) {
    for (int64_t col = 6; col < 12; ++col) {
      EXPECT_NEAR(moved[0][0][row][col + 1].item<float>(), base[0][0][row][col].item<float>(), 1e-5);
    }
  }
}

TEST(Reviser, ShapesAndRange) {
  torch::NoGradGuard no_grad;
  for (int size : {8, 32, 64, 96, 256}) {
    ReviserSpec spec;
    spec.base_width = 8;
    spec.image_size = size;
    Reviser r(spec);
    const auto p = revise_score(r, torch::rand({4, 3, size, size}), torch::rand({4, 3, size, size}));
    EXPECT_EQ(p.sizes(), (std::vector<int64_t>{4}));
    EXPECT_GT(p.min().item<float>(), 0.0f);
    EXPECT_LT(p.max().item<float>(), 1.0f);
    EXPECT_LE(spec.head_size(), 4);
  }
}

TEST(Reviser, DepthGrowsWithResolution) {
  ReviserSpec spec;
  spec.image_size = 64;
  EXPECT_EQ(spec.stage_widths(), (std::vector<int>{64, 128, 256, 512}));
  spec.image_size = 256;
  EXPECT_EQ(spec.stage_widths(), (std::vector<int>{64, 128, 256, 512, 512, 512}));
  spec.image_size = 4;
  EXPECT_THROW(spec.stage_widths(), ConfigError);
}

TEST(Reviser, IdenticalInputsIdenticalOutputs) {
  torch::NoGradGuard no_grad;
  ReviserSpec spec;
  spec.base_width = 8;
  spec.image_size = 32;
  Reviser r(spec);
  r->eval();
  const auto x = torch::rand({3, 3, 32, 32});
  const auto y = torch::rand({3, 3, 32, 32});
  EXPECT_TRUE(torch::equal(revise_score(r, x, y), revise_score(r, x, y)));
}

TEST(Reviser, ResolutionMismatchThrows) {
  ReviserSpec spec;
  spec.base_width = 8;
  spec.image_size = 32;
  Reviser r(spec);
  EXPECT_THROW(r->forward(torch::rand({1, 3, 64, 64}), torch::rand({1, 3, 64, 64})), ShapeError);
}

TEST(Reviser, CandidateGradientMatchesFiniteDifference) {
  torch::manual_seed(12);
  ReviserSpec spec;
  spec.base_width = 4;
  spec.image_size = 16;
  Reviser r(spec);
  r->to(torch::kDouble);
  r->eval();
  const auto x = torch::rand({1, 3, 16, 16}, torch::kDouble);
  auto cand = torch::rand({1, 3, 16, 16}, torch::kDouble).requires_grad_(true);
  const auto p = revise_score(r, x, cand).sum();
  const auto grad = torch::autograd::grad({p}, {cand})[0];
  EXPECT_TRUE(torch::isfinite(grad).all().item<bool>());
  torch::NoGradGuard no_grad;
  const auto f = [&] { return revise_score(r, x, cand).sum().item<double>(); };
  EXPECT_LT(max_relative_error(cand, grad, f, {0, 17, 200, 511, 700}, 1e-6), 1e-4);
}

TEST(Networks, ParameterGradientsMatchFiniteDifferenceInDouble) {
  torch::manual_seed(21);
  GeneratorSpec gs = small_generator(0.0);
  gs.base_width = 4;
  gs.n_residual_blocks = 1;
  Generator g(gs);
  PatchDiscriminator d(PatchDiscriminatorSpec{6, 4, 1});
  ReviserSpec rs;
  rs.base_width = 4;
  rs.image_size = 32;
  Reviser r(rs);
  g->to(torch::kDouble);
  d->to(torch::kDouble);
  r->to(torch::kDouble);
  g->eval();
  d->eval();
  r->eval();
  {
    // Zero-initialized biases put dead-ReLU pixels exactly on the kink.
    torch::NoGradGuard no_grad;
    for (nn::Module* m : std::initializer_list<nn::Module*>{g.get(), d.get(), r.get()}) {
      for (auto& p : m->parameters()) p.add_(torch::randn_like(p) * 0.05);
    }
  }
  const auto x = torch::rand({2, 3, 32, 32}, torch::kDouble);

  const auto check = [&](nn::Module& m, const std::function<torch::Tensor()>& loss) {
    for (auto& p : m.parameters()) p.mutable_grad() = torch::Tensor();
    loss().backward();
    for (auto& named : m.named_parameters()) {
      auto& p = named.value();
      if (p.numel() < 4) continue;
      const auto grad = p.grad().clone();
      torch::NoGradGuard no_grad;
      const auto f = [&] { return loss().item<double>(); };
      const int64_t n = p.numel();
      EXPECT_LT(max_relative_error(p, grad, f, {0, n / 3, n - 1}, 1e-6), 1e-4) << named.key();
    }
  };
  const auto w = torch::rand({2, 3, 32, 32}, torch::kDouble);
  check(*g, [&] { return (g->forward(x) * w).sum(); });
  check(*d, [&] { return score_patches(d, x, w).sum(); });
  check(*r, [&] { return revise_score(r, x, w).sum(); });
}

TEST(ToScoreMaps, ClampsAndSplits) {
  auto scores = torch::rand({3, 1, 4, 4}, torch::kDouble) * 0.5 + 0.25;
  scores[1][0][0][0] = 1.0;
  scores[2][0][3][3] = 0.0;
  const auto maps = to_score_maps(scores, 64);
  ASSERT_EQ(maps.size(), 3u);
  EXPECT_EQ(maps[0].size(), 4);
  EXPECT_EQ(maps[0].source_image_size(), 64);
  EXPECT_LT(maps[1].at(0, 0), 1.0);
  EXPECT_GT(maps[2].at(3, 3), 0.0);
  EXPECT_DOUBLE_EQ(maps[0].at(1, 2), scores[0][0][1][2].item<double>());
}
