#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "frnet/nn.hpp"
#include "frnet/profile.hpp"
#include "frnet/reference.hpp"
#include "test_util.hpp"

using namespace frnet;
using nn::FrNet;
using nn::ModelConfig;

namespace {

ModelConfig small(std::size_t size = 32) {
  ModelConfig c = ModelConfig::desk();
  c.input_size = size;
  return c;
}

}  // namespace

TEST(Config, DefaultsMatchArchitecture) {
  const auto c = ModelConfig::paper();
  EXPECT_EQ(c.input_size, 256u);
  EXPECT_EQ(c.stage_channels, (std::array<std::size_t, 5>{16, 24, 48, 64, 80}));
  EXPECT_EQ(c.encoder_dims, (std::array<std::size_t, 3>{64, 80, 96}));
  EXPECT_EQ(c.head_channels, 320u);
  EXPECT_EQ(c.output_dims, 2u);
  EXPECT_EQ(ModelConfig::desk().input_size, 64u);
}

TEST(Config, TextRoundTrip) {
  ModelConfig c = ModelConfig::paper();
  c.encoders_per_block = {2, 1, 3};
  c.ablate("disable_concat_shortcut");
  EXPECT_EQ(ModelConfig::from_text(c.to_text()), c);
  const auto parsed = ModelConfig::from_text("# comment\ninput_size = 64  # trailing\n\nhead_channels=128\n");
  EXPECT_EQ(parsed.input_size, 64u);
  EXPECT_EQ(parsed.head_channels, 128u);
  EXPECT_EQ(parsed.stage_channels, ModelConfig().stage_channels);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(ModelConfig::from_text("input_size = 48\n"), InvalidArgument);
  EXPECT_THROW(ModelConfig::from_text("input_size = 16\n"), InvalidArgument);
  EXPECT_THROW(ModelConfig::from_text("widht = 3\n"), InvalidArgument);
  EXPECT_THROW(ModelConfig::from_text("stage_channels = 1,2\n"), InvalidArgument);
  EXPECT_THROW(ModelConfig::from_text("no equals sign\n"), InvalidArgument);
  EXPECT_THROW(ModelConfig().ablate("disable_everything"), InvalidArgument);
  EXPECT_THROW(ModelConfig::load("/nonexistent/frnet.cfg"), IoError);
}

TEST(FrNet, OutputIsYawPitchPair) {
  FrNet model(small(), 1);
  const Tensor image = reference::random_tensor({3, 32, 32}, 2, 0, 1);
  const Tensor y = model.predict(image);
  EXPECT_EQ(y.shape(), (Shape{2}));
  EXPECT_TRUE(std::isfinite(y[0]) && std::isfinite(y[1]));
  EXPECT_THROW(model.predict(reference::random_tensor({3, 64, 64}, 2)), ShapeError);
  EXPECT_THROW(model.predict(reference::random_tensor({1, 32, 32}, 2)), ShapeError);
}

TEST(FrNet, FullSizeForwardShapes) {
  FrNet model(ModelConfig::paper(), 0);
  const auto trace = model.trace();
  auto shape_of = [&](const std::string& name) {
    for (const auto& p : trace)
      if (p.name == name) return p.output;
    return Shape{};
  };
  EXPECT_EQ(shape_of("stem"), (Shape{16, 128, 128}));
  EXPECT_EQ(shape_of("frb1.fuse"), (Shape{48, 32, 32}));
  EXPECT_EQ(shape_of("frb1.enc0.filter"), (Shape{64, 32, 32}));
  EXPECT_EQ(shape_of("frb2.enc0.filter"), (Shape{80, 16, 16}));
  EXPECT_EQ(shape_of("frb3.enc0.filter"), (Shape{96, 8, 8}));
  EXPECT_EQ(shape_of("head"), (Shape{320, 8, 8}));
  EXPECT_EQ(shape_of("fc"), (Shape{2}));
  const Tensor y = model.predict(reference::random_tensor({3, 256, 256}, 3, 0, 1));
  EXPECT_EQ(y.shape(), (Shape{2}));
}

TEST(FrNet, SeededInitIsDeterministic) {
  FrNet a(small(), 7), b(small(), 7), c(small(), 8);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name(), pb[i]->name());
    EXPECT_EQ(pa[i]->value(), pb[i]->value());
    differs = differs || !(pa[i]->value() == pc[i]->value());
  }
  EXPECT_TRUE(differs);
}

TEST(FrNet, MasksStartNearIdentityFilter) {
  FrNet model(small(), 0);
  const auto* re = model.find("frb1.enc0.filter.mask_re");
  const auto* im = model.find("frb1.enc0.filter.mask_im");
  ASSERT_TRUE(re && im);
  EXPECT_EQ(re->value().shape(), (Shape{64, 4, 4}));
  EXPECT_NEAR(re->value().array().mean(), 1.0, 0.01);
  EXPECT_NEAR(im->value().array().mean(), 0.0, 0.01);
  EXPECT_LT((re->value().array() - 1).abs().maxCoeff(), 0.2);
}

TEST(FrNet, ZeroHeadGivesBiasOutput) {
  FrNet model(small(), 0);
  model.find("fc.weight")->value().array().setZero();
  model.find("fc.bias")->value() = Tensor({2}, {0.25, -0.5});
  const Tensor y = model.predict(reference::random_tensor({3, 32, 32}, 4, 0, 1));
  EXPECT_EQ(y[0], 0.25);
  EXPECT_EQ(y[1], -0.5);
}

TEST(FrNet, ParameterNamesAreUnique) {
  FrNet model(ModelConfig::paper(), 0);
  std::set<std::string> names;
  for (const auto* p : model.parameters()) EXPECT_TRUE(names.insert(p->name()).second) << p->name();
}

TEST(FrNet, ParameterBudget) {
  FrNet model(ModelConfig::paper(), 0);
  const auto n = model.parameter_count();
  EXPECT_GE(n, 603'000u);
  EXPECT_LE(n, 737'000u);
}

// At full size every mask is at least 8x8. On 2x2 or 1x1 maps all frequency bins are
// self-conjugate, so the imaginary mask part cannot reach the real output.
TEST(FrNet, GradientsReachEveryParameter) {
  FrNet model(ModelConfig::paper(), 3);
  ad::Tape tape;
  ad::Var out = model.forward(tape, reference::random_tensor({3, 256, 256}, 5, 0, 1));
  auto grads = tape.gradients(ad::smooth_l1(out, tape.constant(Tensor({2}, {0.3, -0.2}))));
  for (const auto* p : model.parameters()) {
    ASSERT_TRUE(grads.count(p)) << p->name();
    EXPECT_GT(grads.at(p).array().abs().sum(), 0) << p->name();
  }
}

TEST(Ablation, EachFlagBuildsAndRuns) {
  for (const char* flag : {"disable_fft_residual_block", "disable_fft_encoder", "disable_concat_shortcut",
                           "disable_encoder_shortcut"}) {
    auto c = small();
    c.ablate(flag);
    FrNet model(c, 0);
    EXPECT_EQ(model.predict(reference::random_tensor({3, 32, 32}, 1, 0, 1)).shape(), (Shape{2})) << flag;
  }
}

TEST(Ablation, EncoderShortcutKeepsParameterCount) {
  auto c = ModelConfig::paper();
  const auto base = FrNet(c, 0).parameter_count();
  c.ablate("disable_encoder_shortcut");
  FrNet model(c, 0);
  EXPECT_EQ(model.parameter_count(), base);
  for (const auto& p : model.trace()) EXPECT_EQ(p.name.find("filter_shortcut"), std::string::npos);
}

TEST(Ablation, ConcatShortcutShrinksOnlyFusion) {
  auto c = ModelConfig::paper();
  const auto base = FrNet(c, 0).parameter_count();
  c.ablate("disable_concat_shortcut");
  const auto ablated = FrNet(c, 0).parameter_count();
  // fuse loses the block-input channels: channels x channels weights per block
  const std::size_t expected = 48 * 48 + 64 * 64 + 80 * 80;
  EXPECT_EQ(base - ablated, expected);
}

TEST(Ablation, EncoderRemovalDropsEncoderParameters) {
  auto c = ModelConfig::paper();
  FrNet full(c, 0);
  std::size_t enc = 0;
  for (const auto* p : full.parameters())
    if (p->name().find(".enc") != std::string::npos) enc += p->numel();
  c.ablate("disable_fft_encoder");
  EXPECT_EQ(full.parameter_count() - FrNet(c, 0).parameter_count(), enc);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  test::TempDir dir;
  FrNet model(small(), 11);
  nn::save_checkpoint(dir / "a.frck", model);
  FrNet loaded = nn::load_checkpoint(dir / "a.frck");
  EXPECT_EQ(loaded.config(), model.config());
  nn::save_checkpoint(dir / "b.frck", loaded);
  EXPECT_EQ(test::read_file(dir / "a.frck"), test::read_file(dir / "b.frck"));
  const Tensor image = reference::random_tensor({3, 32, 32}, 1, 0, 1);
  EXPECT_EQ(model.predict(image), loaded.predict(image));
  EXPECT_EQ(nn::read_checkpoint_config(dir / "a.frck"), model.config());
}

TEST(Checkpoint, LoadIntoRequiresMatchingConfig) {
  test::TempDir dir;
  FrNet model(small(), 1);
  nn::save_checkpoint(dir / "m.frck", model);
  FrNet target(small(), 2);
  nn::load_checkpoint_into(dir / "m.frck", target);
  EXPECT_EQ(target.find("stem.weight")->value(), model.find("stem.weight")->value());
  auto other = small();
  other.ablate("disable_concat_shortcut");
  FrNet mismatched(other, 0);
  EXPECT_THROW(nn::load_checkpoint_into(dir / "m.frck", mismatched), FormatError);
}

TEST(Checkpoint, CorruptFilesFailLoudly) {
  test::TempDir dir;
  nn::save_checkpoint(dir / "m.frck", FrNet(small(), 1));
  const std::string good = test::read_file(dir / "m.frck");

  std::string bad_magic = good;
  bad_magic[1] = 'X';
  test::write_file(dir / "magic.frck", bad_magic);
  EXPECT_THROW(nn::load_checkpoint(dir / "magic.frck"), FormatError);

  std::string bad_version = good;
  bad_version[4] = 9;
  test::write_file(dir / "version.frck", bad_version);
  EXPECT_THROW(nn::load_checkpoint(dir / "version.frck"), FormatError);

  test::write_file(dir / "short.frck", good.substr(0, good.size() - 100));
  EXPECT_THROW(nn::load_checkpoint(dir / "short.frck"), IntegrityError);

  test::write_file(dir / "header.frck", good.substr(0, 30));
  EXPECT_THROW(nn::load_checkpoint(dir / "header.frck"), IntegrityError);

  EXPECT_THROW(nn::load_checkpoint(dir / "missing.frck"), IoError);
}
