#include <gtest/gtest.h>

#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "drpan/data.hpp"
#include "drpan/error.hpp"
#include "drpan/image_io.hpp"
#include "support/temp_dir.hpp"

using namespace drpan;
namespace fs = std::filesystem;

TEST(SplitPair, MidpointSplitOfSideBySideImage) {
  cv::Mat pair(256, 512, CV_8UC3, cv::Scalar(0, 0, 0));
  pair(cv::Rect(256, 0, 256, 256)).setTo(cv::Scalar(255, 255, 255));
  const auto s = split_pair(pair, 256, "p");
  EXPECT_EQ(s.condition.sizes(), (std::vector<int64_t>{3, 256, 256}));
  EXPECT_EQ(s.target.sizes(), (std::vector<int64_t>{3, 256, 256}));
  EXPECT_EQ(s.condition.max().item<float>(), -1.0f);
  EXPECT_EQ(s.target.min().item<float>(), 1.0f);
}

TEST(SplitPair, ResizesToResolution) {
  cv::Mat pair(100, 200, CV_8UC3, cv::Scalar(10, 20, 30));
  const auto s = split_pair(pair, 64, "p");
  EXPECT_EQ(s.condition.sizes(), (std::vector<int64_t>{3, 64, 64}));
}

TEST(SplitPair, OddWidthThrows) {
  cv::Mat pair(64, 129, CV_8UC3, cv::Scalar(0, 0, 0));
  EXPECT_THROW(split_pair(pair, 64, "odd"), ShapeError);
}

TEST(Normalization, RoundTripWithinOneLevel) {
  cv::Mat img(17, 23, CV_8UC3);
  cv::randu(img, 0, 256);
  const auto t = mat_to_tensor(img);
  EXPECT_GE(t.min().item<float>(), -1.0f);
  EXPECT_LE(t.max().item<float>(), 1.0f);
  const cv::Mat back = tensor_to_mat(t);
  cv::Mat diff;
  cv::absdiff(img, back, diff);
  double max_diff = 0.0;
  cv::minMaxLoc(diff.reshape(1), nullptr, &max_diff);
  EXPECT_LE(max_diff, 1.0);
}

TEST(LoadPairedDir, EmptyDirectoryIsAnError) {
  testkit::TempDir dir;
  EXPECT_THROW(load_paired_dir(dir.path(), 64), IoError);
  EXPECT_THROW(load_paired_dir(dir / "missing", 64), IoError);
}

TEST(LoadPairedDir, ReadsSortedFilesWithoutManifest) {
  testkit::TempDir dir;
  cv::Mat pair(32, 64, CV_8UC3, cv::Scalar(0, 0, 0));
  write_png(dir / "b.png", pair);
  write_png(dir / "a.png", pair);
  const auto ds = load_paired_dir(dir.path(), 32);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].id, "a");
  EXPECT_EQ(ds[1].id, "b");
  EXPECT_EQ(ds.resolution(), 32);
}

TEST(LoadPairedDir, UnreadableFileThrows) {
  testkit::TempDir dir;
  std::ofstream(dir / "broken.png") << "not an image";
  EXPECT_THROW(load_paired_dir(dir.path(), 32), IoError);
}

TEST(ToyData, ZeroSamplesWritesNothing) {
  testkit::TempDir dir;
  ToyTaskSpec spec;
  EXPECT_TRUE(make_toy_dataset(spec, 0, dir / "toy").empty());
  EXPECT_FALSE(fs::exists(dir / "toy"));
}

TEST(ToyData, SameSeedGivesByteIdenticalFiles) {
  testkit::TempDir dir;
  ToyTaskSpec spec;
  spec.seed = 5;
  const auto ids = make_toy_dataset(spec, 6, dir / "a");
  make_toy_dataset(spec, 6, dir / "b");
  ASSERT_EQ(ids.size(), 6u);
  for (const auto& id : ids) {
    EXPECT_EQ(testkit::read_file(dir / "a" / (id + ".png")), testkit::read_file(dir / "b" / (id + ".png")));
  }
  EXPECT_EQ(testkit::read_file(dir / "a" / "manifest.txt"), testkit::read_file(dir / "b" / "manifest.txt"));
  spec.seed = 6;
  make_toy_dataset(spec, 1, dir / "c");
  EXPECT_NE(testkit::read_file(dir / "a" / "toy_00000.png"), testkit::read_file(dir / "c" / "toy_00000.png"));
}

TEST(ToyData, TargetsDifferFromConditionsOnAtLeastOnePercent) {
  testkit::TempDir dir;
  ToyTaskSpec spec;
  make_toy_dataset(spec, 40, dir.path());
  const auto ds = load_paired_dir(dir.path(), spec.image_size);
  ASSERT_EQ(ds.size(), 40u);
  for (const auto& s : ds.samples()) {
    const auto differs = (s.condition != s.target).any(0);
    const double fraction = differs.to(torch::kDouble).mean().item<double>();
    EXPECT_GE(fraction, 0.01) << s.id;
    EXPECT_GE(s.condition.min().item<float>(), -1.0f);
    EXPECT_LE(s.target.max().item<float>(), 1.0f);
  }
}

TEST(EpochBatches, DeterministicPermutationWithShortTail) {
  const auto a = epoch_batches(21, 8, 3, 0);
  const auto b = epoch_batches(21, 8, 3, 0);
  const auto c = epoch_batches(21, 8, 3, 1);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[2].size(), 5u);
  std::vector<std::size_t> all;
  for (const auto& batch : a) all.insert(all.end(), batch.begin(), batch.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_THROW(epoch_batches(4, 0, 0, 0), ConfigError);
}

TEST(PairedDataset, BatchStacksAndFlips) {
  std::vector<PairedSample> samples;
  for (int i = 0; i < 3; ++i) {
    auto x = torch::arange(12, torch::kFloat).view({1, 3, 4}).expand({3, 3, 4}).contiguous() * (i + 1) / 100.0;
    samples.push_back({x, -x, "s" + std::to_string(i)});
  }
  const PairedDataset ds(samples);
  const std::vector<std::size_t> idx{2, 0};
  const auto plain = ds.batch(idx);
  EXPECT_EQ(plain.x.sizes(), (std::vector<int64_t>{2, 3, 3, 4}));
  EXPECT_EQ(plain.ids, (std::vector<std::string>{"s2", "s0"}));
  const auto flipped = ds.batch(idx, {true, false});
  EXPECT_TRUE(torch::equal(flipped.x[0], samples[2].condition.flip({2})));
  EXPECT_TRUE(torch::equal(flipped.y[0], samples[2].target.flip({2})));
  EXPECT_TRUE(torch::equal(flipped.x[1], samples[0].condition));
  EXPECT_THROW(ds.batch({}), ShapeError);
}

TEST(PairedDataset, RejectsMixedShapes) {
  std::vector<PairedSample> samples{{torch::zeros({3, 4, 4}), torch::zeros({3, 4, 4}), "a"},
                                    {torch::zeros({3, 8, 8}), torch::zeros({3, 8, 8}), "b"}};
  EXPECT_THROW(PairedDataset{samples}, ShapeError);
}
