// Copyright 2026 The reuseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "reuseg/bench.hpp"
#include "test_util.hpp"

namespace reuseg {
namespace {

std::shared_ptr<const ModelSet> tiny_models() {
  static auto models = make_model_set(random_init(ModelConfig::tiny(), 42));
  return models;
}

Tensor map_from(std::int64_t h, std::int64_t w, const std::vector<int>& bits) {
  std::vector<float> v;
  for (int b : bits) v.push_back(b ? 0.9f : 0.1f);
  return Tensor({h, w}, v);
}

TEST(Metrics, AccuracyExamples) {
  const Tensor x = prompt_probability(testing::random_tensor({16, 16}, 1, 2.0));
  EXPECT_EQ(accuracy(x, x), 100.0);
  EXPECT_EQ(accuracy(Tensor::full({4, 4}, 0.9f), Tensor::full({4, 4}, 0.1f)), 0.0);
  // Checkerboard against an all-positive map agrees on exactly half the pixels.
  std::vector<int> board;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) board.push_back((i + j) % 2);
  EXPECT_EQ(accuracy(map_from(8, 8, board), Tensor::full({8, 8}, 0.9f)), 50.0);
  EXPECT_THROW(accuracy(x, Tensor::zeros({16, 15})), DimensionError);
  EXPECT_THROW(accuracy(x, x, 1.0), InputError);
}

TEST(Metrics, MiouExamples) {
  const Tensor x = prompt_probability(testing::random_tensor({16, 16}, 2, 2.0));
  EXPECT_EQ(miou(x, x), 100.0);
  std::vector<int> top, bottom;
  for (int i = 0; i < 16; ++i) {
    top.push_back(i < 8);
    bottom.push_back(i >= 8);
  }
  EXPECT_EQ(miou(map_from(4, 4, top), map_from(4, 4, bottom)), 0.0);
  // a:  1 1 0    truth: 1 0 0
  //     1 0 0           1 1 0
  //     0 0 0           0 0 0
  // positive: tp 2, fp 1, fn 1 -> 2/4; negative: tn 5 -> 5/7.
  const Tensor a = map_from(3, 3, {1, 1, 0, 1, 0, 0, 0, 0, 0});
  const Tensor t = map_from(3, 3, {1, 0, 0, 1, 1, 0, 0, 0, 0});
  EXPECT_NEAR(miou(a, t), 100.0 * (2.0 / 4.0 + 5.0 / 7.0) / 2.0, 1e-12);
  EXPECT_EQ(miou(a, t), miou(t, a));
  EXPECT_NEAR(accuracy(a, t), 100.0 * 7.0 / 9.0, 1e-12);
  EXPECT_NEAR(recall(a, t), 100.0 * 2.0 / 3.0, 1e-12);
  // Positive class empty in both maps scores 1.
  EXPECT_EQ(miou(Tensor::full({3, 3}, 0.1f), Tensor::full({3, 3}, 0.1f)), 100.0);
  EXPECT_EQ(miou(Tensor::full({3, 3}, 0.9f), Tensor::full({3, 3}, 0.1f)), 0.0);
}

TEST(Metrics, SymmetryOnRandomMaps) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Tensor a = prompt_probability(testing::random_tensor({12, 12}, s, 1.0));
    const Tensor b = prompt_probability(testing::random_tensor({12, 12}, s + 50, 1.0));
    EXPECT_EQ(miou(a, b), miou(b, a));
    EXPECT_EQ(accuracy(a, b), accuracy(b, a));
    EXPECT_GE(miou(a, b), 0.0);
    EXPECT_LE(miou(a, b), 100.0);
  }
}

TEST(Metrics, Speedup) {
  EXPECT_NEAR(speedup(1.81, 16.78), 927.41, 927.41 * 0.01);
  EXPECT_NEAR(speedup(1.81, 4.98), 275.13, 275.13 * 0.01);
  EXPECT_EQ(speedup(3.3, 3.3), 100.0);
  EXPECT_THROW(speedup(0.0, 1.0), InputError);
  EXPECT_THROW(speedup(-1.0, 1.0), InputError);
}

TEST(Noise, ParseAndValidate) {
  EXPECT_EQ(NoiseSpec::parse("none").kind, NoiseSpec::Kind::None);
  const NoiseSpec g = NoiseSpec::parse("gaussian:12.5", 3);
  EXPECT_EQ(g.kind, NoiseSpec::Kind::Gaussian);
  EXPECT_EQ(g.amount, 12.5);
  EXPECT_EQ(g.seed, 3u);
  EXPECT_EQ(g.str(), "gaussian:12.5");
  EXPECT_EQ(NoiseSpec::parse("saltpepper:0.05").str(), "saltpepper:0.05");
  EXPECT_THROW(NoiseSpec::parse("saltpepper:1.5"), ConfigError);
  EXPECT_THROW(NoiseSpec::parse("gaussian:-1"), ConfigError);
  EXPECT_THROW(NoiseSpec::parse("gaussian"), ConfigError);
  EXPECT_THROW(NoiseSpec::parse("speckle:0.1"), ConfigError);
  EXPECT_THROW(NoiseSpec::parse("gaussian:abc"), ConfigError);
}

TEST(Noise, NoneIdentityAndDeterminism) {
  const RgbImage img = synth_image(64, 1);
  EXPECT_EQ(add_noise(img, NoiseSpec{}), img);
  const NoiseSpec g = NoiseSpec::parse("gaussian:20", 7);
  EXPECT_EQ(add_noise(img, g), add_noise(img, g));
  EXPECT_NE(add_noise(img, g), img);
  EXPECT_EQ(add_noise(img, NoiseSpec::parse("gaussian:0", 7)), img);
  const NoiseSpec sp = NoiseSpec::parse("saltpepper:0.2", 9);
  EXPECT_EQ(add_noise(img, sp), add_noise(img, sp));
}

TEST(Noise, SaltPepperFraction) {
  RgbImage gray{400, 400, std::vector<std::uint8_t>(400 * 400 * 3, 128)};
  const RgbImage noisy = add_noise(gray, NoiseSpec::parse("saltpepper:0.1", 5));
  std::int64_t hit = 0, salt = 0;
  for (std::size_t i = 0; i < noisy.pixels.size(); i += 3) {
    if (noisy.pixels[i] != 128) {
      ++hit;
      salt += noisy.pixels[i] == 255;
      EXPECT_TRUE(noisy.pixels[i] == 0 || noisy.pixels[i] == 255);
      EXPECT_EQ(noisy.pixels[i], noisy.pixels[i + 2]);
    }
  }
  EXPECT_NEAR(hit / 160000.0, 0.1, 0.01);
  EXPECT_NEAR(static_cast<double>(salt) / hit, 0.5, 0.05);
}

TEST(Synth, DeterministicFilesOfDeclaredSize) {
  const auto dir = std::filesystem::temp_directory_path() / "reuseg_synth_test";
  std::filesystem::remove_all(dir);
  const auto a = synth_corpus(dir / "a", 5, 80, 42);
  const auto b = synth_corpus(dir / "b", 5, 80, 42);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    std::ifstream fa(a[i], std::ios::binary), fb(b[i], std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {});
    const std::string sb((std::istreambuf_iterator<char>(fb)), {});
    EXPECT_EQ(sa, sb);
    const RgbImage img = read_ppm(a[i]);
    EXPECT_EQ(img.width, 80);
    EXPECT_EQ(img.height, 80);
  }
  const auto corpus = load_corpus(dir / "a");
  EXPECT_EQ(corpus.size(), 5u);
  EXPECT_EQ(corpus[0], synth_images(5, 80, 42)[0]);
  EXPECT_EQ(load_corpus(a[2]).size(), 1u);
  std::filesystem::remove_all(dir);
}

TEST(Synth, HistogramNonDegenerate) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const RgbImage img = synth_image(96, s);
    const std::set<std::uint8_t> values(img.pixels.begin(), img.pixels.end());
    EXPECT_GE(values.size(), 8u);
  }
  EXPECT_NE(synth_image(96, 1), synth_image(96, 2));
}

TEST(Synth, Errors) {
  EXPECT_THROW(synth_corpus("/proc/reuseg_cannot_write", 1, 8, 1), OutputError);
  try {
    load_corpus("/nonexistent/corpus");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/corpus"), std::string::npos);
  }
  EXPECT_THROW(synth_images(0, 8, 1), InputError);
}

BenchOptions small(std::vector<std::string> presets, std::int64_t frames = 4) {
  BenchOptions o;
  o.presets = std::move(presets);
  o.frames = frames;
  return o;
}

TEST(Benchmark, SelfBaseline) {
  const auto corpus = synth_images(3, 96, 42);
  const BenchReport r = run_benchmark(corpus, tiny_models(), small({"original"}));
  const PresetReport& p = r.preset("original");
  EXPECT_EQ(p.mean_accuracy_pct, 100.0);
  EXPECT_EQ(p.miou_pct, 100.0);
  EXPECT_EQ(p.speedup_pct, 100.0);
  EXPECT_NEAR(p.hz * p.mean_duration_s, 1.0, 1e-9);
  EXPECT_EQ(p.image_encoder_passes_per_frame, 4.0);
  EXPECT_EQ(p.text_encoder_passes_per_frame, 4.0);
  EXPECT_EQ(r.P, 4);
  EXPECT_EQ(r.frames, 4);
  EXPECT_THROW(r.preset("fp"), InputError);
}

TEST(Benchmark, CachingPresetsAreExact) {
  const auto corpus = synth_images(3, 96, 42);
  const BenchReport r = run_benchmark(corpus, tiny_models(), small({"original", "rpe"}));
  EXPECT_EQ(r.preset("rpe").mean_accuracy_pct, 100.0);
  EXPECT_EQ(r.preset("rpe").miou_pct, 100.0);
  EXPECT_EQ(r.preset("rpe").max_abs_diff, 0.0);
}

TEST(Benchmark, HalfPrecisionDegradesWithinBound) {
  const auto corpus = synth_images(6, 96, 42);
  const BenchReport r = run_benchmark(corpus, tiny_models(), small({"original", "fp"}, 6));
  const PresetReport& fp = r.preset("fp");
  EXPECT_LT(fp.max_abs_diff, 1.0);
  EXPECT_GT(fp.max_abs_diff, 0.0);
  EXPECT_GE(fp.mean_accuracy_pct, 95.0);
  EXPECT_LT(fp.mean_accuracy_pct, 100.0);
}

TEST(Benchmark, ReportShapeAndDeterminism) {
  const auto corpus = synth_images(2, 64, 3);
  BenchOptions o = small({"original", "blabberseg", "fp-rppe"}, 3);
  o.noise = NoiseSpec::parse("saltpepper:0.05", 11);
  o.machine_note = "unit";
  const BenchReport a = run_benchmark(corpus, tiny_models(), o);
  const BenchReport b = run_benchmark(corpus, tiny_models(), o);
  const auto j = nlohmann::json::parse(a.to_json());
  for (const char* key : {"seed", "frames", "P", "image_size", "input_size", "preset_list",
                          "machine_note", "noise", "fusion", "threshold", "presets"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["input_size"], 64);
  EXPECT_EQ(j["noise"], "saltpepper:0.05");
  for (const char* name : {"original", "blabberseg", "fp-rppe"}) {
    const auto& p = j["presets"][name];
    for (const char* key : {"mean_duration_s", "std_duration_s", "hz", "speedup_pct",
                            "mean_accuracy_pct", "miou_pct", "mean_transform_s"}) {
      ASSERT_TRUE(p.contains(key)) << name << key;
      EXPECT_TRUE(std::isfinite(p[key].get<double>()));
    }
    EXPECT_EQ(a.preset(name).mean_accuracy_pct, b.preset(name).mean_accuracy_pct);
    EXPECT_EQ(a.preset(name).miou_pct, b.preset(name).miou_pct);
    EXPECT_EQ(a.preset(name).max_abs_diff, b.preset(name).max_abs_diff);
  }
  EXPECT_EQ(a.preset("blabberseg").image_encoder_passes_per_frame, 1.0);
  EXPECT_EQ(a.preset("blabberseg").encoder_blocks_per_frame, 10.0);
  EXPECT_EQ(a.preset("blabberseg").pos_embed_recomputations, 1u);
}

TEST(Benchmark, RequiresBaselineAndValidOptions) {
  const auto corpus = synth_images(1, 32, 3);
  EXPECT_THROW(run_benchmark(corpus, tiny_models(), small({"fp"})), InputError);
  EXPECT_THROW(run_benchmark({}, tiny_models(), small({"original"})), InputError);
  EXPECT_THROW(run_benchmark(corpus, tiny_models(), small({"original", "warp"})), ConfigError);
}

}  // namespace
}  // namespace reuseg
