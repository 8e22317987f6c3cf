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


#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reuseg/bench.hpp"
#include "reuseg/pipeline.hpp"
#include "reuseg/weights.hpp"

namespace {

using namespace reuseg;

struct Common {
  std::string weights = "random:tiny";
  std::string tokens;
  std::uint64_t seed = 42;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--weights", c.weights, "Container path, random:tiny or random:base")
      ->capture_default_str();
  cmd->add_option("--tokens", c.tokens, "Pre-tokenized prompt table (JSON)");
  cmd->add_option("--seed", c.seed, "Seed for weights, corpus and noise")->capture_default_str();
}

WeightStore resolve_weights(const std::string& spec, std::uint64_t seed) {
  if (spec == "random:tiny") return random_init(ModelConfig::tiny(), seed);
  if (spec == "random:base") return random_init(ModelConfig::base(), seed);
  if (spec.starts_with("random:")) throw ConfigError("unknown random preset '" + spec + "'");
  return load(spec);
}

std::shared_ptr<const ModelSet> resolve_models(const Common& c) {
  std::shared_ptr<const PromptTokenTable> table;
  if (!c.tokens.empty()) {
    table = std::make_shared<const PromptTokenTable>(PromptTokenTable::load(c.tokens));
  }
  return make_model_set(resolve_weights(c.weights, c.seed), table);
}

std::vector<RgbImage> resolve_corpus(const std::string& corpus, std::int64_t count,
                                     std::int64_t size, std::uint64_t seed) {
  if (!corpus.empty()) return load_corpus(corpus);
  return synth_images(count, size, seed);
}

void print_table(const BenchReport& r) {
  std::printf("P=%lld frames=%lld image=%lld input=%lld noise=%s fusion=%s\n",
              static_cast<long long>(r.P), static_cast<long long>(r.frames),
              static_cast<long long>(r.image_size), static_cast<long long>(r.input_size),
              r.noise.c_str(), r.fusion.c_str());
  std::printf("%-11s %10s %9s %9s %9s %15s %15s %11s\n", "preset", "duration_s", "std_s", "hz",
              "speedup%", "accuracy%", "miou%", "transform_s");
  for (const auto& p : r.presets) {
    std::printf("%-11s %10.5f %9.5f %9.2f %9.1f %7.2f+-%-6.2f %7.2f+-%-6.2f %11.6f\n",
                p.name.c_str(), p.mean_duration_s, p.std_duration_s, p.hz, p.speedup_pct,
                p.mean_accuracy_pct, p.std_accuracy_pct, p.miou_pct, p.std_miou_pct,
                p.mean_transform_s);
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw OutputError("cannot write '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-prompt segmentation engine with prompt, embedding and activation reuse"};
  app.require_subcommand(1);

  // bench
  Common bench_common;
  BenchOptions bench;
  std::vector<std::string> presets;
  std::string prompts = "grass,lawn,flat,park";
  std::string noise = "none";
  std::string fusion = "mean";
  std::string corpus;
  std::string report_path;
  std::int64_t size = 352;
  std::int64_t corpus_count = 10;
  auto* bench_cmd = app.add_subcommand("bench", "Time presets and score them against the original");
  add_common(bench_cmd, bench_common);
  bench_cmd->add_option("--preset", presets, "Preset to run (repeatable); original is always added")
      ->check(CLI::IsMember(preset_names()));
  bench_cmd->add_option("--frames", bench.frames, "Frames per preset, first one is warm-up")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--prompts", prompts, "Comma-separated prompts")->capture_default_str();
  bench_cmd->add_option("--size", size, "Side of synthesized input frames")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--count", corpus_count, "Synthesized corpus size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--corpus", corpus, "PPM file or directory instead of a synthetic corpus");
  bench_cmd->add_option("--noise", noise, "none | gaussian:SIGMA | saltpepper:P")
      ->capture_default_str();
  bench_cmd->add_option("--fusion", fusion, "mean | min | max")->capture_default_str();
  bench_cmd->add_option("--threshold", bench.threshold, "Binarization threshold")
      ->capture_default_str();
  bench_cmd->add_option("--report", report_path, "Write the JSON report here");
  bench_cmd->add_option("--machine-note", bench.machine_note, "Free text stored in the report");

  // synth
  std::string synth_out;
  std::int64_t synth_count = 10;
  std::int64_t synth_size = 352;
  std::uint64_t synth_seed = 42;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic PPM corpus");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--count", synth_count, "Number of frames")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--size", synth_size, "Frame side in pixels")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth_seed, "Corpus seed")->capture_default_str();

  // compare
  Common cmp_common;
  std::string cmp_preset = "blabberseg";
  std::string cmp_prompts = "grass,lawn,flat,park";
  std::string cmp_corpus;
  std::string cmp_heatmap;
  std::string cmp_fusion = "mean";
  std::int64_t cmp_frames = 3;
  std::int64_t cmp_size = 352;
  double cmp_threshold = 0.5;
  auto* cmp_cmd = app.add_subcommand("compare", "Per-frame agreement of a preset with the original");
  add_common(cmp_cmd, cmp_common);
  cmp_cmd->add_option("--preset", cmp_preset, "Preset to compare")
      ->capture_default_str()
      ->check(CLI::IsMember(preset_names()));
  cmp_cmd->add_option("--prompts", cmp_prompts, "Comma-separated prompts")->capture_default_str();
  cmp_cmd->add_option("--frames", cmp_frames, "Frames to compare")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--size", cmp_size, "Side of synthesized input frames")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--corpus", cmp_corpus, "PPM file or directory");
  cmp_cmd->add_option("--fusion", cmp_fusion, "mean | min | max")->capture_default_str();
  cmp_cmd->add_option("--threshold", cmp_threshold, "Binarization threshold")
      ->capture_default_str();
  cmp_cmd->add_option("--heatmap", cmp_heatmap, "Write the last fused map of the preset as PGM");

  // weights
  Common w_common;
  std::string w_out;
  std::string w_dtype = "f32";
  auto* w_cmd = app.add_subcommand("weights", "Write a weight container and print its checksum");
  add_common(w_cmd, w_common);
  w_cmd->add_option("--out", w_out, "Container path");
  w_cmd->add_option("--dtype", w_dtype, "f32 | f16")
      ->capture_default_str()
      ->check(CLI::IsMember({"f32", "f16"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*bench_cmd) {
      bench.presets = {"original"};
      for (const auto& p : presets) {
        if (std::find(bench.presets.begin(), bench.presets.end(), p) == bench.presets.end()) {
          bench.presets.push_back(p);
        }
      }
      if (presets.empty()) bench.presets.push_back("blabberseg");
      bench.prompts = PromptSet::parse(prompts).prompts();
      bench.seed = bench_common.seed;
      bench.noise = NoiseSpec::parse(noise, bench_common.seed);
      bench.fusion = parse_fusion(fusion);
      const auto models = resolve_models(bench_common);
      const auto frames = resolve_corpus(corpus, corpus_count, size, bench_common.seed);
      const BenchReport report = run_benchmark(frames, models, bench);
      print_table(report);
      if (!report_path.empty()) write_text(report_path, report.to_json());
    } else if (*synth_cmd) {
      const auto paths = synth_corpus(synth_out, synth_count, synth_size, synth_seed);
      std::printf("wrote %zu frames to %s\n", paths.size(), synth_out.c_str());
    } else if (*cmp_cmd) {
      const auto models = resolve_models(cmp_common);
      const auto frames = resolve_corpus(cmp_corpus, cmp_frames, cmp_size, cmp_common.seed);
      const PromptSet ps = PromptSet::parse(cmp_prompts);
      PipelineOptions popts;
      popts.fusion = parse_fusion(cmp_fusion);
      Engine naive(models, popts);
      Engine opt(models, popts);
      const auto flags = OptimizationFlags::preset(cmp_preset);
      Tensor last;
      std::printf("%-6s %12s %10s %10s\n", "frame", "max_abs_diff", "accuracy%", "miou%");
      for (std::int64_t i = 0; i < cmp_frames; ++i) {
        const RgbImage& img = frames[static_cast<std::size_t>(i) % frames.size()];
        const FusedHeatmap ref = naive.segment_naive(img, ps);
        FusedHeatmap got = opt.segment_optimized(img, ps, flags);
        std::printf("%-6lld %12.6g %10.3f %10.3f\n", static_cast<long long>(i),
                    static_cast<double>(max_abs_diff(got.fused, ref.fused)),
                    accuracy(got.fused, ref.fused, cmp_threshold),
                    miou(got.fused, ref.fused, cmp_threshold));
        last = std::move(got.fused);
      }
      if (!cmp_heatmap.empty()) write_pgm(cmp_heatmap, last);
    } else if (*w_cmd) {
      WeightStore store = resolve_weights(w_common.weights, w_common.seed);
      if (w_dtype == "f16") store = cast_store(store, DType::F16);
      if (!w_out.empty()) save(store, w_out);
      std::printf("parameters %lld\nchecksum 0x%016llx\n",
                  static_cast<long long>(store.parameter_count()),
                  static_cast<unsigned long long>(store_checksum(store)));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
