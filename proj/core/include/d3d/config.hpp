#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "d3d/blocks.hpp"
#include "d3d/heads.hpp"
#include "d3d/io.hpp"
#include "d3d/model.hpp"

namespace d3d {

// Line-oriented `key = value` document; '#' starts a comment. Every key except
// `variant` has a default, unknown keys are rejected.
//
//   variant          = D-ResNet-18
//   skip_kind        = concatenation      # none | summation | concatenation
//   width_multiplier = 1/8                # fraction or decimal
//   head             = none               # none | fc | lstm | gru
//   num_classes      = 600
//   input_size       = 112
//   cache_padding    = replicate          # replicate | zero
//   norm_mean        = 0, 0, 0
//   norm_std         = 1, 1, 1
//   shortcut         = zero_pad           # zero_pad | projection
//   hidden_dim       = 1024
//   head_layers      = 2
//   fc_window        = 16
//   fc_pooling       = flatten            # flatten | mean
struct ModelConfig {
  Variant variant;
  SkipKind skip = SkipKind::Concatenation;
  double width_multiplier = 1.0;
  std::string width_text = "1";
  HeadConfig head;
  std::size_t input_size = 112;
  CachePadding cache_padding = CachePadding::Replicate;
  Normalization norm;
  ShortcutMode shortcut = ShortcutMode::ZeroPad;

  ModelSpec build() const;
  // Baseline with the same depth and width.
  ModelSpec build_baseline() const;

  static ModelConfig parse(std::string_view text);
  static ModelConfig load(const std::filesystem::path& path);
  std::string to_text() const;
};

// "1/8", "0.125", "1" -> value in (0, 1e3]. Throws ConfigError.
double parse_fraction(std::string_view text);

}  // namespace d3d
