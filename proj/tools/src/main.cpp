#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "d3d/errors.hpp"

namespace {

using namespace d3d::cli;

// Single-line `error:<category> message` on stderr; returns the exit code.
int fail(const char* category, const std::string& what, int code) {
  std::string line = what;
  for (char& c : line)
    if (c == '\n') c = ' ';
  std::cerr << "error:" << category << ' ' << line << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming 3D-ResNet inference, verification and complexity tooling"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  DescribeArgs describe_args;
  auto* describe_cmd = app.add_subcommand("describe", "Print the layer table of a configured model");
  describe_cmd->add_option("--config", describe_args.config, "Model config file")->required();

  CountArgs count_args;
  auto* count_cmd = app.add_subcommand("count", "Count parameters and multiply-accumulates");
  count_cmd->add_option("--config", count_args.config)->required();
  count_cmd->add_option("--mode", count_args.mode, "params | streaming | offline")->capture_default_str();
  count_cmd->add_option("--frames", count_args.frames, "Clip length for offline and baseline counts")
      ->capture_default_str();
  count_cmd->add_option("--size", count_args.size, "Square input size (default: config input_size)");
  count_cmd->add_flag("--baseline", count_args.baseline, "Compare with the conventional counterpart");
  count_cmd->add_flag("--table", count_args.table, "Aligned table instead of key/value lines");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Stream a frame file through backbone and head");
  run_cmd->add_option("--config", run_args.config)->required();
  run_cmd->add_option("--weights", run_args.weights)->required();
  run_cmd->add_option("--input", run_args.input, "D3DF frame stream")->required();
  run_cmd->add_option("--head", run_args.head, "fc | lstm | gru | none (default: config)");
  run_cmd->add_option("--output", run_args.output)->required();

  VerifyArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "Check streaming against the unrolled oracle");
  verify_cmd->add_option("--config", verify_args.config)->required();
  verify_cmd->add_option("--seed", verify_args.seed)->capture_default_str();
  verify_cmd->add_option("--frames", verify_args.frames)->capture_default_str();
  verify_cmd->add_option("--size", verify_args.size)->capture_default_str();
  verify_cmd->add_option("--causality-trials", verify_args.causality_trials)->capture_default_str();
  verify_cmd->add_flag("--corrupt-cache", verify_args.corrupt_cache, "Negative control: perturb the cache mid-run");
  verify_cmd->add_flag("--skip-probes", verify_args.skip_probes, "Only run the equivalence check");

  ProbeArgs probe_args;
  auto* probe_cmd = app.add_subcommand("probe", "Segment, erasure and receptive-field probes");
  probe_cmd->add_option("--kind", probe_args.kind, "segments | erasure | receptive-field")->required();
  probe_cmd->add_option("--config", probe_args.config);
  probe_cmd->add_option("--weights", probe_args.weights);
  probe_cmd->add_option("--input", probe_args.input, "D3DF frame stream (erasure)");
  probe_cmd->add_option("--features", probe_args.features, "Text rows `t v0 v1 ...` (segments)");
  probe_cmd->add_option("--head", probe_args.head);
  probe_cmd->add_option("--output", probe_args.output);
  probe_cmd->add_option("--percent", probe_args.percent, "Erased middle share in percent")->capture_default_str();
  probe_cmd->add_option("--variance", probe_args.variance)->capture_default_str();
  probe_cmd->add_option("--segments", probe_args.segments)->capture_default_str();
  probe_cmd->add_option("--seed", probe_args.seed)->capture_default_str();
  probe_cmd->add_option("--frames", probe_args.frames, "Clip length (receptive-field; 0 = automatic)");
  probe_cmd->add_option("--size", probe_args.size)->capture_default_str();

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Time streaming steps and the unrolled oracle");
  bench_cmd->add_option("--config", bench_args.config)->required();
  bench_cmd->add_option("--frames", bench_args.frames)->capture_default_str();
  bench_cmd->add_option("--size", bench_args.size)->capture_default_str();
  bench_cmd->add_option("--repeat", bench_args.repeat)->capture_default_str();
  bench_cmd->add_option("--seed", bench_args.seed)->capture_default_str();

  MakeWeightsArgs weights_args;
  auto* weights_cmd = app.add_subcommand("make-weights", "Write seeded random weights for a config");
  weights_cmd->add_option("--config", weights_args.config)->required();
  weights_cmd->add_option("--head", weights_args.head, "Also write this head (default: config)");
  weights_cmd->add_option("--seed", weights_args.seed)->capture_default_str();
  weights_cmd->add_option("--output", weights_args.output)->required();

  MakeFramesArgs frames_args;
  auto* frames_cmd = app.add_subcommand("make-frames", "Write a seeded random D3DF frame stream");
  frames_cmd->add_option("--frames", frames_args.frames)->capture_default_str();
  frames_cmd->add_option("--size", frames_args.size)->capture_default_str();
  frames_cmd->add_option("--seed", frames_args.seed)->capture_default_str();
  frames_cmd->add_flag("--unbounded", frames_args.unbounded, "Write frame count 0");
  frames_cmd->add_option("--output", frames_args.output)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kUsage);
  }

  try {
    if (*describe_cmd) return describe(describe_args);
    if (*count_cmd) return count(count_args);
    if (*run_cmd) return run(run_args);
    if (*verify_cmd) return verify(verify_args);
    if (*probe_cmd) return probe(probe_args);
    if (*bench_cmd) return bench(bench_args);
    if (*weights_cmd) return make_weights(weights_args);
    if (*frames_cmd) return make_frames(frames_args);
  } catch (const d3d::ConfigError& e) {
    return fail("config", e.what(), kUsage);
  } catch (const d3d::WeightsError& e) {
    return fail("weights", e.what(), kData);
  } catch (const d3d::FormatError& e) {
    return fail("format", e.what(), kData);
  } catch (const d3d::ShapeError& e) {
    return fail("shape", e.what(), kData);
  } catch (const d3d::InsufficientInputError& e) {
    return fail("input", e.what(), kData);
  } catch (const d3d::InputError& e) {
    return fail("input", e.what(), kData);
  } catch (const d3d::StreamError& e) {
    return fail("stream", e.what(), kData);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kData);
  }
  return kUsage;
}
