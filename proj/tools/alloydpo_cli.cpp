// alloydpo command-line entry point: one subcommand per pipeline stage.

#include <cstdlib>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alloydpo/config.hpp"
#include "alloydpo/error.hpp"
#include "alloydpo/pipeline.hpp"

namespace {

using alloydpo::Error;
using alloydpo::ErrorCode;
namespace cli = alloydpo::cli;
namespace files = alloydpo::cli::files;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
      return 2;
    case ErrorCode::MissingInput:
      return 3;
    default:
      return 4;
  }
}

void report_error(ErrorCode code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = alloydpo::to_string(code);
  j["message"] = message;
  std::cerr << j.dump() << "\n";
}

// Optional path flag that falls back to a file inside out_dir.
struct PathOpt {
  std::string value;
  std::filesystem::path resolve(const cli::Context& ctx, const char* fallback) const {
    return value.empty() ? ctx.out(fallback) : std::filesystem::path(value);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alloydpo: BCC/B2 superalloy candidate generation with preference tuning"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out_dir;
  std::vector<std::string> overrides;
  bool show = false;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--workers", workers, "scoring threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--set", overrides, "extra key=value overrides")->take_all();
  app.add_flag("--show-config", show, "print the effective configuration and exit");

  PathOpt in, out, log_out, policy, pools, before, after;
  std::string kl_a_sft, kl_a_dpo, kl_b_sft, kl_b_dpo;

  auto* gen_pools = app.add_subcommand("gen-pools", "enumerate and filter BCC/B2 composition pools");
  gen_pools->add_option("--out", out.value);
  auto* gen_sft = app.add_subcommand("gen-sft", "build the SFT dataset from the pools");
  gen_sft->add_option("--pools", pools.value);
  gen_sft->add_option("--out", out.value);
  auto* train_sft = app.add_subcommand("train-sft", "supervised training of the policy");
  train_sft->add_option("--in", in.value);
  train_sft->add_option("--out", out.value);
  train_sft->add_option("--log", log_out.value);
  auto* sample = app.add_subcommand("sample", "sample candidate triples from a policy");
  sample->add_option("--policy", policy.value);
  sample->add_option("--out", out.value);
  auto* score = app.add_subcommand("score", "score sampled triples with the phase oracle");
  score->add_option("--in", in.value);
  score->add_option("--out", out.value);
  auto* build_dpo = app.add_subcommand("build-dpo", "build preference pairs from scored candidates");
  build_dpo->add_option("--in", in.value);
  build_dpo->add_option("--out", out.value);
  auto* train_dpo = app.add_subcommand("train-dpo", "preference-tune the SFT policy");
  train_dpo->add_option("--policy", policy.value);
  train_dpo->add_option("--in", in.value);
  train_dpo->add_option("--out", out.value);
  train_dpo->add_option("--log", log_out.value);
  auto* eval = app.add_subcommand("eval", "metric report for a scored sample file");
  eval->add_option("--in", in.value);
  eval->add_option("--pools", pools.value);
  eval->add_option("--out", out.value);
  auto* baseline = app.add_subcommand("baseline", "random-search baseline triples");
  baseline->add_option("--out", out.value);
  auto* analyze = app.add_subcommand("analyze", "compare two scored sample files");
  analyze->add_option("--before", before.value);
  analyze->add_option("--after", after.value);
  analyze->add_option("--out", out.value);
  analyze->add_option("--kl-a-sft", kl_a_sft);
  analyze->add_option("--kl-a-dpo", kl_a_dpo);
  analyze->add_option("--kl-b-sft", kl_b_sft);
  analyze->add_option("--kl-b-dpo", kl_b_dpo);
  auto* run = app.add_subcommand("run", "every stage in order");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = cli::default_config();
    if (!config_path.empty()) cli::apply_config_file(cfg, config_path);
    cli::apply_env(cfg, [](const char* name) { return std::getenv(name); });
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value, got " + kv);
      cli::set_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    if (show) {
      std::cout << cli::show_config(cfg);
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cout << app.help();
      return 0;
    }

    const auto ctx = cli::make_context(cfg);
    try {
      if (*gen_pools) {
        cli::stage_gen_pools(ctx, out.resolve(ctx, files::kPools));
      } else if (*gen_sft) {
        cli::stage_gen_sft(ctx, pools.value.empty() ? cfg.pools_path() : std::filesystem::path(pools.value), out.resolve(ctx, files::kSft));
      } else if (*train_sft) {
        cli::stage_train_sft(ctx, in.resolve(ctx, files::kSft), out.resolve(ctx, files::kSftPolicy),
                             log_out.resolve(ctx, files::kSftLog));
      } else if (*sample) {
        cli::stage_sample(ctx, policy.resolve(ctx, files::kSftPolicy), out.resolve(ctx, files::kSamplesSft));
      } else if (*score) {
        cli::stage_score(ctx, in.resolve(ctx, files::kSamplesSft), out.resolve(ctx, files::kScoredSft));
      } else if (*build_dpo) {
        cli::stage_build_dpo(ctx, in.resolve(ctx, files::kScoredSft), out.resolve(ctx, files::kPairs));
      } else if (*train_dpo) {
        cli::stage_train_dpo(ctx, policy.resolve(ctx, files::kSftPolicy), in.resolve(ctx, files::kPairs),
                             out.resolve(ctx, files::kDpoPolicy), log_out.resolve(ctx, files::kDpoLog));
      } else if (*eval) {
        cli::stage_eval(ctx, in.resolve(ctx, files::kScoredSft), pools.value.empty() ? cfg.pools_path() : std::filesystem::path(pools.value),
                        out.resolve(ctx, files::kMetricsSft));
      } else if (*baseline) {
        cli::stage_baseline(ctx, out.resolve(ctx, files::kBaseline));
      } else if (*analyze) {
        std::optional<cli::KlInputs> kl;
        if (!kl_a_sft.empty() || !kl_a_dpo.empty() || !kl_b_sft.empty() || !kl_b_dpo.empty()) {
          if (kl_a_sft.empty() || kl_a_dpo.empty() || kl_b_sft.empty() || kl_b_dpo.empty()) {
            throw Error(ErrorCode::ConfigError, "KL comparison needs all four --kl-* policies");
          }
          kl = cli::KlInputs{kl_a_sft, kl_a_dpo, kl_b_sft, kl_b_dpo};
        }
        cli::stage_analyze(ctx, before.resolve(ctx, files::kScoredSft), after.resolve(ctx, files::kScoredDpo),
                           out.resolve(ctx, files::kAnalysis), kl);
      } else if (*run) {
        cli::run_pipeline(ctx);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::MissingInput) throw;
      report_error(ErrorCode::StageFailure, e.what());
      return exit_code(ErrorCode::StageFailure);
    } catch (const std::exception& e) {
      report_error(ErrorCode::StageFailure, e.what());
      return exit_code(ErrorCode::StageFailure);
    }
  } catch (const Error& e) {
    report_error(e.code(), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    report_error(ErrorCode::StageFailure, e.what());
    return exit_code(ErrorCode::StageFailure);
  }
  return 0;
}
