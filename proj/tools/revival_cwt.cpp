#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "revival/config.hpp"
#include "revival/errors.hpp"
#include "revival/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitConsistency = 3;
constexpr int kExitEstimation = 4;

constexpr const char* kOutEnv = "REVIVAL_CWT_OUT";

std::filesystem::path output_dir(const std::optional<std::string>& flag, const revival::RunConfig& cfg) {
  if (flag) return *flag;
  if (cfg.output_dir) return *cfg.output_dir;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return "revival-cwt-out";
}

int fail(int code, const std::string& what) {
  std::cerr << "revival-cwt: " << what << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet analysis of wave-packet fractional revivals"};
  app.set_version_flag("--version", "revival-cwt 1.0");

  std::string stage;
  std::string config_path;
  std::optional<std::string> out;
  std::optional<double> omega0;
  std::optional<std::string> lifetime;
  std::optional<int> p_max;
  unsigned threads = 1;

  app.add_option("subcommand", stage, "simulate | spectrum | scalogram | slices | detect | estimate | all")
      ->required()
      ->check(CLI::IsMember(revival::stage_names()));
  app.add_option("--config", config_path, "key = value run configuration")->required();
  app.add_option("--out", out, std::string("output directory (default: config output_dir, then $") + kOutEnv + ")");
  app.add_option("--omega0", omega0, "Morlet centre frequency, overrides the config");
  app.add_option("--lifetime", lifetime, "decay lifetime, e.g. '0.15 T_rev', a bare a.u. number, or 'none'");
  app.add_option("--p-max", p_max, "highest harmonic of the scale grid");
  app.add_option("--threads", threads, "worker threads for synthesis and transform")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    revival::RunConfig cfg = revival::load_config(config_path);
    if (omega0) cfg.omega0 = *omega0;
    if (p_max) cfg.p_max = *p_max;
    if (lifetime) {
      if (*lifetime == "none") {
        cfg.lifetime.reset();
      } else {
        cfg.lifetime = revival::config_detail::parse_time(*lifetime, 0, "--lifetime");
      }
    }
    revival::validate_config(cfg);

    revival::Pipeline pipe(cfg, threads);
    for (const auto& path : revival::run_stage(stage, pipe, output_dir(out, cfg))) std::cout << path.string() << '\n';
    return kExitOk;
  } catch (const revival::ConfigError& e) {
    return fail(kExitConfig, std::string("config error: ") + e.what());
  } catch (const revival::DomainError& e) {
    return fail(kExitConfig, std::string("invalid parameter: ") + e.what());
  } catch (const revival::ConsistencyError& e) {
    return fail(kExitConsistency, std::string("numerical consistency: ") + e.what());
  } catch (const revival::EstimationError& e) {
    return fail(kExitEstimation, std::string("estimation impossible: ") + e.what());
  } catch (const std::exception& e) {
    return fail(kExitOther, e.what());
  }
}
