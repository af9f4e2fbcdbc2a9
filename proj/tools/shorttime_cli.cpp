#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "shorttime/runner.hpp"

namespace {

int fail(const std::string& kind, int code, const std::vector<std::string>& messages) {
  std::cerr << shorttime::error_report(kind, code, messages).dump(2) << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shorttime Strichartz and energy-method experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", shorttime::kToolVersion);

  std::string config_path;
  std::string out_dir;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  for (const auto& kind : shorttime::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run a " + kind + " experiment");
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config's output)");
    sub->add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", shorttime::exit_config, {e.what()});
  }
  const std::string kind = app.get_subcommands().front()->get_name();

  shorttime::ExperimentConfig cfg;
  try {
    std::ifstream f(config_path);
    if (!f) return fail("config", shorttime::exit_config, {"cannot read config file " + config_path});
    std::stringstream ss;
    ss << f.rdbuf();
    cfg = shorttime::parse_config(ss.str(), kind, seed);
    if (!out_dir.empty()) cfg.output = out_dir;
    if (threads) cfg.threads = *threads;
    if (cfg.output.empty()) {
      return fail("config", shorttime::exit_config, {"output directory required (--out or \"output\")"});
    }
  } catch (const shorttime::ConfigError& e) {
    return fail("config", shorttime::exit_config, e.messages());
  }

  try {
    const auto res = shorttime::run(cfg, cfg.output);
    std::cout << "wrote";
    for (const auto& o : res.outputs) std::cout << ' ' << o;
    std::cout << " to " << cfg.output << '\n';
  } catch (const shorttime::BlowUpError& e) {
    return fail("blow_up", shorttime::exit_blow_up, {e.what()});
  } catch (const shorttime::ConfigError& e) {
    return fail("config", shorttime::exit_config, e.messages());
  } catch (const std::exception& e) {
    return fail("runtime", shorttime::exit_runtime, {e.what()});
  }
  return shorttime::exit_ok;
}
