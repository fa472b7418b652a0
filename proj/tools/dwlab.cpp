// dwlab: command line front end for the experiment harness.
//
//   dwlab spectrum --set K=128 --set 'profile={"mean":0.5,"cos":[0.4]}' --out out/spec
//   dwlab run config.json --verify
//   dwlab cache --m-max 40 --box 8 --path lengths.cache

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "dwlab/arith.hpp"
#include "dwlab/cli.hpp"

namespace {

using nlohmann::json;
using namespace dwlab;

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

json parse_sets(const std::vector<std::string>& sets) {
  json out = json::object();
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw DomainError("--set expects key=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
  }
  return out;
}

int report_and_exit(const cli::RunReport& report, bool verify) {
  if (verify) {
    for (const auto& a : report.assertions)
      std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << " measured=" << a.measured
                << " tolerance=" << a.tolerance << '\n';
  }
  for (const auto& n : report.notes) std::cout << "note: " << n << '\n';
  for (const auto& f : report.files) std::cout << f.sha1 << "  " << f.name << '\n';
  std::cout << "input " << report.input_hash << ", " << report.assertions.size() << " assertions, "
            << (report.all_passed() ? "all passed" : "FAILURES") << '\n';
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Damped waves, pressure and arithmetic length spectra: experiment runner"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string out = "out";
  int threads = 1;
  bool verify = false;
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--verify", verify, "Print every assertion of the run");

  std::map<std::string, std::vector<std::string>> sets;
  for (const char* kind : {"spectrum", "thermo", "flowavg", "arith", "trace", "count"}) {
    auto* sub = app.add_subcommand(kind, std::string("Run the ") + kind + " experiment");
    sub->add_option("--set", sets[kind], "Parameter override key=value (value parsed as JSON)");
  }

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  std::int64_t A = 2, p = 5, m_max = 40, box = 8;
  std::string weight_mode = "zero-form", cache_path = "lengths.cache";
  auto* cache = app.add_subcommand("cache", "Enumerate a length spectrum and write it to a cache file");
  cache->add_option("--A", A)->capture_default_str();
  cache->add_option("--p", p)->capture_default_str();
  cache->add_option("--m-max", m_max)->capture_default_str();
  cache->add_option("--box", box)->capture_default_str();
  cache->add_option("--weight-mode", weight_mode)->capture_default_str();
  cache->add_option("--path", cache_path)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cache) {
      const auto mode = arith::weight_mode_from_string(weight_mode);
      const auto wls = arith::build_length_spectrum(A, p, m_max, box, mode, {}, seed, threads);
      cli::cache_length_spectrum(wls, cache_path);
      long classes = 0;
      for (const auto& e : wls.entries) classes += static_cast<long>(e.classes.size());
      std::cout << "wrote " << classes << " classes for m <= " << m_max << " to " << cache_path << '\n';
      if (verify) {
        const auto back = cli::load_cache(cache_path, cli::CacheKey{A, p, box});
        long reread = 0;
        for (const auto& e : back.entries) reread += static_cast<long>(e.classes.size());
        std::cout << (reread == classes ? "PASS" : "FAIL") << " cache_round_trip classes=" << reread
                  << '\n';
        return reread == classes ? 0 : 1;
      }
      return 0;
    }

    cli::ExperimentConfig config;
    if (*run) {
      std::ifstream in(config_path);
      json j = json::parse(in);
      if (app.count("--seed")) j["seed"] = seed;
      if (app.count("--out")) j["output_dir"] = out;
      if (app.count("--threads")) j["threads"] = threads;
      config = cli::ExperimentConfig::from_json(j);
    } else {
      const std::string kind = app.get_subcommands().front()->get_name();
      config = cli::ExperimentConfig::from_json({{"kind", kind},
                                                 {"parameters", parse_sets(sets[kind])},
                                                 {"seed", seed},
                                                 {"output_dir", out},
                                                 {"threads", threads}});
    }
    return report_and_exit(cli::run_experiment(config), verify);
  } catch (const std::exception& e) {
    std::cerr << "dwlab: " << e.what() << '\n';
    return 2;
  }
}
