// Batch front end: run scenario files, list experiments.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "tsv/scenario.hpp"

namespace {

enum ExitCode : int { kOk = 0, kOther = 1, kConfig = 2, kImpossible = 3, kCap = 4 };

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tsv::scenario::ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tsvsim: two-boundary quantum mechanics experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may also follow the subcommand

  std::string out_path;
  std::string format;
  std::size_t threads = 1;
  std::uint64_t seed_override = 0;
  app.add_option("--out", out_path, "Write the result here instead of the scenario's output path");
  app.add_option("--format", format, "Result format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed-override", seed_override, "Replace the scenario seed");

  auto* run_cmd = app.add_subcommand("run", "Run a scenario file");
  std::string config_path;
  run_cmd->add_option("config", config_path, "Scenario JSON file")->required();
  app.add_subcommand("list", "List available experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  if (app.got_subcommand("list")) {
    std::cout << tsv::scenario::list_experiments();
    return kOk;
  }

  try {
    auto sc = tsv::scenario::parse(read_file(config_path));
    tsv::scenario::RunOptions opts;
    opts.threads = threads;
    if (*seed_opt) opts.seed_override = seed_override;
    const auto record = tsv::scenario::run(sc, opts);

    const std::string fmt = format.empty() ? sc.output.format : format;
    const std::string path = out_path.empty() ? sc.output.path : out_path;
    const std::string text = tsv::scenario::render(record, fmt);
    if (path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw tsv::Error("cannot write " + path);
      out << text;
    }
    return kOk;
  } catch (const tsv::scenario::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const tsv::ImpossiblePostSelection& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kImpossible;
  } catch (const tsv::EnumerationCapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCap;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
