#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fruitlet/app.hpp"
#include "fruitlet/error.hpp"

namespace app = fruitlet::app;

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("fruitlet"));
  spdlog::set_pattern("[%l] %v");

  CLI::App cli{"Fruitlet length and detection metrics"};
  cli.require_subcommand(1);

  std::filesystem::path config;
  app::CliOverrides overrides;
  std::string backend, align;
  std::filesystem::path out, lengths;
  unsigned threads = 0;
  bool verbose = false;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config,-c", config, "INI configuration file");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--backend", backend, "Override every backend kind (file|onnx)");
    sub->add_option("--align", align, "Alignment mode: reference | fixed[:meters]");
    sub->add_option("--out,-o", out, "Output directory");
    sub->add_option("--threads,-j", threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose,-v", verbose, "Debug logging");
  };

  auto* reconstruct = cli.add_subcommand("reconstruct", "Align depth and write point clouds");
  auto* measure = cli.add_subcommand("measure", "Measure fruitlet lengths against calipers");
  auto* eval = cli.add_subcommand("eval", "Score pose backends against annotations");
  auto* report = cli.add_subcommand("report", "Box plot and summary from a lengths table");
  add_common(reconstruct, true);
  add_common(measure, true);
  add_common(eval, true);
  add_common(report, false);
  report->add_option("--lengths", lengths, "Lengths CSV (default <out>/lengths.csv)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : static_cast<int>(app::ExitCode::config_error);
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  if (!backend.empty()) overrides.backend = backend;
  if (!align.empty()) overrides.align = align;
  if (!out.empty()) overrides.out = out;
  if (threads > 0) overrides.threads = threads;
  if (!lengths.empty()) overrides.lengths = lengths;

  try {
    app::PipelineConfig cfg;
    if (report->parsed() && config.empty()) {
      cfg = app::report_only_config(overrides);
    } else {
      cfg = app::load_config(config, overrides);
    }
    app::ExitCode rc = app::ExitCode::ok;
    if (reconstruct->parsed()) rc = app::run_reconstruct(cfg);
    if (measure->parsed()) rc = app::run_measure(cfg);
    if (eval->parsed()) rc = app::run_eval(cfg);
    if (report->parsed()) rc = app::run_report(cfg);
    return static_cast<int>(rc);
  } catch (const fruitlet::Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(e.code() == fruitlet::ErrorCode::config ? app::ExitCode::config_error
                                                                    : app::ExitCode::total_failure);
  }
}
