// fairwipe: run unlearning benchmarks, inspect datasets, sweep one setting.
//
//   fairwipe run   --config exp.cfg [--out results.csv] [--format csv|json]
//   fairwipe stats --manifest data.manifest
//   fairwipe sweep --config exp.cfg --param hops --values 2,3,4,5,6
//
// Exit codes: 0 ok, 2 configuration error, 3 data validation failure.

#include "fairwipe/fairwipe.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kConfigError = 2;
constexpr int kDataError = 3;

struct OutputOptions {
  std::string out;
  std::string format{"csv"};
  int threads{0};  // 0 = keep the config value
  bool no_timing{false};
};

void add_output_options(CLI::App* cmd, OutputOptions& o) {
  cmd->add_option("--out", o.out, "Result file (stdout when omitted)");
  cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--threads", o.threads, "Seeds run in parallel")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-timing", o.no_timing, "Write 0 for wall times so output is reproducible byte for byte");
}

void apply_output_options(fairwipe::ExperimentConfig& c, const OutputOptions& o) {
  if (o.threads > 0) c.threads = o.threads;
  if (o.no_timing) c.record_timing = false;
}

void write(const std::vector<fairwipe::ResultRow>& rows, const OutputOptions& o) {
  const auto format = fairwipe::parse_format(o.format);
  if (o.out.empty()) {
    fairwipe::emit_results(std::cout, rows, format);
  } else {
    fairwipe::emit_results(rows, format, o.out);
  }
}

std::vector<fairwipe::ResultRow> run_config(const fairwipe::ExperimentConfig& c) {
  fairwipe::ExperimentReport report = fairwipe::run_experiment(c);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& f : report.failures) std::cerr << "seed failed: " << f << '\n';
  if (report.rows.empty()) throw fairwipe::DataError("every seed failed");
  return std::move(report.rows);
}

int cmd_run(const std::string& config_path, const OutputOptions& o) {
  fairwipe::ExperimentConfig c = fairwipe::read_config(config_path);
  apply_output_options(c, o);
  write(run_config(c), o);
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param, const std::string& values,
              const OutputOptions& o) {
  const fairwipe::ExperimentConfig base = fairwipe::read_config(config_path);
  std::vector<fairwipe::ResultRow> all;
  for (const auto& v : fairwipe::text::split(values, ',')) {
    if (v.empty()) continue;
    fairwipe::ExperimentConfig c = base;
    fairwipe::apply_setting(c, param, v, std::filesystem::path(config_path).parent_path());
    c.tag = param + "=" + v;
    fairwipe::validate_config(c);
    apply_output_options(c, o);
    auto rows = run_config(c);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  if (all.empty()) throw fairwipe::ConfigError("--values is empty");
  write(all, o);
  return 0;
}

int cmd_stats(const std::string& manifest_path, const std::string& format) {
  const fairwipe::LoadedDataset loaded = fairwipe::load_dataset(fairwipe::read_manifest(manifest_path));
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  const auto& s = loaded.summary;
  const fairwipe::AlphaDiagnostics alpha = fairwipe::alpha_diagnostics(loaded.dataset);
  const double rho = fairwipe::pearson_correlations(loaded.dataset.features, loaded.dataset.sensitive).norm();
  if (format == "json") {
    nlohmann::ordered_json j;
    j["nodes"] = s.nodes;
    j["edges"] = s.edges;
    j["features"] = s.features;
    j["s0"] = s.group0;
    j["s1"] = s.group1;
    j["inter_edges"] = s.inter_edges;
    j["intra_edges"] = s.intra_edges;
    j["boundary_s0"] = s.boundary0;
    j["boundary_s1"] = s.boundary1;
    j["alpha1"] = fairwipe::detail::round_fixed(alpha.alpha1);
    j["alpha2"] = fairwipe::detail::round_fixed(alpha.alpha2);
    j["rho_norm"] = fairwipe::detail::round_fixed(rho);
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::cout << "nodes," << s.nodes << "\nedges," << s.edges << "\nfeatures," << s.features << "\ns0," << s.group0
            << "\ns1," << s.group1 << "\ninter_edges," << s.inter_edges << "\nintra_edges," << s.intra_edges
            << "\nboundary_s0," << s.boundary0 << "\nboundary_s1," << s.boundary1
            << "\nalpha1," << fairwipe::detail::fixed4(alpha.alpha1) << "\nalpha2,"
            << fairwipe::detail::fixed4(alpha.alpha2) << "\nrho_norm," << fairwipe::detail::fixed4(rho) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified unlearning for fairer linear graph models"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, param, values, stats_format{"csv"};
  OutputOptions run_out, sweep_out;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("--config", config_path, "Experiment config file")->required();
  add_output_options(run, run_out);

  auto* stats = app.add_subcommand("stats", "Load a dataset and print its statistics");
  stats->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  stats->add_option("--format", stats_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* sweep = app.add_subcommand("sweep", "Repeat an experiment over values of one setting");
  sweep->add_option("--config", config_path, "Experiment config file")->required();
  sweep->add_option("--param", param, "Setting name, e.g. hops")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  add_output_options(sweep, sweep_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return cmd_run(config_path, run_out);
    if (*stats) return cmd_stats(manifest_path, stats_format);
    if (*sweep) return cmd_sweep(config_path, param, values, sweep_out);
  } catch (const fairwipe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fairwipe::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
