// gradflow — config-driven gradient-flow experiments.
//
// Subcommands:
//   flow         integrate one or many trajectories
//   critical     sweep a region and classify critical points
//   connections  build the heteroclinic connection graph
//   loja         run selected tail analyses on a trajectory
//   verify       run the full verification suite over the catalog
//   report       regenerate a summary from a stored run report
//
// Exit codes: 0 all verdicts pass, 1 verdict failure or runtime error,
// 2 config/input error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gradflow/analysis.hpp"
#include "gradflow/config.hpp"
#include "gradflow/io.hpp"
#include "gradflow/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int workers = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

fs::path resolve_out_dir(const CommonArgs& args) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (const char* env = std::getenv("GRADFLOW_OUT")) return env;
  return "gradflow_out";
}

json make_run_report(const json& config_echo) {
  json report;
  report["config_echo"] = config_echo;
  report["verdicts"] = json::array();
  report["manifest"] = json::array();
  report["timings"] = json::object();
  return report;
}

void add_artifact(json& report, const fs::path& path) {
  report["manifest"].push_back(path.string());
}

void finalize_report(json& report, const fs::path& out_dir, double seconds) {
  report["timings"]["wall_seconds"] = seconds;
  gradflow::write_text_file((out_dir / "report.json").string(),
                            report.dump(2) + "\n");
}

int cmd_flow(const CommonArgs& args) {
  json config = gradflow::load_config(args.config_path);
  if (args.seed_set) config["seed"] = args.seed;
  auto fc = gradflow::field_from_config(config);
  auto cfg = gradflow::integrator_from_config(config);
  if (!config.contains("flow")) throw gradflow::ConfigError("missing 'flow' block");
  auto starts = gradflow::starts_from_config(config["flow"], config,
                                             fc.field.dimension());
  fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  json report = make_run_report(config);
  auto t0 = std::chrono::steady_clock::now();

  json summaries = json::array();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    gradflow::Trajectory traj =
        gradflow::integrate_flow(fc.field, starts[i], cfg);
    fs::path csv = out / ("trajectory_" + std::to_string(i) + ".csv");
    gradflow::write_text_file(csv.string(), gradflow::trajectory_csv(traj));
    add_artifact(report, csv);
    summaries.push_back(gradflow::trajectory_summary(traj));
  }
  fs::path sum = out / "flow_summary.json";
  gradflow::write_text_file(sum.string(), summaries.dump(2) + "\n");
  add_artifact(report, sum);
  finalize_report(report, out,
                  std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count());
  std::printf("flow: %zu trajectories written to %s\n", starts.size(),
              out.string().c_str());
  return 0;
}

std::vector<gradflow::CriticalPoint> run_sweep(const json& config,
                                               const gradflow::ScalarField& field) {
  if (!config.contains("critical"))
    throw gradflow::ConfigError("missing 'critical' block");
  const auto& c = config["critical"];
  for (const char* key : {"lo", "hi", "grid"})
    if (!c.contains(key))
      throw gradflow::ConfigError(std::string("missing 'critical.") + key + "'");
  Eigen::VectorXd lo = gradflow::detail::to_vector(c["lo"], "critical.lo");
  Eigen::VectorXd hi = gradflow::detail::to_vector(c["hi"], "critical.hi");
  std::vector<int> grid = c["grid"].get<std::vector<int>>();
  double tol = c.value("tol", 1e-10);
  return gradflow::sweep_critical(field, lo, hi, grid, tol);
}

int cmd_critical(const CommonArgs& args) {
  json config = gradflow::load_config(args.config_path);
  auto fc = gradflow::field_from_config(config);
  auto points = run_sweep(config, fc.field);
  fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  json report = make_run_report(config);

  fs::path csv = out / "critical_points.csv";
  gradflow::write_text_file(csv.string(),
                            gradflow::critical_points_csv(points));
  add_artifact(report, csv);
  json table = json::array();
  for (const auto& p : points) table.push_back(gradflow::critical_point_json(p));
  fs::path jpath = out / "critical_points.json";
  gradflow::write_text_file(jpath.string(), table.dump(2) + "\n");
  add_artifact(report, jpath);
  finalize_report(report, out, 0.0);
  std::printf("critical: %zu points written to %s\n", points.size(),
              out.string().c_str());
  return 0;
}

int cmd_connections(const CommonArgs& args) {
  json config = gradflow::load_config(args.config_path);
  auto fc = gradflow::field_from_config(config);
  auto cfg = gradflow::integrator_from_config(config);
  auto points = run_sweep(config, fc.field);
  gradflow::ConnectionOptions opts;
  if (config.contains("connections")) {
    const auto& c = config["connections"];
    opts.seed_eps = c.value("seed_eps", opts.seed_eps);
    opts.locate_tol = c.value("locate_tol", opts.locate_tol);
    opts.endpoint_grad_tol = c.value("endpoint_grad_tol", opts.endpoint_grad_tol);
  }
  std::vector<gradflow::CriticalPoint> nondegenerate;
  for (auto& p : points)
    if (p.nullity == 0) nondegenerate.push_back(std::move(p));
  auto result = gradflow::find_connections(fc.field, nondegenerate, cfg, opts);

  fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  json report = make_run_report(config);
  std::vector<std::string> files;
  for (std::size_t i = 0; i < result.connections.size(); ++i) {
    fs::path csv = out / ("connection_" + std::to_string(i) + ".csv");
    gradflow::write_text_file(
        csv.string(), gradflow::trajectory_csv(result.connections[i].representative));
    files.push_back(csv.filename().string());
    add_artifact(report, csv);
  }
  fs::path graph = out / "connections.json";
  gradflow::write_text_file(
      graph.string(),
      gradflow::connection_graph_json(result, nondegenerate, files).dump(2) + "\n");
  add_artifact(report, graph);
  finalize_report(report, out, 0.0);
  std::printf("connections: %zu found, %d unresolved, written to %s\n",
              result.connections.size(), result.unresolved,
              out.string().c_str());
  return 0;
}

int cmd_loja(const CommonArgs& args) {
  json config = gradflow::load_config(args.config_path);
  if (args.seed_set) config["seed"] = args.seed;
  auto fc = gradflow::field_from_config(config);
  auto cfg = gradflow::integrator_from_config(config);
  if (!config.contains("loja")) throw gradflow::ConfigError("missing 'loja' block");
  const auto& block = config["loja"];
  auto starts = gradflow::starts_from_config(block, config, fc.field.dimension());
  std::vector<std::string> analyses =
      block.value("analyses", std::vector<std::string>{"exponent", "rate"});

  fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  json report = make_run_report(config);
  json results = json::array();

  gradflow::Trajectory traj = gradflow::integrate_flow(fc.field, starts[0], cfg);
  Eigen::VectorXd limit = traj.back().x;
  if (block.contains("limit"))
    limit = gradflow::detail::to_vector(block["limit"], "loja.limit");
  double f_limit = block.value("f_limit", fc.field.value(limit));

  for (const std::string& a : analyses) {
    json r;
    r["analysis"] = a;
    if (a == "exponent") {
      auto fit = gradflow::estimate_lojasiewicz(fc.field, traj, limit, f_limit);
      r["fit"] = gradflow::analysis_fit_json(fit);
      r["theta_in_range"] = fit.exponent >= 0.45 && fit.exponent < 1.0;
      std::vector<std::pair<double, double>> series;
      for (const auto& s : traj.samples)
        if (s.f_value - f_limit > 1e-13 && s.grad_norm > 0)
          series.emplace_back(s.f_value - f_limit, s.grad_norm);
      gradflow::PlotStyle style;
      style.title = "Lojasiewicz fit, theta = " +
                    gradflow::format_double(fit.exponent);
      style.x_label = "f - f_p";
      style.y_label = "|grad f|";
      style.log_x = style.log_y = true;
      style.fit_line = {{fit.exponent, fit.log_constant}};
      gradflow::emit_plot_data(series, style, (out / "loja_exponent").string());
      add_artifact(report, out / "loja_exponent.svg");
      add_artifact(report, out / "loja_exponent.csv");
    } else if (a == "rate") {
      auto fit = gradflow::tail_length_rate(traj, limit, f_limit);
      r["fit"] = gradflow::analysis_fit_json(fit);
    } else if (a == "bias" || a == "secant" || a == "zset" ||
               a == "distance" || a == "density") {
      if (!fc.catalog_entry || !fc.catalog_entry->manifold)
        throw gradflow::ConfigError(
            "analysis '" + a + "' needs a catalog field with a manifold model");
      const auto& manifold = *fc.catalog_entry->manifold;
      if (a == "bias") {
        Eigen::VectorXd p = manifold.project(traj.back().x);
        auto bias = gradflow::normal_bias(traj, manifold, p);
        r["tail_sup"] = bias.tail_sup;
        r["bounded"] = bias.bounded;
        if (bias.ratio_series.size() >= 2) {
          gradflow::PlotStyle style;
          style.title = "normal bias ratio";
          style.x_label = "t";
          style.y_label = "|P d| / |Q d|^2";
          style.hline = bias.tail_median;
          gradflow::emit_plot_data(bias.ratio_series, style,
                                   (out / "bias_ratio").string());
          add_artifact(report, out / "bias_ratio.svg");
          add_artifact(report, out / "bias_ratio.csv");
        }
      } else if (a == "secant") {
        Eigen::VectorXd p = manifold.project(traj.back().x);
        auto sec = gradflow::secant_limit(traj, manifold, p);
        r["max_pairwise_angle"] = sec.max_pairwise_angle;
        r["tangent_angle"] = sec.tangent_angle;
      } else if (a == "zset") {
        Eigen::VectorXd p = manifold.project(traj.back().x);
        int k = block.value("k", 0);
        auto z = gradflow::z_set_crossings(fc.field, traj, p, k);
        r["k"] = z.k;
        r["min_admissible_k"] = z.min_admissible_k;
        r["theta_hat"] = z.theta_hat;
        r["crossings"] = z.crossings.size();
      } else if (a == "distance") {
        auto check =
            gradflow::check_distance_inequality(fc.field, manifold, starts);
        r["fit"] = gradflow::analysis_fit_json(check.fit);
        r["bound_constant"] = check.bound_constant;
        r["worst_violation"] = check.worst_violation;
      } else {  // density
        auto mesh = manifold.mesh(block.value("mesh_count", 100));
        auto density =
            gradflow::dense_limit_survey(fc.field, manifold, starts, cfg, mesh);
        r["max_gap"] = density.max_gap;
        r["non_convergent"] = density.non_convergent;
        if (density.length_fit)
          r["length_fit"] = gradflow::analysis_fit_json(*density.length_fit);
      }
    } else {
      throw gradflow::ConfigError("unknown analysis '" + a + "'");
    }
    results.push_back(r);
  }
  fs::path jpath = out / "loja_report.json";
  gradflow::write_text_file(jpath.string(), results.dump(2) + "\n");
  add_artifact(report, jpath);
  finalize_report(report, out, 0.0);
  std::printf("loja: %zu analyses written to %s\n", results.size(),
              out.string().c_str());
  return 0;
}

int cmd_verify(const CommonArgs& args) {
  json config_echo = json::object();
  if (!args.config_path.empty())
    config_echo = gradflow::load_config(args.config_path);
  gradflow::VerifyOptions opts;
  opts.seed = args.seed_set ? args.seed
                            : config_echo.value("seed", opts.seed);
  fs::path out = resolve_out_dir(args);
  fs::create_directories(out);
  opts.out_dir = out.string();
  config_echo["seed"] = opts.seed;

  auto t0 = std::chrono::steady_clock::now();
  auto verdicts = gradflow::run_verification(opts);
  double seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();

  bool all_pass = true;
  for (const auto& v : verdicts) {
    all_pass = all_pass && v.pass;
    std::printf("[%s] %-4s %s — %s\n", v.pass ? "PASS" : "FAIL", v.id.c_str(),
                v.name.c_str(), v.detail.c_str());
  }
  json report = make_run_report(config_echo);
  report["verdicts"] = gradflow::verdicts_json(verdicts);
  for (const auto& f : gradflow::emit_artifacts(opts.seed, out / "artifacts"))
    add_artifact(report, f);
  finalize_report(report, out, seconds);
  std::printf("verify: %s in %.1fs, report at %s\n",
              all_pass ? "all pass" : "FAILURES", seconds,
              (out / "report.json").string().c_str());
  return all_pass ? 0 : 1;
}

int cmd_report(const CommonArgs& args) {
  fs::path out = resolve_out_dir(args);
  fs::path rpath = out / "report.json";
  std::ifstream in(rpath);
  if (!in) throw gradflow::ConfigError("no report.json under " + out.string());
  json report = json::parse(in);

  std::string summary = "# run summary\n\n";
  bool all_pass = true;
  for (const auto& v : report.value("verdicts", json::array())) {
    bool pass = v.value("pass", false);
    all_pass = all_pass && pass;
    summary += std::string(pass ? "- PASS " : "- FAIL ") +
               v.value("id", "?") + " " + v.value("name", "") + "\n";
  }
  summary += "\n## artifacts\n";
  for (const auto& f : report.value("manifest", json::array()))
    summary += "- " + f.get<std::string>() + "\n";
  gradflow::write_text_file((out / "summary.md").string(), summary);
  std::fputs(summary.c_str(), stdout);
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-flow numerical laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    sub->add_option("--config", args.config_path, "config file (JSON)")
        ->required(config_required);
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--workers", args.workers, "worker count");
    sub->add_option("--seed", args.seed, "random seed override")
        ->each([&](const std::string&) { args.seed_set = true; });
    return sub;
  };

  auto* flow = add_common(app.add_subcommand("flow", "integrate trajectories"), true);
  auto* critical = add_common(app.add_subcommand("critical", "sweep critical points"), true);
  auto* connections = add_common(app.add_subcommand("connections", "heteroclinic graph"), true);
  auto* loja = add_common(app.add_subcommand("loja", "tail analyses"), true);
  auto* verify = add_common(app.add_subcommand("verify", "full verification suite"), false);
  auto* report = add_common(app.add_subcommand("report", "regenerate summary"), false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (flow->parsed()) return cmd_flow(args);
    if (critical->parsed()) return cmd_critical(args);
    if (connections->parsed()) return cmd_connections(args);
    if (loja->parsed()) return cmd_loja(args);
    if (verify->parsed()) return cmd_verify(args);
    if (report->parsed()) return cmd_report(args);
  } catch (const gradflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
