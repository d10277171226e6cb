#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lrkkt/bench.hpp"
#include "lrkkt/json_io.hpp"

namespace {

std::vector<lrkkt::Solver> parse_solvers(const std::string& arg) {
  std::vector<lrkkt::Solver> out;
  std::stringstream ss(arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(lrkkt::solver_from_string(tok));
  if (out.empty()) throw CLI::ValidationError("--solvers", "no solver given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KKT replay benchmark for low-rank preconditioned bundle subproblems"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a subproblem instance");
  gen->require_subcommand(1);

  std::string gen_out;
  std::uint64_t gen_seed = 0;

  auto* gen_mc = gen->add_subcommand("maxcut", "Max-Cut-like instance");
  int mc_nodes = 120;
  double mc_density = 0.1;
  int mc_order = 10;
  gen_mc->add_option("--nodes", mc_nodes, "number of graph nodes (= design dimension)");
  gen_mc->add_option("--density", mc_density, "edge density in (0,1]");
  gen_mc->add_option("--order", mc_order, "semidefinite model order h");
  gen_mc->add_option("--out", gen_out, "output instance file")->required();
  gen_mc->add_option("--seed", gen_seed, "generator seed");

  auto* gen_rand = gen->add_subcommand("random", "random dense instance");
  int r_m = 40, r_nonneg = 2, r_ineq = 0, r_eq = 0, r_vh = 0;
  std::vector<int> r_psd = {3};
  double r_box = 0.0;
  std::string r_mode = "UPPER_BOUND";
  gen_rand->add_option("--m", r_m, "design dimension");
  gen_rand->add_option("--nonneg", r_nonneg, "nonnegative cone dimension");
  gen_rand->add_option("--psd", r_psd, "PSD block orders");
  gen_rand->add_option("--ineq", r_ineq, "number of two-sided inequality rows");
  gen_rand->add_option("--eq", r_eq, "number of equality rows");
  gen_rand->add_option("--box-fraction", r_box, "fraction of box-bounded coordinates");
  gen_rand->add_option("--rank-vh", r_vh, "low-rank proximal columns (0 or 2)");
  gen_rand->add_option("--trace-mode", r_mode, "EQUALITY or UPPER_BOUND");
  gen_rand->add_option("--out", gen_out, "output instance file")->required();
  gen_rand->add_option("--seed", gen_seed, "generator seed");

  // ---- trace ----
  auto* trace_cmd = app.add_subcommand("trace", "run the interior-point loop and store snapshots");
  std::string trace_instance, trace_out;
  double trace_mu_min = -1.0;
  int trace_max_newton = 200;
  trace_cmd->add_option("--instance", trace_instance, "instance file")->required();
  trace_cmd->add_option("--out", trace_out, "output trace directory")->required();
  trace_cmd->add_option("--mu-min", trace_mu_min, "terminate once mu falls below this value");
  trace_cmd->add_option("--max-newton", trace_max_newton, "Newton step cap");

  // ---- replay ----
  auto* replay_cmd = app.add_subcommand("replay", "re-solve every snapshot with the chosen solvers");
  std::string replay_trace, replay_out, replay_solvers = "DS,IT,RP,DP";
  std::uint64_t replay_seed = 0;
  replay_cmd->add_option("--trace", replay_trace, "trace directory")->required();
  replay_cmd->add_option("--solvers", replay_solvers, "comma-separated subset of DS,IT,RP,DP");
  replay_cmd->add_option("--seed", replay_seed, "seed for the randomized preconditioner");
  replay_cmd->add_option("--out", replay_out, "output records CSV")->required();

  // ---- summarize ----
  auto* sum_cmd = app.add_subcommand("summarize", "aggregate records into quartile rows");
  std::string sum_in, sum_out, sum_group = "mu", sum_metric = "matvecs";
  sum_cmd->add_option("--in", sum_in, "records CSV")->required();
  sum_cmd->add_option("--group", sum_group, "mu or bundle");
  sum_cmd->add_option("--value", sum_metric,
                      "metric: matvecs, time, cond, columns, iterations, dy_dev, residual");
  sum_cmd->add_option("--out", sum_out, "output summary CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_mc->parsed()) {
      const auto data = lrkkt::gen_maxcut_like(mc_nodes, mc_density, mc_order, gen_seed);
      lrkkt::save_instance(data, gen_out);
      std::cout << "wrote " << gen_out << " (m=" << data.m << ", cone dim=" << data.cone.dim()
                << ")\n";
    } else if (gen_rand->parsed()) {
      lrkkt::ConeSpec spec;
      spec.nonneg_dim = r_nonneg;
      spec.psd_dims = r_psd;
      const auto mode = r_mode == "EQUALITY" ? lrkkt::TraceMode::EQUALITY
                                             : lrkkt::TraceMode::UPPER_BOUND;
      const auto data =
          lrkkt::gen_random(r_m, spec, r_ineq, r_eq, r_box, r_vh, mode, gen_seed);
      lrkkt::save_instance(data, gen_out);
      std::cout << "wrote " << gen_out << " (m=" << data.m << ", cone dim=" << data.cone.dim()
                << ")\n";
    } else if (trace_cmd->parsed()) {
      const auto data = lrkkt::load_instance(trace_instance);
      lrkkt::IPMConfig config;
      config.mu_min = trace_mu_min;
      config.max_newton = trace_max_newton;
      const auto result = lrkkt::ipm_run(data, config);
      lrkkt::save_trace(data, result.trace, trace_out);
      std::cout << "wrote " << result.trace.size() << " snapshots to " << trace_out
                << " (final mu=" << result.mu_final << ")\n";
    } else if (replay_cmd->parsed()) {
      const auto loaded = lrkkt::load_trace(replay_trace);
      const auto records = lrkkt::replay(loaded.data, loaded.trace,
                                         parse_solvers(replay_solvers), replay_seed,
                                         replay_trace);
      std::ofstream out(replay_out);
      if (!out) throw std::runtime_error("cannot open " + replay_out);
      lrkkt::emit_records_csv(out, records);
      std::cout << "wrote " << records.size() << " records to " << replay_out << "\n";
    } else if (sum_cmd->parsed()) {
      std::ifstream in(sum_in);
      if (!in) throw std::runtime_error("cannot open " + sum_in);
      const auto records = lrkkt::parse_records_csv(in);
      const auto grouping = sum_group == "bundle" ? lrkkt::GroupBy::BUNDLE : lrkkt::GroupBy::MU;
      const auto rows = lrkkt::summarize(records, grouping, lrkkt::metric_from_string(sum_metric));
      std::ofstream out(sum_out);
      if (!out) throw std::runtime_error("cannot open " + sum_out);
      lrkkt::emit_summary_csv(out, rows);
      std::cout << "wrote " << rows.size() << " summary rows to " << sum_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
