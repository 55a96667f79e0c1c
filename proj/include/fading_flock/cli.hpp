#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fading_flock/analysis.hpp"
#include "fading_flock/collision.hpp"
#include "fading_flock/dynamics.hpp"
#include "fading_flock/error.hpp"
#include "fading_flock/interaction.hpp"
#include "fading_flock/io.hpp"
#include "fading_flock/partition.hpp"

// Subcommands of the fading_flock tool. Each returns the process exit code:
// 0 success (converged), 2 horizon reached without convergence, 1 error.
namespace fading_flock::cli {

namespace fs = std::filesystem;
using io::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitHorizon = 2;

struct SimulateOptions {
  std::string config;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::size_t ensemble = 1;
};

struct AnalyzeOptions {
  std::string snapshots;
  std::optional<std::string> config;  // defaults to config.json beside the snapshots
  std::optional<std::string> out;     // defaults to analysis.json beside the snapshots
};

namespace detail {

inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string describe(const InteractionFunction& f) {
  if (const auto* lj = f.lennard_jones_params())
    return "lennard_jones(sigma1=" + fmt12(lj->sigma1) + ", sigma2=" + fmt12(lj->sigma2) +
           ", n1=" + std::to_string(lj->n1) + ", n2=" + std::to_string(lj->n2) + ")";
  return "tabulated(" + std::to_string(f.tabulated_params()->grid.size()) + " samples)";
}

/// Throws unless every edge law passes both checks.
inline void require_valid_laws(const io::RunConfig& cfg) {
  for (std::size_t e = 0; e < cfg.edge_laws.size(); ++e) {
    const auto report = validate(*cfg.edge_laws[e]);
    for (const auto& c : report.checks)
      if (!c.passed)
        throw Error("interaction on edge " + cfg.edge_name(cfg.graph.edges()[e]) + ": " + c.name + " violated (" +
                    c.detail + ")");
  }
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::size_t thread_cap(std::size_t jobs) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FADING_FLOCK_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) cap = std::min<std::size_t>(cap, v);
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

inline json positions_json(const Configuration& p) {
  json rows = json::array();
  for (std::size_t i = 0; i < p.agent_count(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < p.dimension(); ++k) row.push_back(p.point(i)[static_cast<Eigen::Index>(k)]);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json snapshot_json(const Snapshot& s) {
  return {{"t", s.t},           {"psi", s.psi},       {"f_norm", s.f_norm}, {"d_minus", s.d_minus},
          {"d_plus", s.d_plus}, {"phi", s.phi},       {"x", positions_json(s.p)}};
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

struct RunOutcome {
  int code = kExitError;
  std::string message;
};

/// One simulation written to `dir`: snapshots.jsonl, timeseries.csv, summary.json, config.json.
inline RunOutcome run_one(const io::RunConfig& cfg, const InteractionMap& m, std::uint64_t seed, const fs::path& dir) {
  fs::create_directories(dir);
  json used = cfg.document;
  used["seed"] = seed;
  write_text(dir / "config.json", used.dump(2) + "\n");

  const Configuration p0 = io::initial_configuration(cfg, m, seed);
  json summary;
  summary["seed"] = seed;
  summary["agents"] = cfg.graph.vertex_count();
  summary["edges"] = cfg.graph.edge_count();
  summary["dimension"] = cfg.dimension;
  summary["alpha_plus"] = m.alpha_plus();
  summary["alpha_minus"] = m.alpha_minus();
  summary["psi_zero"] = psi_zero(m);
  summary["d_plus_bound"] = (static_cast<double>(cfg.graph.vertex_count()) - 1.0) * m.alpha_plus();

  Trajectory traj;
  try {
    traj = simulate(cfg.graph, m, p0, cfg.integrator);
  } catch (const StiffnessFailure& e) {
    summary["stop"] = "stiffness failure";
    summary["converged"] = false;
    summary["last_valid"] = snapshot_json(e.last_valid);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    return {kExitError, "stiffness failure at t = " + fmt12(e.last_valid.t)};
  }

  io::write_snapshots((dir / "snapshots.jsonl").string(), traj.snapshots);
  io::write_timeseries_csv((dir / "timeseries.csv").string(), traj.snapshots);

  const auto& last = traj.snapshots.back();
  summary["stop"] = traj.converged() ? "equilibrium" : "horizon";
  summary["converged"] = traj.converged();
  summary["final"] = snapshot_json(last);
  summary["snapshots"] = traj.snapshots.size();
  summary["stats"] = {{"accepted", traj.stats.accepted},
                      {"rejected", traj.stats.rejected},
                      {"collision_rejections", traj.stats.collision_rejections}};
  summary["collision_bound"] = traj.collision_bound;
  summary["min_d_minus"] = traj.min_d_minus;
  summary["max_f_norm"] = traj.max_f_norm;
  summary["centroid_drift"] = (last.p.centroid() - p0.centroid()).norm();
  const auto eq = is_equilibrium(cfg.graph, m, last.p, cfg.integrator.equilibrium_threshold);
  summary["equilibrium"] = {{"is_equilibrium", eq.is_equilibrium}, {"residual", eq.residual},
                            {"d_minus", eq.d_minus},               {"d_plus", eq.d_plus},
                            {"d_plus_bound", eq.d_plus_bound},     {"bound_satisfied", eq.bound_satisfied}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  std::string msg = std::string(traj.converged() ? "converged" : "horizon reached") + " at t = " + fmt12(last.t) +
                    ", ||f|| = " + fmt12(last.f_norm) + ", d_minus = " + fmt12(last.d_minus) +
                    ", d_plus = " + fmt12(last.d_plus);
  return {traj.converged() ? kExitOk : kExitHorizon, msg};
}

}  // namespace detail

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    if (opt.ensemble < 1) throw Error("ensemble size must be at least 1");
    const auto cfg = io::load_config(opt.config);
    detail::require_valid_laws(cfg);
    const InteractionMap m = cfg.interactions();
    const std::uint64_t seed = opt.seed.value_or(cfg.seed);
    const fs::path root(opt.out_dir);

    if (opt.ensemble == 1) {
      const auto r = detail::run_one(cfg, m, seed, root);
      (r.code == kExitError ? err : out) << r.message << '\n';
      return r.code;
    }

    // Independent runs in parallel; each writes only to its own directory.
    std::vector<detail::RunOutcome> results(opt.ensemble);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < opt.ensemble; k = next++) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu", k);
        try {
          results[k] = detail::run_one(cfg, m, detail::splitmix64(seed + k), root / name);
        } catch (const std::exception& e) {
          results[k] = {kExitError, e.what()};
        }
      }
    };
    std::vector<std::thread> pool;
    const std::size_t threads = detail::thread_cap(opt.ensemble);
    for (std::size_t i = 0; i + 1 < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    json index = json::array();
    int code = kExitOk;
    for (std::size_t k = 0; k < results.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%03zu", k);
      index.push_back({{"run", name}, {"seed", detail::splitmix64(seed + k)}, {"exit", results[k].code},
                       {"message", results[k].message}});
      (results[k].code == kExitError ? err : out) << name << ": " << results[k].message << '\n';
      if (results[k].code == kExitError) code = kExitError;
      else if (results[k].code == kExitHorizon && code == kExitOk) code = kExitHorizon;
    }
    detail::write_text(root / "ensemble.json", index.dump(2) + "\n");
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

namespace detail {

inline json dilute_json(const std::optional<FrameworkPartition>& fp, const std::vector<std::string>& labels) {
  if (!fp) return {{"found", false}};
  json j = {{"found", true}, {"partition", io::partition_json(fp->partition(), labels)},
            {"intra", fp->intra_distance()}};
  j["inter"] = fp->inter_distance();
  return j;
}

}  // namespace detail

inline int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const auto snapshots = io::read_snapshots(opt.snapshots);
    const fs::path base = fs::path(opt.snapshots).parent_path();
    std::optional<std::string> config_path = opt.config;
    if (!config_path && fs::exists(base / "config.json")) config_path = (base / "config.json").string();

    const std::size_t agents = snapshots.front().p.agent_count();
    std::optional<io::RunConfig> cfg;
    std::optional<InteractionMap> m;
    Graph graph;
    std::vector<std::string> labels;
    if (config_path) {
      cfg = io::load_config(*config_path);
      if (cfg->graph.vertex_count() != agents)
        throw Error("configuration has " + std::to_string(cfg->graph.vertex_count()) +
                    " vertices but the snapshots have " + std::to_string(agents) + " agents");
      detail::require_valid_laws(*cfg);
      m = cfg->interactions();
      graph = cfg->graph;
      labels = cfg->labels;
    } else {
      graph = Graph::complete(agents);
      for (std::size_t i = 0; i < agents; ++i) labels.push_back(std::to_string(i));
    }
    const io::AnalysisRequest request = cfg ? cfg->analysis : io::AnalysisRequest{};
    for (std::size_t s = 0; s < snapshots.size(); ++s)
      if (!in_configuration_space(snapshots[s].p, graph))
        throw Error("snapshot " + std::to_string(s + 1) + " is outside P_G");

    Trajectory traj;
    traj.graph = graph;
    traj.snapshots = snapshots;

    json report;
    report["snapshots"] = snapshots.size();
    report["graph"] = cfg ? "configuration" : "complete graph (no configuration found)";
    const double l = request.dilute_l.value_or(m ? m->alpha_plus() : 1.0);
    report["dilute_l"] = l;

    json dilute = json::array();
    std::vector<Configuration> configs;
    for (std::size_t s = 0; s < snapshots.size(); ++s) {
      json entry = detail::dilute_json(find_nontrivial_dilute(graph, snapshots[s].p, l), labels);
      entry["index"] = s;
      entry["t"] = snapshots[s].t;
      dilute.push_back(std::move(entry));
      configs.push_back(snapshots[s].p);
    }
    report["dilute"] = std::move(dilute);

    const auto [start, step] = request.diluting_thresholds.value_or(std::pair{l, l});
    std::vector<double> ls(snapshots.size());
    for (std::size_t i = 0; i < ls.size(); ++i) ls[i] = start + step * static_cast<double>(i);
    const auto witness = diluting_subsequence(graph, configs, ls);
    report["diluting_thresholds"] = {{"start", start}, {"step", step}};
    if (witness) {
      report["diluting_subsequence"] = {{"indices", witness->indices},
                                        {"partition", io::partition_json(witness->partition, labels)},
                                        {"L0", witness->bound}};
    } else {
      report["diluting_subsequence"] = nullptr;
    }

    // Partition used for the cluster diagnostics: requested, else the diluting witness.
    std::optional<VertexPartition> vp;
    if (request.self_clustering && request.self_clustering->partition) vp = request.self_clustering->partition;
    else if (witness) vp = witness->partition;

    if (vp && !vp->is_trivial()) {
      report["cluster_partition"] = io::partition_json(*vp, labels);
      const std::size_t depth = request.pi_depth == 0 ? vp->block_count() : std::min(request.pi_depth, vp->block_count());
      json pi = json::array();
      for (const auto& s : snapshots) {
        auto table = pi_table(s.p, *vp);
        table.resize(depth);
        pi.push_back({{"t", s.t}, {"pi", table}});
      }
      report["pi"] = std::move(pi);

      if (request.self_clustering) {
        const auto& sc = *request.self_clustering;
        const auto verdict = self_clustering_detect(traj, *vp, sc.l0, sc.l1);
        json v = {{"l0", sc.l0}, {"l1", sc.l1}, {"self_clustering", verdict.self_clustering}};
        v["t0"] = verdict.t0 ? json(*verdict.t0) : json(nullptr);
        v["t0_index"] = verdict.t0_index ? json(*verdict.t0_index) : json(nullptr);
        std::size_t bounded = 0;
        const auto diag = cluster_diagnostics(traj, *vp);
        for (std::size_t s = 0; s < snapshots.size(); ++s)
          if (snapshots[s].phi < 2.0 * (diag.pi[s][0] + sc.l0)) ++bounded;
        v["phi_bound_holds"] = bounded;
        v["phi_max"] = std::max_element(snapshots.begin(), snapshots.end(), [](const auto& a, const auto& b) {
                         return a.phi < b.phi;
                       })->phi;
        report["self_clustering"] = std::move(v);

        const auto checks = lemma4_check(traj, *vp, sc.l0, m ? std::optional<double>(m->alpha_plus()) : std::nullopt);
        std::size_t applicable = 0, passed = 0;
        json failures = json::array();
        double min_slack = std::numeric_limits<double>::infinity();
        for (const auto& c : checks) {
          if (!c.applicable) continue;
          ++applicable;
          min_slack = std::min(min_slack, c.slack);
          if (c.passed) ++passed;
          else failures.push_back({{"t", c.t}, {"k", c.k}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"slack", c.slack}});
        }
        report["lemma4"] = {{"evaluated", checks.size()}, {"applicable", applicable}, {"passed", passed},
                            {"failures", std::move(failures)}};
        report["lemma4"]["min_slack"] = applicable ? json(min_slack) : json(nullptr);
      } else {
        report["self_clustering"] = nullptr;
      }
    }

    if (m) {
      const double eps = cfg->integrator.equilibrium_threshold;
      const auto eq = is_equilibrium(graph, *m, snapshots.back().p, eps);
      report["equilibrium"] = {{"is_equilibrium", eq.is_equilibrium}, {"residual", eq.residual},
                               {"d_minus", eq.d_minus},               {"d_plus", eq.d_plus},
                               {"d_plus_bound", eq.d_plus_bound},     {"bound_satisfied", eq.bound_satisfied}};
      if (request.mu_budget > 0 && !request.mu_distances.empty()) {
        json mu = json::array();
        for (double d : request.mu_distances) {
          const auto est = mu_estimate(graph, *m, d, request.mu_budget, cfg->seed, cfg->dimension);
          mu.push_back({{"d", d}, {"estimate", est.value}});
        }
        report["mu_estimates"] = std::move(mu);
      }
    }

    const fs::path target = opt.out ? fs::path(*opt.out) : base / "analysis.json";
    detail::write_text(target, report.dump(2) + "\n");
    out << "analysed " << snapshots.size() << " snapshots; report written to " << target.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

inline int cmd_validate(const std::string& config, std::ostream& out, std::ostream& err) {
  using detail::fmt12;
  try {
    const auto cfg = io::load_config(config);
    bool ok = true;
    for (std::size_t e = 0; e < cfg.edge_laws.size(); ++e) {
      const auto& f = *cfg.edge_laws[e];
      out << "edge " << cfg.edge_name(cfg.graph.edges()[e]) << ": " << detail::describe(f) << '\n';
      for (const auto& c : validate(f).checks) {
        if (c.passed) {
          out << "  pass  " << c.name << ": " << c.detail << '\n';
        } else {
          ok = false;
          out << "  FAIL  " << c.name << " violated: " << c.detail << '\n';
        }
      }
    }
    if (!ok) {
      err << "validation failed\n";
      return kExitError;
    }
    const InteractionMap m = cfg.interactions();
    const double psi0 = psi_zero(m);
    const double n = static_cast<double>(cfg.graph.vertex_count());
    out << "alpha_plus: " << fmt12(m.alpha_plus()) << '\n';
    out << "alpha_minus: " << fmt12(m.alpha_minus()) << '\n';
    out << "psi_zero: " << fmt12(psi0) << '\n';
    out << "D_plus: " << fmt12((n - 1.0) * m.alpha_plus()) << '\n';
    const Configuration p0 = io::initial_configuration(cfg, m, cfg.seed);
    const double psi = potential(cfg.graph, m, p0);
    out << "initial potential: " << fmt12(psi) << '\n';
    out << "collision bound: " << fmt12(collision_bound(cfg.graph, m, psi)) << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace fading_flock::cli
