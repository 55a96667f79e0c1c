#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fading_flock/configuration.hpp"
#include "fading_flock/dynamics.hpp"
#include "fading_flock/error.hpp"
#include "fading_flock/graph.hpp"
#include "fading_flock/interaction.hpp"

// Run configuration (JSON, "version": 1) and snapshot stream (JSON Lines) I/O.
namespace fading_flock::io {

using json = nlohmann::json;

inline constexpr int kConfigVersion = 1;

struct RandomPlacement {
  double scale = 1.0;  // cube side is scale * N^(1/n) * alpha_plus
};

struct SelfClusteringRequest {
  double l0 = 0.0;
  double l1 = 0.0;
  std::optional<VertexPartition> partition;
};

struct AnalysisRequest {
  std::optional<double> dilute_l;
  std::optional<std::pair<double, double>> diluting_thresholds;  // start, step
  std::optional<SelfClusteringRequest> self_clustering;
  std::size_t pi_depth = 0;  // 0 means all levels
  std::size_t mu_budget = 0;
  std::vector<double> mu_distances;
};

struct RunConfig {
  std::size_t dimension = 2;
  std::vector<std::string> labels;
  Graph graph;
  std::vector<std::shared_ptr<const InteractionFunction>> edge_laws;  // aligned with graph.edges()
  std::variant<Eigen::MatrixXd, RandomPlacement> initial;
  IntegratorParams integrator;
  AnalysisRequest analysis;
  std::uint64_t seed = 0;
  json document;  // the parsed source

  InteractionMap interactions() const { return {graph, edge_laws}; }

  std::string edge_name(const Edge& e) const { return "(" + labels[e.first] + ", " + labels[e.second] + ")"; }
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw Error("missing required field '" + path + "'");
  return obj.at(key);
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw Error("field '" + path + "' must be a number");
  return v.get<double>();
}

inline double positive(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (!(x > 0.0)) throw Error("field '" + path + "' must be positive");
  return x;
}

inline int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw Error("field '" + path + "' must be an integer");
  return v.get<int>();
}

/// Piecewise-linear in log d between samples; power-law tails fitted to the end pairs.
inline std::function<double(double)> sampled_law(std::vector<double> d, std::vector<double> g) {
  auto tail = [](double d0, double g0, double d1, double g1) -> std::pair<double, double> {
    if (g0 == 0.0 || g1 == 0.0 || (g0 > 0) != (g1 > 0)) return {g0, 0.0};
    return {g0, std::log(std::abs(g1 / g0)) / std::log(d1 / d0)};
  };
  const auto low = tail(d[0], g[0], d[1], g[1]);
  const std::size_t n = d.size();
  const auto high = tail(d[n - 1], g[n - 1], d[n - 2], g[n - 2]);
  return [d = std::move(d), g = std::move(g), low, high](double x) {
    if (x <= d.front()) return low.first * std::pow(x / d.front(), low.second);
    if (x >= d.back()) return high.first * std::pow(x / d.back(), high.second);
    const auto it = std::upper_bound(d.begin(), d.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - d.begin()) - 1;
    const double w = std::log(x / d[i]) / std::log(d[i + 1] / d[i]);
    return (1.0 - w) * g[i] + w * g[i + 1];
  };
}

inline InteractionFunction parse_law(const json& spec, const std::string& path, double margin) {
  const std::string kind = require(spec, "kind", path + ".kind").get<std::string>();
  if (kind == "lennard_jones") {
    return InteractionFunction::lennard_jones(number(require(spec, "sigma1", path + ".sigma1"), path + ".sigma1"),
                                              number(require(spec, "sigma2", path + ".sigma2"), path + ".sigma2"),
                                              integer(require(spec, "n1", path + ".n1"), path + ".n1"),
                                              integer(require(spec, "n2", path + ".n2"), path + ".n2"), margin);
  }
  if (kind == "tabulated") {
    const auto& samples = require(spec, "samples", path + ".samples");
    if (!samples.is_array() || samples.size() < 2) throw Error("field '" + path + ".samples' needs at least two [d, g] pairs");
    std::vector<double> d, g;
    for (const auto& s : samples) {
      if (!s.is_array() || s.size() != 2) throw Error("field '" + path + ".samples' entries must be [d, g] pairs");
      d.push_back(number(s[0], path + ".samples"));
      g.push_back(number(s[1], path + ".samples"));
    }
    for (std::size_t i = 0; i < d.size(); ++i)
      if (!(d[i] > 0.0) || (i > 0 && !(d[i] > d[i - 1])))
        throw Error("field '" + path + ".samples' distances must be positive and increasing");
    TabulatedFunction t;
    t.grid = d;
    t.g = sampled_law(std::move(d), std::move(g));
    if (spec.contains("alpha_plus")) t.alpha_plus = positive(spec.at("alpha_plus"), path + ".alpha_plus");
    return InteractionFunction::tabulated(std::move(t));
  }
  throw Error("unknown interaction kind '" + kind + "' at '" + path + "'");
}

inline std::pair<Vertex, Vertex> parse_edge(const json& e, const std::map<std::string, Vertex>& index,
                                            const std::string& path) {
  if (!e.is_array() || e.size() != 2) throw Error("field '" + path + "' must be a pair of vertices");
  auto vertex = [&](const json& v) -> Vertex {
    if (v.is_string()) {
      auto it = index.find(v.get<std::string>());
      if (it == index.end()) throw Error("unknown vertex '" + v.get<std::string>() + "' in '" + path + "'");
      return it->second;
    }
    if (v.is_number_unsigned()) return v.get<Vertex>();
    if (v.is_number_integer()) throw Error("negative vertex index in '" + path + "'");
    throw Error("field '" + path + "' must name vertices by label or index");
  };
  return {vertex(e[0]), vertex(e[1])};
}

}  // namespace detail

/// Parses and checks a run configuration. Interaction laws are built but not validated here.
inline RunConfig parse_config(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw Error("configuration must be a JSON object");
  const auto& version = require(doc, "version", "version");
  if (!version.is_number_integer() || version.get<int>() != kConfigVersion)
    throw Error("unsupported configuration version (expected " + std::to_string(kConfigVersion) + ")");

  RunConfig cfg;
  cfg.document = doc;
  if (doc.contains("dimension")) {
    const int n = integer(doc.at("dimension"), "dimension");
    if (n < 1) throw Error("field 'dimension' must be at least 1");
    cfg.dimension = static_cast<std::size_t>(n);
  }

  // Graph.
  const auto& graph = require(doc, "graph", "graph");
  std::map<std::string, Vertex> index;
  if (graph.contains("vertices")) {
    const auto& vs = graph.at("vertices");
    if (!vs.is_array()) throw Error("field 'graph.vertices' must be an array of labels");
    for (const auto& v : vs) {
      const std::string label = v.is_string() ? v.get<std::string>() : v.dump();
      if (!index.emplace(label, cfg.labels.size()).second) throw Error("duplicate vertex label '" + label + "'");
      cfg.labels.push_back(label);
    }
  } else if (graph.contains("vertex_count")) {
    const int n = integer(graph.at("vertex_count"), "graph.vertex_count");
    if (n < 0) throw Error("field 'graph.vertex_count' must be nonnegative");
    for (int i = 0; i < n; ++i) {
      index.emplace(std::to_string(i), static_cast<Vertex>(i));
      cfg.labels.push_back(std::to_string(i));
    }
  } else {
    throw Error("missing required field 'graph.vertices'");
  }
  const auto& edges_json = require(graph, "edges", "graph.edges");
  if (!edges_json.is_array()) throw Error("field 'graph.edges' must be an array");
  std::vector<Edge> edges;
  for (const auto& e : edges_json) edges.push_back(parse_edge(e, index, "graph.edges"));
  cfg.graph = Graph(cfg.labels.size(), edges);
  if (cfg.graph.vertex_count() < 2) throw Error("need at least two agents");
  if (!is_connected(cfg.graph)) throw Error("graph not connected");

  // Interactions.
  const double margin = doc.contains("alpha_margin") ? positive(doc.at("alpha_margin"), "alpha_margin")
                                                     : InteractionFunction::kDefaultMargin;
  const auto& inter = require(doc, "interactions", "interactions");
  std::shared_ptr<const InteractionFunction> fallback;
  if (inter.contains("default"))
    fallback = std::make_shared<const InteractionFunction>(parse_law(inter.at("default"), "interactions.default", margin));
  cfg.edge_laws.assign(cfg.graph.edge_count(), fallback);
  if (inter.contains("edges")) {
    const auto& list = inter.at("edges");
    if (!list.is_array()) throw Error("field 'interactions.edges' must be an array");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string path = "interactions.edges[" + std::to_string(k) + "]";
      const auto [a, b] = parse_edge(require(list[k], "edge", path + ".edge"), index, path + ".edge");
      const std::size_t e = cfg.graph.edge_index(a, b);
      if (e == cfg.graph.edge_count()) throw Error("'" + path + ".edge' is not an edge of the graph");
      cfg.edge_laws[e] = std::make_shared<const InteractionFunction>(parse_law(require(list[k], "law", path + ".law"), path + ".law", margin));
    }
  }
  for (std::size_t e = 0; e < cfg.edge_laws.size(); ++e)
    if (!cfg.edge_laws[e]) throw Error("no interaction for edge " + cfg.edge_name(cfg.graph.edges()[e]));

  // Initial positions.
  const auto& init = require(doc, "initial_positions", "initial_positions");
  if (init.contains("explicit")) {
    const auto& rows = init.at("explicit");
    if (!rows.is_array() || rows.size() != cfg.graph.vertex_count())
      throw Error("field 'initial_positions.explicit' needs one point per vertex");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(cfg.dimension), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array() || rows[i].size() != cfg.dimension)
        throw Error("initial position of vertex '" + cfg.labels[i] + "' must have " + std::to_string(cfg.dimension) +
                    " coordinates");
      for (std::size_t k = 0; k < cfg.dimension; ++k)
        x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = number(rows[i][k], "initial_positions.explicit");
    }
    cfg.initial = std::move(x);
  } else if (init.contains("random")) {
    RandomPlacement r;
    if (init.at("random").contains("scale")) r.scale = positive(init.at("random").at("scale"), "initial_positions.random.scale");
    cfg.initial = r;
  } else {
    throw Error("missing required field 'initial_positions.explicit'");
  }

  // Integrator.
  if (doc.contains("integrator")) {
    const auto& it = doc.at("integrator");
    auto opt = [&](const char* key, double& target) {
      if (it.contains(key)) target = number(it.at(key), std::string("integrator.") + key);
    };
    opt("rtol", cfg.integrator.relative_tolerance);
    opt("atol", cfg.integrator.absolute_tolerance);
    opt("initial_step", cfg.integrator.initial_step);
    opt("max_step", cfg.integrator.max_step);
    opt("horizon", cfg.integrator.horizon);
    opt("eps_eq", cfg.integrator.equilibrium_threshold);
  }
  cfg.integrator.snapshot_interval = cfg.integrator.horizon / 1000.0;
  if (doc.contains("snapshot_interval")) {
    cfg.integrator.snapshot_interval = number(doc.at("snapshot_interval"), "snapshot_interval");
  }
  cfg.integrator.validate();

  // Analysis requests.
  if (doc.contains("analysis")) {
    const auto& a = doc.at("analysis");
    if (a.contains("dilute_l")) cfg.analysis.dilute_l = positive(a.at("dilute_l"), "analysis.dilute_l");
    if (a.contains("diluting_thresholds")) {
      const auto& d = a.at("diluting_thresholds");
      cfg.analysis.diluting_thresholds = {
          positive(require(d, "start", "analysis.diluting_thresholds.start"), "analysis.diluting_thresholds.start"),
          positive(require(d, "step", "analysis.diluting_thresholds.step"), "analysis.diluting_thresholds.step")};
    }
    if (a.contains("self_clustering")) {
      const auto& s = a.at("self_clustering");
      SelfClusteringRequest r;
      r.l0 = positive(require(s, "l0", "analysis.self_clustering.l0"), "analysis.self_clustering.l0");
      r.l1 = positive(require(s, "l1", "analysis.self_clustering.l1"), "analysis.self_clustering.l1");
      if (s.contains("partition")) {
        std::vector<std::vector<Vertex>> blocks;
        for (const auto& block : s.at("partition")) {
          blocks.emplace_back();
          for (const auto& v : block) {
            const json pair = json::array({v, v});
            blocks.back().push_back(parse_edge(pair, index, "analysis.self_clustering.partition").first);
          }
        }
        r.partition = VertexPartition(cfg.graph.vertex_count(), std::move(blocks));
      }
      cfg.analysis.self_clustering = std::move(r);
    }
    if (a.contains("pi_depth")) {
      const int k = integer(a.at("pi_depth"), "analysis.pi_depth");
      if (k < 0) throw Error("field 'analysis.pi_depth' must be nonnegative");
      cfg.analysis.pi_depth = static_cast<std::size_t>(k);
    }
    if (a.contains("mu_budget")) {
      const int b = integer(a.at("mu_budget"), "analysis.mu_budget");
      if (b < 0) throw Error("field 'analysis.mu_budget' must be nonnegative");
      cfg.analysis.mu_budget = static_cast<std::size_t>(b);
    }
    if (a.contains("mu_distances"))
      for (const auto& d : a.at("mu_distances")) cfg.analysis.mu_distances.push_back(positive(d, "analysis.mu_distances"));
  }

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) throw Error("field 'seed' must be a nonnegative integer");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  return cfg;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("malformed JSON in '" + path + "': " + e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  try {
    return parse_config(read_json_file(path));
  } catch (const json::exception& e) {
    throw Error(std::string("malformed configuration: ") + e.what());
  }
}

/**
 * Initial configuration: the explicit positions, or uniform in a cube of side
 * scale * N^(1/n) * alpha_plus, redrawn until every edge is at least
 * alpha_minus / 2 long.
 */
inline Configuration initial_configuration(const RunConfig& cfg, const InteractionMap& m, std::uint64_t seed) {
  if (const auto* x = std::get_if<Eigen::MatrixXd>(&cfg.initial)) {
    Configuration p(*x);
    if (!in_configuration_space(p, cfg.graph)) throw Error("initial configuration outside P_G");
    return p;
  }
  const auto& r = std::get<RandomPlacement>(cfg.initial);
  const double n = static_cast<double>(cfg.graph.vertex_count());
  const double side = r.scale * std::pow(n, 1.0 / static_cast<double>(cfg.dimension)) * m.alpha_plus();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, side);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Configuration p(cfg.dimension, cfg.graph.vertex_count());
    for (auto& c : p.positions().reshaped()) c = coord(rng);
    const auto met = metrics(p, cfg.graph);
    if (met.d_minus >= 0.5 * m.alpha_minus()) return p;
  }
  throw Error("random placement failed: no draw kept every edge above alpha_minus / 2");
}

/// One JSON object per line, floats with 17 significant digits.
inline std::string snapshot_line(const Snapshot& s) {
  using detail::fmt17;
  std::string out = "{\"t\":" + fmt17(s.t) + ",\"x\":[";
  const auto& x = s.p.positions();
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    out += i ? ",[" : "[";
    for (Eigen::Index k = 0; k < x.rows(); ++k) out += (k ? "," : "") + fmt17(x(k, i));
    out += "]";
  }
  out += "],\"psi\":" + fmt17(s.psi) + ",\"f_norm\":" + fmt17(s.f_norm) + ",\"d_minus\":" + fmt17(s.d_minus) +
         ",\"d_plus\":" + fmt17(s.d_plus) + ",\"phi\":" + fmt17(s.phi) + "}";
  return out;
}

inline void write_snapshots(const std::string& path, const std::vector<Snapshot>& snapshots) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& s : snapshots) out << snapshot_line(s) << '\n';
}

inline void write_timeseries_csv(const std::string& path, const std::vector<Snapshot>& snapshots) {
  using detail::fmt17;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "t,psi,f_norm,d_minus,d_plus,phi\n";
  for (const auto& s : snapshots)
    out << fmt17(s.t) << ',' << fmt17(s.psi) << ',' << fmt17(s.f_norm) << ',' << fmt17(s.d_minus) << ','
        << fmt17(s.d_plus) << ',' << fmt17(s.phi) << '\n';
}

inline Snapshot parse_snapshot_line(const std::string& line, std::size_t line_number) {
  const std::string where = "snapshot line " + std::to_string(line_number);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    throw Error(where + ": malformed JSON");
  }
  auto num = [&](const char* key) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_number())
      throw Error(where + ": missing or non-numeric field '" + key + "'");
    return j.at(key).get<double>();
  };
  Snapshot s;
  s.t = num("t");
  if (!j.contains("x") || !j.at("x").is_array() || j.at("x").empty()) throw Error(where + ": missing positions 'x'");
  const auto& x = j.at("x");
  const std::size_t dim = x[0].is_array() ? x[0].size() : 0;
  if (dim == 0) throw Error(where + ": positions must be nonempty arrays");
  Eigen::MatrixXd pos(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i].is_array() || x[i].size() != dim) throw Error(where + ": ragged positions");
    for (std::size_t k = 0; k < dim; ++k) {
      if (!x[i][k].is_number()) throw Error(where + ": non-numeric coordinate");
      pos(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = x[i][k].get<double>();
    }
  }
  s.p = Configuration(std::move(pos));
  s.psi = num("psi");
  s.f_norm = num("f_norm");
  s.d_minus = num("d_minus");
  s.d_plus = num("d_plus");
  s.phi = num("phi");
  return s;
}

/// Reads a snapshot stream; errors name the offending line. Blank lines are skipped.
inline std::vector<Snapshot> read_snapshots(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<Snapshot> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_snapshot_line(line, n));
    if (out.size() > 1) {
      if (out.back().p.dimension() != out.front().p.dimension() || out.back().p.agent_count() != out.front().p.agent_count())
        throw Error("snapshot line " + std::to_string(n) + ": shape differs from the first snapshot");
      if (!(out.back().t > out[out.size() - 2].t))
        throw Error("snapshot line " + std::to_string(n) + ": times must be strictly increasing");
    }
  }
  if (out.empty()) throw Error("snapshot file '" + path + "' is empty");
  return out;
}

inline json partition_json(const VertexPartition& vp, const std::vector<std::string>& labels) {
  json blocks = json::array();
  for (const auto& b : vp.blocks()) {
    json block = json::array();
    for (Vertex v : b) block.push_back(labels.at(v));
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace fading_flock::io
