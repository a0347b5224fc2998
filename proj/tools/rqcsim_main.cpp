// Copyright 2026 The rqcsim Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: gen | stats | optimize | estimate | run | sample | validate | bench.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rqcsim/circuit.hpp"
#include "rqcsim/engine.hpp"
#include "rqcsim/executor.hpp"
#include "rqcsim/oracle.hpp"
#include "rqcsim/pathopt.hpp"
#include "rqcsim/sampling.hpp"
#include "rqcsim/tensornet.hpp"

#ifndef RQCSIM_VERSION
#define RQCSIM_VERSION "0.0.0"
#endif

using json = nlohmann::ordered_json;
using namespace rqcsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by several subcommands. Not every subcommand reads every field.
struct Options {
  std::string circuit;
  std::string path;
  std::string plan;
  std::string out;
  std::string checkpoint;
  std::string precision = "single";
  std::string bits;
  std::vector<int> open;
  int workers = 0;  // 0: RQCSIM_WORKERS or 1
  std::optional<double> mem_cap_log2;
  std::uint64_t seed = 0;
  bool deterministic_reduce = true;
  bool no_simplify = false;
};

int default_workers() {
  if (const char* env = std::getenv("RQCSIM_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
    throw UsageError("RQCSIM_WORKERS must be a positive integer");
  }
  return 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cli", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t text_hash(std::string_view text) {
  Fnv1a h;
  h.update(text);
  return h.digest();
}

/// Records what produced an output file. The hash goes into the file; the
/// manifest itself is written next to it as <out>.manifest.json.
class Manifest {
 public:
  Manifest(std::string subcommand, std::uint64_t seed) {
    j_["tool"] = "rqcsim";
    j_["version"] = RQCSIM_VERSION;
    j_["subcommand"] = std::move(subcommand);
    j_["seed"] = seed;
    j_["config"] = json::object();
    j_["inputs"] = json::object();
  }
  template <typename T>
  void config(const std::string& key, const T& value) {
    j_["config"][key] = value;
  }
  void input(const std::string& name, std::string_view content) { j_["inputs"][name] = hex64(text_hash(content)); }
  [[nodiscard]] std::string hash() const { return hex64(text_hash(j_.dump())); }
  [[nodiscard]] const json& doc() const { return j_; }

 private:
  json j_;
};

/// Writes `body` to --out (or stdout) and the manifest beside it.
void emit(const Options& o, const Manifest& m, const std::string& body) {
  if (o.out.empty() || o.out == "-") {
    std::cout << body;
    if (!body.empty() && body.back() != '\n') std::cout << '\n';
    return;
  }
  {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw Error("cli", "cannot write " + o.out);
    f << body;
  }
  std::ofstream mf(o.out + ".manifest.json");
  if (!mf) throw Error("cli", "cannot write " + o.out + ".manifest.json");
  mf << m.doc().dump(2) << '\n';
}

struct Loaded {
  std::string text;
  Circuit circuit;
};

Loaded load_circuit(const Options& o) {
  if (o.circuit.empty()) throw UsageError("--circuit is required");
  Loaded l;
  l.text = read_file(o.circuit);
  l.circuit = parse_circuit(l.text);
  return l;
}

Bitstring fixed_bits(const Options& o, int n) {
  if (o.bits.empty()) return Bitstring(static_cast<std::size_t>(n), 0);
  auto b = bitstring_from_string(o.bits);
  if (static_cast<int>(b.size()) != n) {
    throw UsageError("--bits has " + std::to_string(b.size()) + " characters for " + std::to_string(n) + " qubits");
  }
  return b;
}

RunConfig run_config(const Options& o) {
  RunConfig cfg;
  cfg.workers = o.workers > 0 ? o.workers : default_workers();
  cfg.precision = parse_precision_mode(o.precision);
  cfg.deterministic_reduce = o.deterministic_reduce;
  cfg.memory_cap_log2 = o.mem_cap_log2;
  cfg.checkpoint_path = o.checkpoint;
  return cfg;
}

json cost_json(const CostReport& r) {
  json j;
  j["log2_flops"] = r.log2_flops;
  j["log2_complexity"] = r.log2_flops - 3.0;  // complex multiply-adds
  j["log2_flops_per_task"] = r.log2_flops_per_task;
  j["num_tasks"] = r.num_tasks;
  j["max_rank"] = r.max_rank;
  j["log2_max_intermediate"] = r.log2_max_intermediate;
  j["compute_density"] = r.compute_density;
  if (r.exact) j["flops_per_task"] = r.exact_flops_per_task;
  return j;
}

void add_common(CLI::App* sub, Options& o, bool with_run_flags) {
  sub->add_option("--circuit", o.circuit, "Circuit file");
  sub->add_option("--out", o.out, "Output file (default stdout)");
  sub->add_option("--seed", o.seed, "Seed for every random choice");
  if (!with_run_flags) return;
  sub->add_option("--bits", o.bits, "Fixed output bits, character q = qubit q (default all 0)");
  sub->add_option("--open", o.open, "Qubits left open (batch)")->delimiter(',');
  sub->add_option("--workers", o.workers, "Worker threads (default $RQCSIM_WORKERS or 1)")->check(CLI::PositiveNumber);
  sub->add_option("--precision", o.precision, "single, mixed or double")
      ->check(CLI::IsMember({"single", "mixed", "double"}));
  sub->add_option("--mem-cap-log2", o.mem_cap_log2, "log2 of the element cap per intermediate");
  sub->add_option("--deterministic-reduce", o.deterministic_reduce, "Sum partials in ordinal order (default true)");
  sub->add_option("--checkpoint", o.checkpoint, "Checkpoint file for resumable runs");
  sub->add_option("--path", o.path, "Path JSON; slicing is recomputed under --mem-cap-log2");
  sub->add_option("--plan", o.plan, "Path JSON whose slicing is used as is");
  sub->add_flag("--no-simplify", o.no_simplify, "Skip network simplification");
}

// ------------------------------------------------------------------- gen

struct GenArgs {
  int rows = 0, cols = 0, depth = 0;
  std::string style = "cz";
  std::vector<int> disabled;
};

int cmd_gen(const Options& o, const GenArgs& g) {
  const auto style = g.style == "cz" ? CircuitStyle::CZ : CircuitStyle::FSIM;
  const Circuit c = generate_rqc(g.rows, g.cols, g.depth, o.seed, style, g.disabled);
  Manifest m("gen", o.seed);
  m.config("rows", g.rows);
  m.config("cols", g.cols);
  m.config("depth", g.depth);
  m.config("style", g.style);
  m.config("disabled", g.disabled);
  emit(o, m, "# manifest " + m.hash() + "\n" + serialize_circuit(c));
  return kExitOk;
}

// ------------------------------------------------------------------- stats

int cmd_stats(const Options& o) {
  const auto l = load_circuit(o);
  const Circuit& c = l.circuit;
  Manifest m("stats", o.seed);
  m.input("circuit", l.text);
  json j;
  j["manifest"] = m.hash();
  j["circuit"] = hex64(circuit_hash(c));
  j["rows"] = c.rows();
  j["cols"] = c.cols();
  j["qubits"] = c.num_qubits() - static_cast<int>(c.disabled().size());
  j["layers"] = c.cycles().size();
  j["depth"] = c.depth();
  std::map<std::string, int> kinds;
  for (const auto& cyc : c.cycles()) {
    for (const auto& g : cyc) ++kinds[std::string(gate_tag_name(g.tag))];
  }
  j["gates"] = kinds;
  const auto bits = fixed_bits(o, c.num_qubits());
  const auto raw = batch_network(c, bits, o.open, false);
  const auto simple = simplify(raw);
  auto net_json = [](const TensorNetwork& n) {
    const auto s = network_stats(n);
    return json{{"nodes", s.num_nodes}, {"indices", s.num_indices}, {"max_rank", s.max_rank}};
  };
  j["network"] = net_json(raw);
  j["simplified"] = net_json(simple);
  emit(o, m, j.dump(2));
  return kExitOk;
}

// ------------------------------------------------------------------- optimize

struct OptimizeArgs {
  std::string method = "anneal";
  int budget = 2000;
  double min_log2_tasks = 0.0;
  double density_weight = 0.0;
};

TensorNetwork network_for(const Options& o, const Circuit& c) {
  return batch_network(c, fixed_bits(o, c.num_qubits()), o.open, !o.no_simplify);
}

int cmd_optimize(const Options& o, const OptimizeArgs& a) {
  const auto l = load_circuit(o);
  const auto net = network_for(o, l.circuit);
  Manifest m("optimize", o.seed);
  m.input("circuit", l.text);
  m.config("method", a.method);
  m.config("budget", a.budget);
  m.config("open", o.open);
  m.config("simplify", !o.no_simplify);
  m.config("min_log2_tasks", a.min_log2_tasks);
  m.config("density_weight", a.density_weight);
  if (o.mem_cap_log2) m.config("mem_cap_log2", *o.mem_cap_log2);

  ContractionTree tree;
  json extra;
  if (a.method == "greedy") {
    tree = greedy_path(net, {o.seed, 0.0});
  } else {
    AnnealOptions ao;
    ao.log2_mem_cap = o.mem_cap_log2;
    LossWeights w;
    w.w_density = a.density_weight;
    const auto r = anneal_path(net, a.budget, w, o.seed, ao);
    tree = r.tree;
    extra["loss"] = r.loss;
    extra["greedy_loss"] = r.greedy_loss;
    extra["accepted_moves"] = r.accepted_moves;
  }
  SlicingPlan plan;
  if (o.mem_cap_log2 || a.min_log2_tasks > 0) {
    plan = general_slicing(net, tree, o.mem_cap_log2.value_or(std::numeric_limits<double>::infinity()),
                           a.min_log2_tasks);
  }
  json j = json::parse(path_to_json(tree, plan));
  j["manifest"] = m.hash();
  j["circuit"] = hex64(circuit_hash(l.circuit));
  j["open"] = o.open;
  j["simplify"] = !o.no_simplify;
  j["cost"] = cost_json(evaluate_cost(net, tree, plan.sliced));
  if (!extra.empty()) j["search"] = extra;
  emit(o, m, j.dump(2));
  return kExitOk;
}

// ------------------------------------------------------------------- estimate

struct EstimateArgs {
  int rows = 10, cols = 10;
  std::vector<int> depths{40};
  std::string style = "cz";
  bool lattice_only = false;
  int worst_of = 8;
  int budget = 200;
};

json lattice_row(const Circuit& c, int depth) {
  if (c.rows() != c.cols() || c.rows() % 2 != 0) throw UsageError("the lattice scheme needs a 2N x 2N lattice");
  const int N = c.rows() / 2;
  const auto params = lattice_slicing_params(N, depth);
  const auto coarse = coarsen_to_sites(diagonalize(build_network(c, Bitstring(static_cast<std::size_t>(c.num_qubits()), 0))));
  const auto [tree, plan] = lattice_contraction_tree(coarse, params);
  const auto r = evaluate_cost(coarse, tree, plan.sliced);
  json j = cost_json(r);
  j["approach"] = "lattice";
  j["N"] = params.N;
  j["b"] = params.b;
  j["S"] = params.S;
  j["L"] = params.L;
  j["rank_cap"] = params.rank_cap;
  // 2 L^{3N} multiply-adds and L^{N+b} elements of 8 bytes per sliced tensor.
  const double log2L = std::log2(static_cast<double>(params.L));
  j["formula_log2_complexity"] = 1.0 + 3.0 * N * log2L;
  j["formula_sliced_tensor_bytes"] = std::exp2((N + params.b) * log2L + 3.0);
  j["counted_max_intermediate_bytes"] = std::exp2(r.log2_max_intermediate + 3.0);
  return j;
}

int cmd_estimate(const Options& o, const EstimateArgs& a) {
  Manifest m("estimate", o.seed);
  std::optional<Loaded> loaded;
  if (!o.circuit.empty()) {
    loaded = load_circuit(o);
    m.input("circuit", loaded->text);
  } else {
    m.config("rows", a.rows);
    m.config("cols", a.cols);
    m.config("style", a.style);
  }
  m.config("depths", a.depths);
  m.config("lattice_only", a.lattice_only);
  m.config("worst_of", a.worst_of);
  m.config("budget", a.budget);

  json rows = json::array();
  const std::vector<int> depths = loaded ? std::vector<int>{loaded->circuit.depth()} : a.depths;
  for (int d : depths) {
    const Circuit c = loaded ? loaded->circuit
                             : generate_rqc(a.rows, a.cols, d, o.seed,
                                            a.style == "cz" ? CircuitStyle::CZ : CircuitStyle::FSIM);
    json ladder = json::array();
    if (c.rows() == c.cols() && c.rows() % 2 == 0) ladder.push_back(lattice_row(c, d));
    if (!a.lattice_only) {
      const auto net = network_for(o, c);
      // Worst of several noisy greedy orders stands in for an unoptimized path.
      CostReport worst;
      worst.log2_flops = -1;
      for (int i = 0; i < a.worst_of; ++i) {
        const auto r = evaluate_cost(net, greedy_path(net, {o.seed + static_cast<std::uint64_t>(i), 2.0}));
        if (r.log2_flops > worst.log2_flops) worst = r;
      }
      json w = cost_json(worst);
      w["approach"] = "unoptimized_worst";
      ladder.push_back(w);
      json g = cost_json(evaluate_cost(net, greedy_path(net, {o.seed, 0.0})));
      g["approach"] = "greedy";
      ladder.push_back(g);
      AnnealOptions ao;
      ao.log2_mem_cap = o.mem_cap_log2;
      const auto an = anneal_path(net, a.budget, {}, o.seed, ao);
      json s = cost_json(an.report);
      s["approach"] = "annealed";
      ladder.push_back(s);
    }
    rows.push_back({{"rows", c.rows()}, {"cols", c.cols()}, {"depth", d}, {"ladder", ladder}});
  }
  json j;
  j["manifest"] = m.hash();
  j["estimates"] = rows;
  emit(o, m, j.dump(2));
  return kExitOk;
}

// ------------------------------------------------------------------- run

struct Prepared {
  TensorNetwork net;
  ContractionTree tree;
  SlicingPlan plan;
  std::string path_text;
};

Prepared prepare(const Options& o, const Circuit& c, const RunConfig& cfg) {
  Prepared p;
  p.net = network_for(o, c);
  if (!o.plan.empty() && !o.path.empty()) throw UsageError("--path and --plan are exclusive");
  if (!o.plan.empty()) {
    p.path_text = read_file(o.plan);
    std::tie(p.tree, p.plan) = path_from_json(p.path_text, p.net);
    return p;
  }
  if (!o.path.empty()) {
    p.path_text = read_file(o.path);
    p.tree = path_from_json(p.path_text, p.net).first;
  } else {
    p.tree = greedy_path(p.net, {o.seed, 0.0});
  }
  if (cfg.memory_cap_log2) p.plan = general_slicing(p.net, p.tree, *cfg.memory_cap_log2);
  return p;
}

int cmd_run(const Options& o) {
  const auto l = load_circuit(o);
  const auto cfg = run_config(o);
  const auto p = prepare(o, l.circuit, cfg);
  Manifest m("run", o.seed);
  m.input("circuit", l.text);
  if (!p.path_text.empty()) m.input(o.plan.empty() ? "path" : "plan", p.path_text);
  m.config("bits", to_string(fixed_bits(o, l.circuit.num_qubits())));
  m.config("open", o.open);
  m.config("precision", o.precision);
  m.config("workers", cfg.workers);
  m.config("deterministic_reduce", cfg.deterministic_reduce);
  m.config("simplify", !o.no_simplify);
  if (cfg.memory_cap_log2) m.config("mem_cap_log2", *cfg.memory_cap_log2);

  const auto analytic = evaluate_cost(p.net, p.tree, p.plan.sliced);
  const auto r = execute(p.net, p.tree, p.plan, cfg);
  json j;
  j["manifest"] = m.hash();
  j["circuit"] = hex64(circuit_hash(l.circuit));
  j["plan"] = hex64(plan_hash(p.net, p.tree, p.plan));
  Bitstring bits = fixed_bits(o, l.circuit.num_qubits());
  for (int q : o.open) bits[static_cast<std::size_t>(q)] = 0;
  j["fixed_bits"] = to_string(bits);
  j["open"] = o.open;
  j["complete"] = r.complete;
  json amps = json::array();
  for (const auto& a : r.amplitudes.data()) amps.push_back({a.real(), a.imag()});
  if (!r.complete) amps = json::array();
  j["amplitudes"] = amps;
  const std::uint64_t analytic_flops =
      analytic.exact ? analytic.exact_flops_per_task * static_cast<std::uint64_t>(r.tasks_run + r.tasks_resumed) : 0;
  j["report"] = json::parse(run_report_json(r, cfg, analytic_flops));
  emit(o, m, j.dump(2));
  std::cerr << "run: " << r.tasks_run << " tasks (" << r.tasks_resumed << " resumed), " << r.flops << " flops, "
            << r.wall_seconds << " s\n";
  return kExitOk;
}

// ------------------------------------------------------------------- sample

struct SampleArgs {
  std::int64_t count = 1000;
  std::string method = "frugal";
  std::string source = "tn";
  int batch_qubits = 9;
  double envelope = kDefaultEnvelope;
  std::int64_t max_batches = 1 << 20;
};

int cmd_sample(const Options& o, const SampleArgs& a) {
  const auto l = load_circuit(o);
  const Circuit& c = l.circuit;
  const int n = c.num_qubits();
  Manifest m("sample", o.seed);
  m.input("circuit", l.text);
  m.config("count", a.count);
  m.config("method", a.method);
  m.config("source", a.source);
  m.config("envelope", a.envelope);

  std::optional<StateVector> sv;
  if (a.source == "oracle" || a.method == "exact" || n <= kDefaultOracleQubitCap) sv = simulate(c);
  SampleSet s;
  if (a.method == "uniform") {
    s = sample_uniform(n, a.count, o.seed);
  } else if (a.method == "exact") {
    s = sample_exact(all_probs(*sv), n, a.count, o.seed);
  } else {
    std::vector<int> open = o.open;
    if (open.empty()) {
      for (int q = std::max(0, n - a.batch_qubits); q < n; ++q) open.push_back(q);
    }
    m.config("open", open);
    BatchStream stream;
    if (a.source == "oracle") {
      stream = oracle_batch_stream(*sv, open, o.seed + 1, a.max_batches);
    } else {
      BatchConfig bc;
      bc.run = run_config(o);
      bc.simplify = !o.no_simplify;
      stream = circuit_batch_stream(c, open, bc, o.seed + 1, a.max_batches);
    }
    s = frugal_rejection_sample(stream, n, a.count, o.seed, a.envelope);
  }
  if (sv) {
    const auto probs = all_probs(*sv);
    s.fidelity_estimate =
        xeb(s.bitstrings, [&](const Bitstring& b) { return probs[bitstring_to_index(b)]; }, n).f_xeb;
  }
  std::ostringstream os;
  os << "# manifest " << m.hash() << '\n';
  write_samples(os, s, circuit_hash(c));
  emit(o, m, os.str());
  std::cerr << "sample: " << s.bitstrings.size() << " strings";
  if (s.method == SampleMethod::Frugal) std::cerr << ", acceptance " << s.acceptance_rate;
  if (s.fidelity_estimate) std::cerr << ", f_xeb " << *s.fidelity_estimate;
  std::cerr << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------- validate

struct ValidateArgs {
  bool against_oracle = false;
  bool porter_thomas = false;
  std::string amplitudes;
  std::string samples;
  double tol = 1e-6;
  double abs_tol = 1e-9;
  double alpha = 0.001;
  int bins = 20;
};

int cmd_validate(const Options& o, const ValidateArgs& a) {
  const int modes = static_cast<int>(a.against_oracle) + static_cast<int>(a.porter_thomas) +
                    static_cast<int>(!a.samples.empty());
  if (modes != 1) throw UsageError("choose one of --against-oracle, --porter-thomas, --samples");
  const auto l = load_circuit(o);
  const Circuit& c = l.circuit;
  const auto sv = simulate(c);
  Manifest m("validate", o.seed);
  m.input("circuit", l.text);
  json j;
  j["manifest"] = m.hash();
  bool pass = true;

  if (a.against_oracle) {
    if (a.amplitudes.empty()) throw UsageError("--against-oracle needs --amplitudes (output of run)");
    const auto text = read_file(a.amplitudes);
    m.input("amplitudes", text);
    const auto r = json::parse(text);
    if (!r.value("complete", false)) throw Error("cli", "amplitude file holds an incomplete run");
    const auto bits = bitstring_from_string(r.at("fixed_bits").get<std::string>());
    const auto open = r.at("open").get<std::vector<int>>();
    const auto batch = oracle_batch(sv, bits, open);
    const auto& amps = r.at("amplitudes");
    if (amps.size() != batch.amplitudes.size()) throw Error("cli", "amplitude count does not match the open set");
    double worst = 0.0;
    for (std::size_t x = 0; x < amps.size(); ++x) {
      const std::complex<double> got(amps[x][0].get<double>(), amps[x][1].get<double>());
      const auto want = batch.amplitudes[x];
      const double err = std::abs(got - want);
      const double rel = std::abs(want) > a.abs_tol ? err / std::abs(want) : 0.0;
      if (std::abs(want) <= a.abs_tol && err >= a.abs_tol) pass = false;
      worst = std::max(worst, rel);
    }
    pass = pass && worst < a.tol;
    j["check"] = "against_oracle";
    j["amplitudes"] = amps.size();
    j["max_relative_error"] = worst;
    j["tolerance"] = a.tol;
  } else if (a.porter_thomas) {
    const auto r = porter_thomas_check(all_probs(sv), a.bins);
    pass = r.p_value > a.alpha;
    j["check"] = "porter_thomas";
    j["chi_square"] = r.chi_square;
    j["dof"] = r.dof;
    j["p_value"] = r.p_value;
    j["alpha"] = a.alpha;
    if (!o.out.empty()) {
      Options csv = o;
      std::ostringstream os;
      write_histogram_csv(os, r, m.hash());
      emit(csv, m, os.str());
    }
  } else {
    const auto text = read_file(a.samples);
    m.input("samples", text);
    std::istringstream in(text);
    const auto s = read_samples(in);
    const auto probs = all_probs(sv);
    const auto r = xeb(s.bitstrings, [&](const Bitstring& b) { return probs[bitstring_to_index(b)]; }, c.num_qubits());
    j["check"] = "xeb";
    j["method"] = sample_method_name(s.method);
    j["num_samples"] = r.num_samples;
    j["f_xeb"] = r.f_xeb;
    j["sigma"] = r.sigma;
    // Exact or frugal samples should score near 1, uniform ones near 0.
    const double target = s.method == SampleMethod::Uniform ? 0.0 : 1.0;
    j["target"] = target;
    pass = std::abs(r.f_xeb - target) < 3 * r.sigma;
  }
  j["pass"] = pass;
  std::cout << j.dump(2) << '\n';
  std::cout << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitFailed;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
  std::string kind = "kernel";
  int repeats = 5;
  std::vector<int> worker_counts{1, 2, 4, 8};
  int rows = 4, cols = 4, depth = 8;
  double min_log2_tasks = 8;
};

template <typename F>
double best_seconds(int repeats, F&& f) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

int cmd_bench(const Options& o, const BenchArgs& a) {
  Manifest m("bench", o.seed);
  m.config("kind", a.kind);
  m.config("repeats", a.repeats);
  std::ostringstream os;
  os << "# manifest " << m.hash() << '\n';
  if (a.kind == "kernel") {
    os << "case,fused_seconds,unfused_seconds,ratio\n";
    double tf = 0, tu = 0;
    for (const auto& k : imbalanced_contraction_suite(o.seed + 1)) {
      const double f = best_seconds(a.repeats, [&] { (void)contract_pair_ttgt(k.a, k.b, k.spec); });
      const double u = best_seconds(a.repeats, [&] { (void)contract_pair_unfused(k.a, k.b, k.spec); });
      tf += f;
      tu += u;
      os << k.name << ',' << f << ',' << u << ',' << f / u << '\n';
    }
    os << "total," << tf << ',' << tu << ',' << tf / tu << '\n';
  } else {
    m.config("rows", a.rows);
    m.config("cols", a.cols);
    m.config("depth", a.depth);
    m.config("min_log2_tasks", a.min_log2_tasks);
    m.config("workers", a.worker_counts);
    const Circuit c = generate_rqc(a.rows, a.cols, a.depth, o.seed, CircuitStyle::CZ);
    const auto net = simplify(build_network(c, Bitstring(static_cast<std::size_t>(c.num_qubits()), 0)));
    const auto tree = greedy_path(net);
    const auto plan = general_slicing(net, tree, std::numeric_limits<double>::infinity(), a.min_log2_tasks);
    os << "workers,tasks,wall_seconds,speedup,utilization\n";
    double base = 0;
    for (int w : a.worker_counts) {
      RunConfig cfg;
      cfg.workers = w;
      cfg.precision = parse_precision_mode(o.precision);
      RunResult r;
      const double t = best_seconds(a.repeats, [&] { r = execute(net, tree, plan, cfg); });
      if (base == 0) base = t * a.worker_counts.front();
      const double busy = std::accumulate(r.worker_busy_seconds.begin(), r.worker_busy_seconds.end(), 0.0);
      os << w << ',' << r.tasks_total << ',' << t << ',' << base / t << ',' << busy / (t * w) << '\n';
    }
  }
  emit(o, m, os.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-network simulator for random quantum circuits"};
  app.set_version_flag("--version", RQCSIM_VERSION);
  app.require_subcommand(1);
  Options o;

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a random circuit");
  add_common(gen, o, false);
  gen->add_option("--rows", gen_args.rows)->required()->check(CLI::PositiveNumber);
  gen->add_option("--cols", gen_args.cols)->required()->check(CLI::PositiveNumber);
  gen->add_option("--depth", gen_args.depth)->required()->check(CLI::NonNegativeNumber);
  gen->add_option("--style", gen_args.style)->check(CLI::IsMember({"cz", "fsim"}));
  gen->add_option("--disabled", gen_args.disabled, "Disabled qubits")->delimiter(',');

  auto* stats = app.add_subcommand("stats", "Circuit and network statistics");
  add_common(stats, o, true);

  OptimizeArgs opt_args;
  auto* optimize = app.add_subcommand("optimize", "Search a contraction path and slicing plan");
  add_common(optimize, o, true);
  optimize->add_option("--method", opt_args.method)->check(CLI::IsMember({"greedy", "anneal"}));
  optimize->add_option("--budget", opt_args.budget, "Anneal iterations")->check(CLI::PositiveNumber);
  optimize->add_option("--min-log2-tasks", opt_args.min_log2_tasks);
  optimize->add_option("--density-weight", opt_args.density_weight, "Weight of the compute-density term");

  EstimateArgs est_args;
  auto* estimate = app.add_subcommand("estimate", "Complexity ladder: unoptimized, greedy, annealed, lattice");
  add_common(estimate, o, true);
  estimate->add_option("--rows", est_args.rows);
  estimate->add_option("--cols", est_args.cols);
  estimate->add_option("--depths", est_args.depths)->delimiter(',');
  estimate->add_option("--style", est_args.style)->check(CLI::IsMember({"cz", "fsim"}));
  estimate->add_flag("--lattice-only", est_args.lattice_only, "Only the lattice scheme row");
  estimate->add_option("--worst-of", est_args.worst_of, "Noisy greedy samples for the unoptimized row");
  estimate->add_option("--budget", est_args.budget, "Anneal iterations");

  auto* run = app.add_subcommand("run", "Contract amplitudes");
  add_common(run, o, true);

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Draw bitstrings");
  add_common(sample, o, true);
  sample->add_option("-M,--count", sample_args.count)->check(CLI::NonNegativeNumber);
  sample->add_option("--method", sample_args.method)->check(CLI::IsMember({"frugal", "exact", "uniform"}));
  sample->add_option("--source", sample_args.source, "Amplitudes from tn or oracle")
      ->check(CLI::IsMember({"tn", "oracle"}));
  sample->add_option("--batch-qubits", sample_args.batch_qubits)->check(CLI::Range(0, kMaxOpenQubits));
  sample->add_option("--envelope", sample_args.envelope);
  sample->add_option("--max-batches", sample_args.max_batches);

  ValidateArgs val_args;
  auto* validate = app.add_subcommand("validate", "Check results against the state-vector oracle");
  add_common(validate, o, false);
  validate->add_flag("--against-oracle", val_args.against_oracle);
  validate->add_option("--amplitudes", val_args.amplitudes, "Output of run");
  validate->add_flag("--porter-thomas", val_args.porter_thomas);
  validate->add_option("--samples", val_args.samples, "Samples file for an XEB check");
  validate->add_option("--tol", val_args.tol);
  validate->add_option("--alpha", val_args.alpha);
  validate->add_option("--bins", val_args.bins)->check(CLI::PositiveNumber);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Kernel and scaling measurements as CSV");
  add_common(bench, o, false);
  bench->add_option("--kind", bench_args.kind)->check(CLI::IsMember({"kernel", "scaling"}));
  bench->add_option("--repeats", bench_args.repeats)->check(CLI::PositiveNumber);
  bench->add_option("--worker-counts", bench_args.worker_counts)->delimiter(',');
  bench->add_option("--rows", bench_args.rows);
  bench->add_option("--cols", bench_args.cols);
  bench->add_option("--depth", bench_args.depth);
  bench->add_option("--min-log2-tasks", bench_args.min_log2_tasks);
  bench->add_option("--precision", o.precision)->check(CLI::IsMember({"single", "mixed", "double"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(o, gen_args);
    if (stats->parsed()) return cmd_stats(o);
    if (optimize->parsed()) return cmd_optimize(o, opt_args);
    if (estimate->parsed()) return cmd_estimate(o, est_args);
    if (run->parsed()) return cmd_run(o);
    if (sample->parsed()) return cmd_sample(o, sample_args);
    if (validate->parsed()) return cmd_validate(o, val_args);
    if (bench->parsed()) return cmd_bench(o, bench_args);
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << e.module() << ": " << e.what() << '\n';
    return kExitFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitUsage;
}
