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

#include "rqcsim/sampling.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace rqcsim {

namespace {

void check_open(int n, const Bitstring& fixed, const std::vector<int>& open) {
  if (static_cast<int>(fixed.size()) != n) {
    throw Error("sampling", "fixed bitstring has " + std::to_string(fixed.size()) + " bits, circuit has " +
                                std::to_string(n) + " qubits");
  }
  if (static_cast<int>(open.size()) > kMaxOpenQubits) {
    throw Error("sampling", "at most " + std::to_string(kMaxOpenQubits) + " open qubits");
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int q : open) {
    if (q < 0 || q >= n) throw Error("sampling", "open qubit " + std::to_string(q) + " out of range");
    if (seen[static_cast<std::size_t>(q)]++) throw Error("sampling", "open qubit " + std::to_string(q) + " repeated");
  }
}

Bitstring random_fixed(int n, std::mt19937_64& rng) {
  Bitstring b(static_cast<std::size_t>(n));
  for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1U);
  return b;
}

}  // namespace

Bitstring AmplitudeBatch::bitstring(std::size_t x) const {
  Bitstring b = fixed_bits;
  for (std::size_t j = 0; j < open_qubits.size(); ++j) {
    b[static_cast<std::size_t>(open_qubits[j])] = static_cast<std::uint8_t>((x >> j) & 1U);
  }
  return b;
}

TensorNetwork batch_network(const Circuit& c, const Bitstring& fixed_bits, const std::vector<int>& open_qubits,
                            bool simplified) {
  check_open(c.num_qubits(), fixed_bits, open_qubits);
  // The tensor's first open index is its slowest digit; listing the open
  // qubits in reverse makes the flat index equal x.
  std::vector<int> reversed(open_qubits.rbegin(), open_qubits.rend());
  auto net = build_network(c, fixed_bits, reversed);
  return simplified ? simplify(net) : net;
}

BatchPlan plan_batch(const Circuit& c, const Bitstring& fixed_bits, const std::vector<int>& open_qubits,
                     const BatchConfig& config) {
  BatchPlan bp;
  bp.net = batch_network(c, fixed_bits, open_qubits, config.simplify);
  if (config.anneal_budget > 0) {
    AnnealOptions ao;
    ao.log2_mem_cap = config.run.memory_cap_log2;
    bp.tree = anneal_path(bp.net, config.anneal_budget, {}, config.path_seed, ao).tree;
  } else {
    bp.tree = greedy_path(bp.net, {config.path_seed, 0.0});
  }
  if (config.run.memory_cap_log2 || config.min_log2_tasks > 0) {
    bp.plan = general_slicing(bp.net, bp.tree,
                              config.run.memory_cap_log2.value_or(std::numeric_limits<double>::infinity()),
                              config.min_log2_tasks);
  }
  bp.cost = evaluate_cost(bp.net, bp.tree, bp.plan.sliced);
  return bp;
}

AmplitudeBatch compute_batch(const Circuit& c, const Bitstring& fixed_bits, const std::vector<int>& open_qubits,
                             const BatchConfig& config) {
  if (!(config.task_fraction > 0.0 && config.task_fraction <= 1.0)) {
    throw Error("sampling", "task fraction must lie in (0, 1]");
  }
  const BatchPlan bp = plan_batch(c, fixed_bits, open_qubits, config);
  RunConfig run = config.run;
  const auto total = num_tasks(bp.plan);
  if (config.task_fraction < 1.0) {
    const auto count = std::max<std::int64_t>(1, std::llround(config.task_fraction * static_cast<double>(total)));
    run.task_subset = random_task_subset(total, count, config.fraction_seed);
  }
  const auto r = execute(bp.net, bp.tree, bp.plan, run);
  AmplitudeBatch b;
  b.open_qubits = open_qubits;
  b.fixed_bits = fixed_bits;
  for (int q : open_qubits) b.fixed_bits[static_cast<std::size_t>(q)] = 0;
  b.amplitudes.assign(r.amplitudes.data().begin(), r.amplitudes.data().end());
  b.circuit_id = circuit_hash(c);
  b.path_id = plan_hash(bp.net, bp.tree, bp.plan);
  b.flops = r.flops;
  b.tasks = total;
  return b;
}

AmplitudeBatch oracle_batch(const StateVector& sv, const Bitstring& fixed_bits, const std::vector<int>& open_qubits) {
  check_open(sv.num_qubits, fixed_bits, open_qubits);
  AmplitudeBatch b;
  b.open_qubits = open_qubits;
  b.fixed_bits = fixed_bits;
  for (int q : open_qubits) b.fixed_bits[static_cast<std::size_t>(q)] = 0;
  const std::size_t k = std::size_t{1} << open_qubits.size();
  b.amplitudes.resize(k);
  for (std::size_t x = 0; x < k; ++x) b.amplitudes[x] = amplitude(sv, b.bitstring(x));
  return b;
}

BatchStream circuit_batch_stream(const Circuit& c, std::vector<int> open_qubits, BatchConfig config,
                                 std::uint64_t seed, std::int64_t max_batches) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  auto left = std::make_shared<std::int64_t>(max_batches);
  return [c, open = std::move(open_qubits), config = std::move(config), rng, left]() -> std::optional<AmplitudeBatch> {
    if (*left <= 0) return std::nullopt;
    --*left;
    return compute_batch(c, random_fixed(c.num_qubits(), *rng), open, config);
  };
}

BatchStream oracle_batch_stream(const StateVector& sv, std::vector<int> open_qubits, std::uint64_t seed,
                                std::int64_t max_batches) {
  auto state = std::make_shared<const StateVector>(sv);
  auto rng = std::make_shared<std::mt19937_64>(seed);
  auto left = std::make_shared<std::int64_t>(max_batches);
  return [state, open = std::move(open_qubits), rng, left]() -> std::optional<AmplitudeBatch> {
    if (*left <= 0) return std::nullopt;
    --*left;
    return oracle_batch(*state, random_fixed(state->num_qubits, *rng), open);
  };
}

std::string_view sample_method_name(SampleMethod m) noexcept {
  switch (m) {
    case SampleMethod::Frugal: return "frugal";
    case SampleMethod::Exact: return "exact";
    case SampleMethod::Uniform: return "uniform";
  }
  return "?";
}

SampleSet frugal_rejection_sample(const BatchStream& batches, int num_qubits, std::int64_t M, std::uint64_t seed,
                                  double envelope) {
  if (M < 0) throw Error("sampling", "sample count must be >= 0");
  if (!(envelope > 0)) throw Error("sampling", "envelope constant must be positive");
  SampleSet out;
  out.num_qubits = num_qubits;
  out.method = SampleMethod::Frugal;
  if (M == 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double scale = std::exp2(num_qubits) / envelope;
  while (static_cast<std::int64_t>(out.bitstrings.size()) < M) {
    auto batch = batches();
    if (!batch) {
      throw Error("sampling", "amplitude stream exhausted after " + std::to_string(out.candidates) +
                                  " candidates with " + std::to_string(out.bitstrings.size()) + " of " +
                                  std::to_string(M) + " samples accepted");
    }
    if (static_cast<int>(batch->fixed_bits.size()) != num_qubits) {
      throw Error("sampling", "batch qubit count does not match");
    }
    for (std::size_t x = 0; x < batch->amplitudes.size() && static_cast<std::int64_t>(out.bitstrings.size()) < M;
         ++x) {
      ++out.candidates;
      if (u(rng) < std::norm(batch->amplitudes[x]) * scale) out.bitstrings.push_back(batch->bitstring(x));
    }
  }
  out.acceptance_rate = static_cast<double>(out.bitstrings.size()) / static_cast<double>(out.candidates);
  return out;
}

SampleSet sample_exact(const std::vector<double>& probs, int num_qubits, std::int64_t M, std::uint64_t seed) {
  if (probs.size() != (std::size_t{1} << num_qubits)) throw Error("sampling", "probability vector has wrong length");
  SampleSet out;
  out.num_qubits = num_qubits;
  out.method = SampleMethod::Exact;
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::uint64_t> dist(probs.begin(), probs.end());
  for (std::int64_t i = 0; i < M; ++i) out.bitstrings.push_back(index_to_bitstring(dist(rng), num_qubits));
  out.candidates = M;
  out.acceptance_rate = 1.0;
  return out;
}

SampleSet sample_uniform(int num_qubits, std::int64_t M, std::uint64_t seed) {
  SampleSet out;
  out.num_qubits = num_qubits;
  out.method = SampleMethod::Uniform;
  std::mt19937_64 rng(seed);
  for (std::int64_t i = 0; i < M; ++i) out.bitstrings.push_back(random_fixed(num_qubits, rng));
  out.candidates = M;
  out.acceptance_rate = 1.0;
  return out;
}

XebReport xeb(const std::vector<Bitstring>& samples, const std::function<double(const Bitstring&)>& prob, int n) {
  XebReport r;
  r.n = n;
  r.num_samples = static_cast<std::int64_t>(samples.size());
  if (samples.empty()) return r;
  double sum = 0;
  for (const auto& s : samples) sum += prob(s);
  r.f_xeb = std::exp2(n) * sum / static_cast<double>(samples.size()) - 1.0;
  r.sigma = 1.0 / std::sqrt(static_cast<double>(samples.size()));
  return r;
}

PorterThomasReport porter_thomas_check(const std::vector<double>& probs, int bins) {
  if (probs.empty() || (probs.size() & (probs.size() - 1)) != 0) {
    throw Error("sampling", "probability vector length must be a power of two");
  }
  if (bins < 2) throw Error("sampling", "need at least two bins");
  double total = 0;
  for (double p : probs) total += p;
  if (std::abs(total - 1.0) > 1e-6) {
    throw Error("sampling", "probabilities sum to " + std::to_string(total) + ", not 1");
  }
  const double N = static_cast<double>(probs.size());
  PorterThomasReport r;
  std::vector<double> edges;
  for (int i = 0; i <= bins; ++i) {
    edges.push_back(i == bins ? std::numeric_limits<double>::infinity()
                              : -std::log1p(-static_cast<double>(i) / bins));
  }
  r.histogram.resize(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) {
    auto& b = r.histogram[static_cast<std::size_t>(i)];
    b.lo = edges[static_cast<std::size_t>(i)];
    b.hi = edges[static_cast<std::size_t>(i) + 1];
    b.expected = N / bins;
  }
  for (double p : probs) {
    const double x = N * p;
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const auto i = std::clamp<std::ptrdiff_t>(it - edges.begin() - 1, 0, bins - 1);
    ++r.histogram[static_cast<std::size_t>(i)].count;
  }
  for (const auto& b : r.histogram) {
    const double d = static_cast<double>(b.count) - b.expected;
    r.chi_square += d * d / b.expected;
  }
  r.dof = bins - 1;
  r.p_value = boost::math::gamma_q(r.dof / 2.0, r.chi_square / 2.0);
  return r;
}

void write_samples(std::ostream& out, const SampleSet& s, std::uint64_t circuit_id) {
  out << "# circuit " << hex64(circuit_id) << " method " << sample_method_name(s.method) << " n " << s.num_qubits
      << " samples " << s.bitstrings.size();
  if (s.fidelity_estimate) out << " f_xeb " << *s.fidelity_estimate;
  out << '\n';
  for (const auto& b : s.bitstrings) out << to_string(b) << '\n';
}

SampleSet read_samples(std::istream& in) {
  SampleSet s;
  std::string line;
  bool have_n = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      while (hs >> key) {
        std::string value;
        if (!(hs >> value)) break;
        if (key == "n") {
          s.num_qubits = std::stoi(value);
          have_n = true;
        } else if (key == "method") {
          s.method = value == "exact" ? SampleMethod::Exact
                                      : value == "uniform" ? SampleMethod::Uniform : SampleMethod::Frugal;
        } else if (key == "f_xeb") {
          s.fidelity_estimate = std::stod(value);
        }
      }
      continue;
    }
    auto b = bitstring_from_string(line);
    if (!have_n) {
      s.num_qubits = static_cast<int>(b.size());
      have_n = true;
    }
    if (static_cast<int>(b.size()) != s.num_qubits) {
      throw Error("sampling", "sample '" + line + "' has " + std::to_string(b.size()) + " bits, expected " +
                                  std::to_string(s.num_qubits));
    }
    s.bitstrings.push_back(std::move(b));
  }
  return s;
}

void write_histogram_csv(std::ostream& out, const PorterThomasReport& r, const std::string& manifest) {
  if (!manifest.empty()) out << "# manifest " << manifest << '\n';
  out << "bin_lo,bin_hi,count,expected\n";
  for (const auto& b : r.histogram) out << b.lo << ',' << b.hi << ',' << b.count << ',' << b.expected << '\n';
}

}  // namespace rqcsim
