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

#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rqcsim/circuit.hpp"
#include "rqcsim/executor.hpp"
#include "rqcsim/oracle.hpp"

namespace rqcsim {

inline constexpr int kMaxOpenQubits = 12;
inline constexpr double kDefaultEnvelope = 10.0;

/// Amplitudes of every assignment x of the open qubits with the rest fixed.
/// Bit j of x is the value of open_qubits[j].
struct AmplitudeBatch {
  std::vector<int> open_qubits;
  Bitstring fixed_bits;
  std::vector<std::complex<double>> amplitudes;
  std::uint64_t circuit_id = 0;
  std::uint64_t path_id = 0;
  std::uint64_t flops = 0;
  std::int64_t tasks = 1;

  [[nodiscard]] Bitstring bitstring(std::size_t x) const;
};

struct BatchConfig {
  RunConfig run;
  int anneal_budget = 0;          // 0: greedy path
  std::uint64_t path_seed = 0;
  double min_log2_tasks = 0.0;    // extra slicing beyond the memory cap
  double task_fraction = 1.0;     // < 1: fidelity-f mode over a random task subset
  std::uint64_t fraction_seed = 0;
  bool simplify = true;
};

/// Network for amplitudes over `open_qubits` with the other qubits fixed.
/// The result tensor's flat index x has bit j equal to open_qubits[j].
[[nodiscard]] TensorNetwork batch_network(const Circuit& c, const Bitstring& fixed_bits,
                                          const std::vector<int>& open_qubits, bool simplified = true);

struct BatchPlan {
  TensorNetwork net;
  ContractionTree tree;
  SlicingPlan plan;
  CostReport cost;
};

/// Builds the network with the open qubits left open, finds a path and
/// slices it under the run's memory cap.
[[nodiscard]] BatchPlan plan_batch(const Circuit& c, const Bitstring& fixed_bits, const std::vector<int>& open_qubits,
                                   const BatchConfig& config = {});

/// plan_batch followed by execution.
[[nodiscard]] AmplitudeBatch compute_batch(const Circuit& c, const Bitstring& fixed_bits,
                                           const std::vector<int>& open_qubits, const BatchConfig& config = {});

/// Same layout as compute_batch, read from a full state vector.
[[nodiscard]] AmplitudeBatch oracle_batch(const StateVector& sv, const Bitstring& fixed_bits,
                                          const std::vector<int>& open_qubits);

/// Yields batches until exhausted (nullopt).
using BatchStream = std::function<std::optional<AmplitudeBatch>()>;

/// Batches with uniformly random fixed bits on the closed qubits.
[[nodiscard]] BatchStream circuit_batch_stream(const Circuit& c, std::vector<int> open_qubits, BatchConfig config,
                                               std::uint64_t seed, std::int64_t max_batches);
[[nodiscard]] BatchStream oracle_batch_stream(const StateVector& sv, std::vector<int> open_qubits,
                                              std::uint64_t seed, std::int64_t max_batches);

enum class SampleMethod : std::uint8_t { Frugal, Exact, Uniform };

[[nodiscard]] std::string_view sample_method_name(SampleMethod m) noexcept;

struct SampleSet {
  int num_qubits = 0;
  std::vector<Bitstring> bitstrings;
  SampleMethod method = SampleMethod::Frugal;
  std::optional<double> fidelity_estimate;
  std::int64_t candidates = 0;
  double acceptance_rate = 0.0;
};

/// Accepts each candidate s with probability min(1, |a_s|^2 2^n / c),
/// walking the stream's batches in order until M strings are accepted.
[[nodiscard]] SampleSet frugal_rejection_sample(const BatchStream& batches, int num_qubits, std::int64_t M,
                                                std::uint64_t seed, double envelope = kDefaultEnvelope);

[[nodiscard]] SampleSet sample_exact(const std::vector<double>& probs, int num_qubits, std::int64_t M,
                                     std::uint64_t seed);
[[nodiscard]] SampleSet sample_uniform(int num_qubits, std::int64_t M, std::uint64_t seed);

struct XebReport {
  int n = 0;
  std::int64_t num_samples = 0;
  double f_xeb = 0.0;
  double sigma = 0.0;  // 1 / sqrt(num_samples)
};

/// f = 2^n mean p(s) - 1. An empty sample set reports f = 0.
[[nodiscard]] XebReport xeb(const std::vector<Bitstring>& samples, const std::function<double(const Bitstring&)>& prob,
                            int n);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;  // +inf for the last bin
  std::int64_t count = 0;
  double expected = 0.0;
};

struct PorterThomasReport {
  std::vector<HistogramBin> histogram;
  double chi_square = 0.0;
  int dof = 0;
  double p_value = 0.0;
};

/// Histogram of x = 2^n p over `bins` bins of equal mass under e^-x, with a
/// chi-square goodness-of-fit test. Throws unless sum(p) = 1 within 1e-6.
[[nodiscard]] PorterThomasReport porter_thomas_check(const std::vector<double>& probs, int bins = 20);

void write_samples(std::ostream& out, const SampleSet& s, std::uint64_t circuit_id);
[[nodiscard]] SampleSet read_samples(std::istream& in);
void write_histogram_csv(std::ostream& out, const PorterThomasReport& r, const std::string& manifest = {});

}  // namespace rqcsim
