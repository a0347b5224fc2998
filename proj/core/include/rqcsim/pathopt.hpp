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

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rqcsim/tensornet.hpp"

namespace rqcsim {

/// Binary contraction order in SSA form: leaves are node ids 0..n-1 and
/// step i creates id n+i from two live ids.
struct ContractionTree {
  int num_leaves = 0;
  std::vector<std::pair<int, int>> steps;

  [[nodiscard]] bool complete() const noexcept {
    return num_leaves > 0 && static_cast<int>(steps.size()) == num_leaves - 1;
  }
  friend bool operator==(const ContractionTree&, const ContractionTree&) = default;
};

/// Throws Error("pathopt", ...) unless every leaf is consumed exactly once.
void validate_tree(const ContractionTree& tree);

struct StepCost {
  std::vector<std::int64_t> a_shape;
  std::vector<std::int64_t> b_shape;
  std::vector<std::int64_t> out_shape;
  double flops = 0.0;  // per task
  double log2_flops = 0.0;
  double density = 0.0;  // flops / (|A| + |B| + |C|)
  int height = 0;
};

/// Cost of contracting `net` along a tree with some indices sliced. Shapes,
/// ranks and per-step numbers describe one slice task; log2_flops covers all
/// tasks together.
struct CostReport {
  double log2_flops = 0.0;
  double log2_flops_per_task = 0.0;
  double flops_per_task = 0.0;
  std::uint64_t exact_flops_per_task = 0;  // valid when `exact`
  bool exact = true;
  double num_tasks = 1.0;
  int max_rank = 0;
  double log2_max_intermediate = 0.0;  // elements, leaves included
  double compute_density = 0.0;
  std::vector<StepCost> per_step;
};

[[nodiscard]] CostReport evaluate_cost(const TensorNetwork& net, const ContractionTree& tree,
                                       const std::vector<IndexId>& sliced = {});

struct SlicingPlan {
  std::vector<IndexId> sliced;
  std::vector<std::int64_t> dims;
  double overhead = 1.0;  // sliced total flops / unsliced flops
  // Lattice scheme symbols; -1 when the plan did not come from it.
  int N = -1, b = -1, S = -1, d = -1;
  std::int64_t L = -1;

  [[nodiscard]] double num_tasks() const;
};

struct LatticeParams {
  int N = 0, d = 0, b = 0, S = 0, rank_cap = 0;
  std::int64_t L = 0;
};

/// b = 1 for odd N else 2, S = 3(N-b)/2, L = 2^ceil(d/8), rank cap N+b.
[[nodiscard]] LatticeParams lattice_slicing_params(int N, int d);

/// Corner-first schedule over the site network of a 2N x 2N lattice (see
/// coarsen_to_sites). The plan slices the S bonds crossing the vertical
/// centre line in the top S rows.
[[nodiscard]] std::pair<ContractionTree, SlicingPlan> lattice_contraction_tree(const TensorNetwork& coarse,
                                                                               const LatticeParams& params);

struct GreedyOptions {
  std::uint64_t seed = 0;
  double temperature = 0.0;  // 0 = deterministic
};

/// Repeatedly contracts the connected pair minimising
/// size(out) - size(a) - size(b); ties go to the lowest id pair.
[[nodiscard]] ContractionTree greedy_path(const TensorNetwork& net, const GreedyOptions& options = {});

struct LossWeights {
  double w_complexity = 1.0;
  double w_density = 0.0;
  double density_target = 1.0;
};

/// w_c * log2_flops + w_d * sum_steps max(0, target - density) * flop share.
[[nodiscard]] double loss(const CostReport& report, const LossWeights& weights);

/// Slices the best index of the largest intermediate until it fits the cap,
/// then keeps slicing the cheapest closed index until there are at least
/// 2^min_log2_tasks tasks (or nothing is left to slice).
[[nodiscard]] SlicingPlan general_slicing(const TensorNetwork& net, const ContractionTree& tree, double log2_mem_cap,
                                          double min_log2_tasks = 0.0);

struct AnnealResult {
  ContractionTree tree;
  SlicingPlan plan;
  CostReport report;
  double loss = 0.0;
  double greedy_loss = 0.0;
  int accepted_moves = 0;
};

struct AnnealOptions {
  std::optional<double> log2_mem_cap;  // slicing applied when set
  int max_subtree_parts = 8;
};

/// Local search from the greedy tree over subtree reroots and leaf-pair
/// swaps, scored by loss(). A move is kept only when it strictly lowers the
/// loss; after a run of fruitless moves the search restarts from a noisy
/// greedy tree. Returns the best tree seen.
[[nodiscard]] AnnealResult anneal_path(const TensorNetwork& net, int budget_iters, const LossWeights& weights,
                                       std::uint64_t seed, const AnnealOptions& options = {});

/// {"num_leaves", "steps": [[left, right, new], ...], "sliced": [...], "sliced_dims": [...]}
[[nodiscard]] std::string path_to_json(const ContractionTree& tree, const SlicingPlan& plan);
[[nodiscard]] std::pair<ContractionTree, SlicingPlan> path_from_json(const std::string& text,
                                                                     const TensorNetwork& net);

}  // namespace rqcsim
