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
#include <vector>

#include "rqcsim/pathopt.hpp"
#include "rqcsim/precision.hpp"
#include "rqcsim/tensornet.hpp"

namespace rqcsim {

/// Single and Mixed contract in float; Mixed also stores intermediates above
/// the first `mixed_single_levels` tree levels in binary16 with adaptive
/// scaling. Double contracts in double throughout.
enum class PrecisionMode : std::uint8_t { Single, Mixed, Double };

[[nodiscard]] std::string_view precision_mode_name(PrecisionMode m) noexcept;
[[nodiscard]] PrecisionMode parse_precision_mode(std::string_view s);

struct SliceTask {
  std::int64_t ordinal = 0;
  IndexPins assignment;  // one entry per sliced index, plan order
};

/// Mixed-radix decoding with the first sliced index most significant.
[[nodiscard]] SliceTask task_at(const SlicingPlan& plan, std::int64_t ordinal);
[[nodiscard]] std::int64_t num_tasks(const SlicingPlan& plan);
[[nodiscard]] std::vector<SliceTask> enumerate_tasks(const SlicingPlan& plan);

struct RunConfig {
  int workers = 1;
  PrecisionMode precision = PrecisionMode::Single;
  bool deterministic_reduce = true;
  std::optional<double> memory_cap_log2;  // elements per intermediate
  std::string checkpoint_path;            // empty: no checkpointing
  int mixed_single_levels = 2;
  std::int64_t stop_after = -1;  // stop once this many new tasks finish (-1: run all)
  bool collect_paths = false;    // Mixed: also run each task in Single as a reference
  /// Run only these ordinals and rescale the sum by tasks/|subset| (the
  /// fraction-of-paths fidelity model). Empty: every task.
  std::vector<std::int64_t> task_subset;
};

/// `count` distinct ordinals out of `total`, ascending, chosen by `seed`.
[[nodiscard]] std::vector<std::int64_t> random_task_subset(std::int64_t total, std::int64_t count, std::uint64_t seed);

/// Result of one slice task. `tensor` holds logical values (scale applied)
/// over the network's open indices.
struct PartialSum {
  std::int64_t ordinal = 0;
  TensorD tensor;
  int scale_exp = 0;  // exponent the task finished with (Mixed)
  HalfFlags flags;
  std::uint64_t flops = 0;
  std::uint64_t group_flops = 0;
  ContractStats stats;
  std::optional<std::complex<double>> reference;  // collect_paths
};

[[nodiscard]] PartialSum run_slice(const TensorNetwork& net, const ContractionTree& tree, const SliceTask& task,
                                   const RunConfig& config);

struct RunResult {
  TensorD amplitudes;  // over open_indices(); empty when incomplete
  bool complete = false;
  std::int64_t tasks_total = 0;
  std::int64_t tasks_run = 0;      // this call
  std::int64_t tasks_resumed = 0;  // loaded from a checkpoint
  std::uint64_t flops = 0;         // contraction steps, all finished tasks
  std::uint64_t group_flops = 0;   // building grouped site tensors
  double wall_seconds = 0.0;
  double discarded_fraction = 0.0;
  std::int64_t peak_elements = 0;
  int max_rank = 0;
  std::vector<double> worker_busy_seconds;
  /// Per-task mixed values and Single references in ordinal order
  /// (Mixed + collect_paths, scalar networks only).
  std::vector<PathResult> paths;
  std::vector<std::complex<double>> path_references;
};

/// Runs every task of the plan over a pool of `workers` threads. With
/// deterministic_reduce the partials are summed pairwise in ordinal order,
/// so the result does not depend on scheduling or worker count.
[[nodiscard]] RunResult execute(const TensorNetwork& net, const ContractionTree& tree, const SlicingPlan& plan,
                                const RunConfig& config);

/// Hash of the network structure, tree and slicing plan (checkpoint header).
[[nodiscard]] std::uint64_t plan_hash(const TensorNetwork& net, const ContractionTree& tree, const SlicingPlan& plan);

/// JSON run report: flops, wall time, tasks, discarded fraction, utilisation.
[[nodiscard]] std::string run_report_json(const RunResult& r, const RunConfig& config, std::uint64_t analytic_flops);

}  // namespace rqcsim
