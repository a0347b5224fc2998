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

#include "rqcsim/executor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace rqcsim {

namespace {

constexpr const char* kCheckpointMagic = "RQCSIM-CHECKPOINT";
constexpr int kCheckpointVersion = 1;

std::uint64_t config_hash(const RunConfig& c) {
  Fnv1a h;
  h.update_value(static_cast<std::uint8_t>(c.precision));
  h.update_value(c.mixed_single_levels);
  h.update_value(static_cast<std::uint8_t>(c.collect_paths));
  return h.digest();
}

template <typename Real>
TensorD widen(const Tensor<Real>& t) {
  TensorD out(t.indices(), t.dims());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto v = t.logical(i);
    out.data()[i] = {static_cast<double>(v.real()), static_cast<double>(v.imag())};
  }
  return out;
}

template <typename Real>
PartialSum contract_task(const TensorNetwork& net, const ContractionTree& tree, const SliceTask& task,
                         const RunConfig& config, bool mixed) {
  PartialSum p;
  p.ordinal = task.ordinal;
  FlopCounter flops, group_flops;
  ContractOptions<Real> opt;
  opt.pins = task.assignment;
  opt.flops = &flops;
  opt.group_flops = &group_flops;
  opt.stats = &p.stats;
  if (config.memory_cap_log2) opt.max_elements = static_cast<std::int64_t>(std::floor(std::exp2(*config.memory_cap_log2)));
  if constexpr (std::is_same_v<Real, float>) {
    if (mixed) {
      opt.after_step = [&](Tensor<float>& t, std::size_t, int height) {
        if (height <= config.mixed_single_levels) return;
        auto [half, f] = round_to_half(adaptive_scale(t));
        p.flags |= f;
        t = std::move(half);
      };
    }
  }
  const auto t = contract_network<Real>(net, tree.steps, opt);
  p.scale_exp = t.scale_exp();
  p.tensor = widen(t);
  p.flops = flops.total();
  p.group_flops = group_flops.total();
  return p;
}

TensorD add(const TensorD& a, const TensorD& b) {
  TensorD out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

// Pairwise sum over slots[ids[lo..hi)].
TensorD pairwise(const std::vector<std::optional<PartialSum>>& slots, const std::vector<std::int64_t>& ids,
                 std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return slots[static_cast<std::size_t>(ids[lo])]->tensor;
  const std::size_t mid = lo + (hi - lo) / 2;
  return add(pairwise(slots, ids, lo, mid), pairwise(slots, ids, mid, hi));
}

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("executor", "checkpoint file is truncated");
  return v;
}

std::string checkpoint_header(std::uint64_t ph, std::uint64_t ch, std::int64_t tasks) {
  std::ostringstream os;
  os << kCheckpointMagic << ' ' << kCheckpointVersion << " plan=" << hex64(ph) << " config=" << hex64(ch)
     << " tasks=" << tasks << '\n';
  return os.str();
}

void write_checkpoint(const std::string& path, const std::string& header,
                      const std::vector<std::optional<PartialSum>>& slots) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("executor", "cannot write checkpoint " + tmp);
    os << header;
    std::vector<std::uint8_t> bitmap((slots.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (slots[i]) bitmap[i / 8] |= static_cast<std::uint8_t>(1U << (i % 8));
    }
    os.write(reinterpret_cast<const char*>(bitmap.data()), static_cast<std::streamsize>(bitmap.size()));
    for (const auto& s : slots) {
      if (!s) continue;
      put(os, s->ordinal);
      put(os, static_cast<std::int32_t>(s->scale_exp));
      put(os, static_cast<std::uint8_t>((s->flags.underflow_hit ? 1 : 0) | (s->flags.overflow_hit ? 2 : 0)));
      put(os, s->flops);
      put(os, s->group_flops);
      put(os, s->stats.peak_elements);
      put(os, static_cast<std::int32_t>(s->stats.max_rank));
      put(os, static_cast<std::uint8_t>(s->reference ? 1 : 0));
      const auto ref = s->reference.value_or(std::complex<double>{});
      put(os, ref);
      put(os, static_cast<std::uint64_t>(s->tensor.size()));
      os.write(reinterpret_cast<const char*>(s->tensor.data().data()),
               static_cast<std::streamsize>(s->tensor.size() * sizeof(std::complex<double>)));
    }
    if (!os) throw Error("executor", "failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::int64_t load_checkpoint(const std::string& path, const std::string& header, const TensorNetwork& net,
                             std::vector<std::optional<PartialSum>>& slots) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return 0;
  std::string line;
  std::getline(is, line);
  std::istringstream hs(line);
  std::string magic;
  int version = 0;
  hs >> magic >> version;
  if (magic != kCheckpointMagic) throw Error("executor", "not a checkpoint file: " + path);
  if (version != kCheckpointVersion) {
    throw Error("executor", "checkpoint version " + std::to_string(version) + " differs from " +
                                std::to_string(kCheckpointVersion));
  }
  if (line + '\n' != header) {
    throw Error("executor", "checkpoint plan/config hash mismatch: file has '" + line + "', run expects '" +
                                header.substr(0, header.size() - 1) + "'");
  }
  std::vector<std::uint8_t> bitmap((slots.size() + 7) / 8, 0);
  is.read(reinterpret_cast<char*>(bitmap.data()), static_cast<std::streamsize>(bitmap.size()));
  if (!is) throw Error("executor", "checkpoint file is truncated");
  std::int64_t loaded = 0;
  const auto dims = net.dims_of(net.open_indices());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!(bitmap[i / 8] >> (i % 8) & 1U)) continue;
    PartialSum p;
    p.ordinal = get<std::int64_t>(is);
    if (p.ordinal != static_cast<std::int64_t>(i)) throw Error("executor", "checkpoint records out of order");
    p.scale_exp = get<std::int32_t>(is);
    const auto f = get<std::uint8_t>(is);
    p.flags.underflow_hit = (f & 1U) != 0;
    p.flags.overflow_hit = (f & 2U) != 0;
    p.flops = get<std::uint64_t>(is);
    p.group_flops = get<std::uint64_t>(is);
    p.stats.peak_elements = get<std::int64_t>(is);
    p.stats.max_rank = get<std::int32_t>(is);
    const bool has_ref = get<std::uint8_t>(is) != 0;
    const auto ref = get<std::complex<double>>(is);
    if (has_ref) p.reference = ref;
    const auto n = get<std::uint64_t>(is);
    p.tensor = TensorD(net.open_indices(), dims);
    if (n != p.tensor.size()) throw Error("executor", "checkpoint tensor has the wrong size");
    is.read(reinterpret_cast<char*>(p.tensor.data().data()),
            static_cast<std::streamsize>(n * sizeof(std::complex<double>)));
    if (!is) throw Error("executor", "checkpoint file is truncated");
    slots[i] = std::move(p);
    ++loaded;
  }
  return loaded;
}

}  // namespace

std::string_view precision_mode_name(PrecisionMode m) noexcept {
  switch (m) {
    case PrecisionMode::Single: return "single";
    case PrecisionMode::Mixed: return "mixed";
    case PrecisionMode::Double: return "double";
  }
  return "?";
}

PrecisionMode parse_precision_mode(std::string_view s) {
  if (s == "single") return PrecisionMode::Single;
  if (s == "mixed") return PrecisionMode::Mixed;
  if (s == "double") return PrecisionMode::Double;
  throw Error("executor", "unknown precision mode '" + std::string(s) + "' (single, mixed, double)");
}

std::int64_t num_tasks(const SlicingPlan& plan) {
  std::int64_t n = 1;
  for (auto d : plan.dims) {
    if (d < 1) throw Error("executor", "sliced index with dim < 1");
    if (__builtin_mul_overflow(n, d, &n)) throw Error("executor", "task count overflows 64 bits");
  }
  return n;
}

SliceTask task_at(const SlicingPlan& plan, std::int64_t ordinal) {
  if (plan.sliced.size() != plan.dims.size()) throw Error("executor", "plan dims do not match sliced indices");
  if (ordinal < 0 || ordinal >= num_tasks(plan)) throw Error("executor", "task ordinal out of range");
  SliceTask t;
  t.ordinal = ordinal;
  t.assignment.resize(plan.sliced.size());
  std::int64_t rest = ordinal;
  for (std::size_t i = plan.sliced.size(); i-- > 0;) {
    t.assignment[i] = {plan.sliced[i], rest % plan.dims[i]};
    rest /= plan.dims[i];
  }
  return t;
}

std::vector<SliceTask> enumerate_tasks(const SlicingPlan& plan) {
  const auto n = num_tasks(plan);
  std::vector<SliceTask> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out.push_back(task_at(plan, i));
  return out;
}

PartialSum run_slice(const TensorNetwork& net, const ContractionTree& tree, const SliceTask& task,
                     const RunConfig& config) {
  switch (config.precision) {
    case PrecisionMode::Double: return contract_task<double>(net, tree, task, config, false);
    case PrecisionMode::Single: return contract_task<float>(net, tree, task, config, false);
    case PrecisionMode::Mixed: {
      auto p = contract_task<float>(net, tree, task, config, true);
      if (config.collect_paths) {
        const auto ref = contract_task<float>(net, tree, task, config, false);
        if (ref.tensor.size() != 1) throw Error("executor", "path collection needs a scalar network");
        p.reference = ref.tensor.data()[0];
      }
      return p;
    }
  }
  throw Error("executor", "unknown precision mode");
}

std::vector<std::int64_t> random_task_subset(std::int64_t total, std::int64_t count, std::uint64_t seed) {
  if (count < 1 || count > total) throw Error("executor", "task subset size must lie in [1, tasks]");
  std::vector<std::int64_t> all(static_cast<std::size_t>(total));
  std::iota(all.begin(), all.end(), std::int64_t{0});
  std::mt19937_64 rng(seed);
  std::vector<std::int64_t> pick;
  std::sample(all.begin(), all.end(), std::back_inserter(pick), count, rng);
  return pick;
}

std::uint64_t plan_hash(const TensorNetwork& net, const ContractionTree& tree, const SlicingPlan& plan) {
  Fnv1a h;
  h.update_value(static_cast<std::uint64_t>(net.num_nodes()));
  for (const auto& n : net.nodes()) {
    h.update_value(static_cast<std::uint64_t>(n.indices.size()));
    for (auto id : n.indices) {
      h.update_value(to_int(id));
      h.update_value(net.dim(id));
    }
  }
  for (auto id : net.open_indices()) h.update_value(to_int(id));
  h.update_value(tree.num_leaves);
  for (const auto& [a, b] : tree.steps) {
    h.update_value(a);
    h.update_value(b);
  }
  for (std::size_t i = 0; i < plan.sliced.size(); ++i) {
    h.update_value(to_int(plan.sliced[i]));
    h.update_value(plan.dims[i]);
  }
  return h.digest();
}

RunResult execute(const TensorNetwork& net, const ContractionTree& tree, const SlicingPlan& plan,
                  const RunConfig& config) {
  if (config.workers < 1) throw Error("executor", "workers must be >= 1");
  if (static_cast<int>(net.num_nodes()) != tree.num_leaves) {
    throw Error("executor", "tree does not match the network");
  }
  validate_tree(tree);
  if (config.collect_paths && !net.open_indices().empty()) {
    throw Error("executor", "path collection needs a scalar network");
  }
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  r.tasks_total = num_tasks(plan);
  std::vector<std::optional<PartialSum>> slots(static_cast<std::size_t>(r.tasks_total));
  const std::string header = checkpoint_header(plan_hash(net, tree, plan), config_hash(config), r.tasks_total);
  if (!config.checkpoint_path.empty()) r.tasks_resumed = load_checkpoint(config.checkpoint_path, header, net, slots);

  std::vector<std::int64_t> wanted = config.task_subset;
  if (wanted.empty()) {
    wanted.resize(static_cast<std::size_t>(r.tasks_total));
    std::iota(wanted.begin(), wanted.end(), std::int64_t{0});
  } else {
    std::sort(wanted.begin(), wanted.end());
    if (std::adjacent_find(wanted.begin(), wanted.end()) != wanted.end() || wanted.front() < 0 ||
        wanted.back() >= r.tasks_total) {
      throw Error("executor", "task subset must hold distinct ordinals below " + std::to_string(r.tasks_total));
    }
  }
  std::vector<std::int64_t> pending;
  for (auto i : wanted) {
    if (!slots[static_cast<std::size_t>(i)]) pending.push_back(i);
  }
  const std::int64_t to_run = config.stop_after >= 0 ? std::min<std::int64_t>(config.stop_after,
                                                                               static_cast<std::int64_t>(pending.size()))
                                                     : static_cast<std::int64_t>(pending.size());
  const std::int64_t snapshot_every = std::max<std::int64_t>(1, r.tasks_total / 64);

  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::int64_t> completion_order;
  std::int64_t finished = 0;
  const int nworkers = static_cast<int>(std::min<std::int64_t>(config.workers, std::max<std::int64_t>(1, to_run)));
  r.worker_busy_seconds.assign(static_cast<std::size_t>(config.workers), 0.0);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < nworkers; ++w) {
      pool.emplace_back([&, w] {
        for (;;) {
          if (failed.load()) return;
          const std::int64_t k = next.fetch_add(1);
          if (k >= to_run) return;
          const auto ordinal = pending[static_cast<std::size_t>(k)];
          try {
            const auto t0 = std::chrono::steady_clock::now();
            auto p = run_slice(net, tree, task_at(plan, ordinal), config);
            r.worker_busy_seconds[static_cast<std::size_t>(w)] +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::lock_guard lock(mu);
            slots[static_cast<std::size_t>(ordinal)] = std::move(p);
            completion_order.push_back(ordinal);
            ++finished;
            if (!config.checkpoint_path.empty() && (finished % snapshot_every == 0 || finished == to_run)) {
              write_checkpoint(config.checkpoint_path, header, slots);
            }
          } catch (...) {
            std::lock_guard lock(mu);
            if (!error) error = std::current_exception();
            failed = true;
            return;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  r.tasks_run = finished;

  std::vector<std::int64_t> done;
  std::int64_t flagged = 0;
  for (auto o : wanted) {
    const auto& s = slots[static_cast<std::size_t>(o)];
    if (!s) continue;
    done.push_back(s->ordinal);
    r.flops += s->flops;
    r.group_flops += s->group_flops;
    r.peak_elements = std::max(r.peak_elements, s->stats.peak_elements);
    r.max_rank = std::max(r.max_rank, s->stats.max_rank);
    if (s->flags.any()) ++flagged;
    if (config.collect_paths && config.precision == PrecisionMode::Mixed) {
      const double v0 = s->tensor.data()[0].real() * std::exp2(-s->scale_exp);
      const double v1 = s->tensor.data()[0].imag() * std::exp2(-s->scale_exp);
      r.paths.push_back({{static_cast<float>(v0), static_cast<float>(v1)}, s->scale_exp, s->flags});
      r.path_references.push_back(s->reference.value_or(std::complex<double>{}));
    }
  }
  r.complete = done.size() == wanted.size();
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!r.complete) return r;

  r.discarded_fraction = static_cast<double>(flagged) / static_cast<double>(done.size());
  std::vector<std::int64_t> kept;
  if (config.deterministic_reduce) {
    kept = done;
  } else {
    for (auto o : r.tasks_resumed > 0 || !config.task_subset.empty() ? done : completion_order) kept.push_back(o);
  }
  std::erase_if(kept, [&](std::int64_t o) { return slots[static_cast<std::size_t>(o)]->flags.any(); });
  if (kept.empty()) throw Error("executor", "every task was flagged for underflow/overflow; nothing to keep");
  if (config.deterministic_reduce) {
    r.amplitudes = pairwise(slots, kept, 0, kept.size());
  } else {
    r.amplitudes = slots[static_cast<std::size_t>(kept[0])]->tensor;
    for (std::size_t i = 1; i < kept.size(); ++i) {
      r.amplitudes = add(r.amplitudes, slots[static_cast<std::size_t>(kept[i])]->tensor);
    }
  }
  if (static_cast<std::int64_t>(kept.size()) != r.tasks_total) {
    const double rescale = static_cast<double>(r.tasks_total) / static_cast<double>(kept.size());
    for (auto& v : r.amplitudes.data()) v *= rescale;
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string run_report_json(const RunResult& r, const RunConfig& config, std::uint64_t analytic_flops) {
  nlohmann::json j;
  j["precision"] = precision_mode_name(config.precision);
  j["workers"] = config.workers;
  j["deterministic_reduce"] = config.deterministic_reduce;
  j["tasks"] = r.tasks_total;
  j["tasks_run"] = r.tasks_run;
  j["tasks_resumed"] = r.tasks_resumed;
  j["complete"] = r.complete;
  j["flops"] = r.flops;
  j["analytic_flops"] = analytic_flops;
  j["group_flops"] = r.group_flops;
  j["wall_time"] = r.wall_seconds;
  j["discarded_fraction"] = r.discarded_fraction;
  j["peak_elements"] = r.peak_elements;
  j["max_rank"] = r.max_rank;
  std::vector<double> util;
  for (double b : r.worker_busy_seconds) util.push_back(r.wall_seconds > 0 ? b / r.wall_seconds : 0.0);
  j["worker_utilization"] = util;
  return j.dump(2);
}

}  // namespace rqcsim
