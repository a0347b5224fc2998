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

#include "rqcsim/pathopt.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <bitset>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "json.hpp"

namespace rqcsim {

namespace {

// Labels of every SSA id (leaves then steps) with sliced indices removed.
struct LabelTrace {
  std::vector<std::vector<IndexId>> labels;
  std::vector<int> height;
};

std::vector<char> slice_mask(const TensorNetwork& net, const std::vector<IndexId>& sliced) {
  std::vector<char> mask(net.num_index_slots(), 0);
  for (auto id : sliced) {
    const auto i = static_cast<std::size_t>(to_int(id));
    if (i >= mask.size()) throw Error("pathopt", "sliced index " + std::to_string(to_int(id)) + " does not exist");
    if (net.is_open(id)) throw Error("pathopt", "cannot slice open index " + std::to_string(to_int(id)));
    mask[i] = 1;
  }
  return mask;
}

LabelTrace trace_labels(const TensorNetwork& net, const ContractionTree& tree, const std::vector<char>& mask) {
  const int m = tree.num_leaves;
  if (m != static_cast<int>(net.num_nodes())) {
    throw Error("pathopt", "tree has " + std::to_string(m) + " leaves but network has " +
                               std::to_string(net.num_nodes()) + " nodes");
  }
  validate_tree(tree);
  LabelTrace tr;
  tr.labels.resize(static_cast<std::size_t>(2 * m - 1));
  tr.height.assign(tr.labels.size(), 0);
  std::vector<int> live(net.num_index_slots(), 0);
  for (int n = 0; n < m; ++n) {
    auto& l = tr.labels[static_cast<std::size_t>(n)];
    for (auto id : net.node(n).indices) {
      if (mask[static_cast<std::size_t>(to_int(id))]) continue;
      l.push_back(id);
      ++live[static_cast<std::size_t>(to_int(id))];
    }
  }
  for (auto id : net.open_indices()) ++live[static_cast<std::size_t>(to_int(id))];
  for (std::size_t s = 0; s < tree.steps.size(); ++s) {
    const auto [x, y] = tree.steps[s];
    const auto& a = tr.labels[static_cast<std::size_t>(x)];
    const auto& b = tr.labels[static_cast<std::size_t>(y)];
    auto out = contraction_output(a, b, live);
    for (auto id : a) {
      if (std::find(b.begin(), b.end(), id) == b.end()) continue;
      auto& cnt = live[static_cast<std::size_t>(to_int(id))];
      cnt = (std::find(out.begin(), out.end(), id) != out.end()) ? cnt - 1 : 0;
    }
    const auto id = static_cast<std::size_t>(m) + s;
    tr.labels[id] = std::move(out);
    tr.height[id] = 1 + std::max(tr.height[static_cast<std::size_t>(x)], tr.height[static_cast<std::size_t>(y)]);
  }
  return tr;
}

double log2_size(const TensorNetwork& net, const std::vector<IndexId>& labels) {
  double s = 0;
  for (auto id : labels) s += std::log2(static_cast<double>(net.dim(id)));
  return s;
}

double size_of(const TensorNetwork& net, const std::vector<IndexId>& labels) {
  double s = 1;
  for (auto id : labels) s *= static_cast<double>(net.dim(id));
  return s;
}

std::vector<IndexId> label_union(const std::vector<IndexId>& a, const std::vector<IndexId>& b) {
  std::vector<IndexId> u = a;
  for (auto id : b) {
    if (std::find(a.begin(), a.end(), id) == a.end()) u.push_back(id);
  }
  return u;
}

CostReport report_from_trace(const TensorNetwork& net, const ContractionTree& tree, const LabelTrace& tr,
                             const std::vector<IndexId>& sliced) {
  CostReport r;
  const int m = tree.num_leaves;
  for (auto id : sliced) r.num_tasks *= static_cast<double>(net.dim(id));
  for (int n = 0; n < m; ++n) {
    const auto& l = tr.labels[static_cast<std::size_t>(n)];
    r.max_rank = std::max(r.max_rank, static_cast<int>(l.size()));
    r.log2_max_intermediate = std::max(r.log2_max_intermediate, log2_size(net, l));
  }
  double moved = 0;
  for (std::size_t s = 0; s < tree.steps.size(); ++s) {
    const auto [x, y] = tree.steps[s];
    const auto& a = tr.labels[static_cast<std::size_t>(x)];
    const auto& b = tr.labels[static_cast<std::size_t>(y)];
    const auto& c = tr.labels[static_cast<std::size_t>(m) + s];
    StepCost sc;
    sc.a_shape = net.dims_of(a);
    sc.b_shape = net.dims_of(b);
    sc.out_shape = net.dims_of(c);
    const auto all = label_union(a, b);
    std::uint64_t exact = 8;
    for (auto id : all) {
      if (__builtin_mul_overflow(exact, static_cast<std::uint64_t>(net.dim(id)), &exact)) r.exact = false;
    }
    sc.flops = 8.0 * size_of(net, all);
    sc.log2_flops = std::log2(sc.flops);
    const double elems = size_of(net, a) + size_of(net, b) + size_of(net, c);
    sc.density = sc.flops / elems;
    sc.height = tr.height[static_cast<std::size_t>(m) + s];
    moved += elems;
    r.flops_per_task += sc.flops;
    if (r.exact && __builtin_add_overflow(r.exact_flops_per_task, exact, &r.exact_flops_per_task)) r.exact = false;
    r.max_rank = std::max(r.max_rank, static_cast<int>(c.size()));
    r.log2_max_intermediate = std::max(r.log2_max_intermediate, log2_size(net, c));
    r.per_step.push_back(std::move(sc));
  }
  if (!r.exact) r.exact_flops_per_task = 0;
  r.log2_flops_per_task = std::log2(std::max(r.flops_per_task, 1.0));
  r.log2_flops = r.log2_flops_per_task + std::log2(r.num_tasks);
  r.compute_density = moved > 0 ? r.flops_per_task / moved : 0.0;
  return r;
}

double gumbel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(std::numeric_limits<double>::min(), 1.0);
  return -std::log(-std::log(u(rng)));
}

double signed_log(double c) { return c < 0 ? -std::log2(1.0 - c) : std::log2(1.0 + c); }

// Explicit binary tree used by the reconfiguration moves. Leaves are
// 0..m-1; internal nodes carry two children.
struct BinTree {
  int m = 0;
  std::vector<std::array<int, 2>> kids;
  int root = -1;

  static BinTree from(const ContractionTree& t) {
    BinTree b;
    b.m = t.num_leaves;
    b.kids.assign(static_cast<std::size_t>(2 * b.m - 1), {-1, -1});
    for (std::size_t s = 0; s < t.steps.size(); ++s) {
      b.kids[static_cast<std::size_t>(b.m) + s] = {t.steps[s].first, t.steps[s].second};
    }
    b.root = 2 * b.m - 2;
    return b;
  }

  int add(int l, int r) {
    kids.push_back({l, r});
    return static_cast<int>(kids.size()) - 1;
  }

  [[nodiscard]] ContractionTree serialize() const {
    ContractionTree t;
    t.num_leaves = m;
    std::vector<int> new_id(kids.size(), -1);
    for (int i = 0; i < m; ++i) new_id[static_cast<std::size_t>(i)] = i;
    std::vector<std::pair<int, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [v, expanded] = stack.back();
      stack.pop_back();
      if (v < m) continue;
      const auto& k = kids[static_cast<std::size_t>(v)];
      if (expanded) {
        t.steps.emplace_back(new_id[static_cast<std::size_t>(k[0])], new_id[static_cast<std::size_t>(k[1])]);
        new_id[static_cast<std::size_t>(v)] = m + static_cast<int>(t.steps.size()) - 1;
      } else {
        stack.push_back({v, true});
        stack.push_back({k[1], false});
        stack.push_back({k[0], false});
      }
    }
    return t;
  }
};

constexpr std::size_t kMaxLocalIndices = 256;
using LocalSet = std::bitset<kMaxLocalIndices>;

// Re-optimises the subtree below `v` over `parts` by exhaustive DP on the
// flop count. Returns false when the subproblem is too wide.
bool reconfigure(BinTree& bt, int v, const std::vector<int>& parts, const LabelTrace& tr, const TensorNetwork& net) {
  const int k = static_cast<int>(parts.size());
  std::vector<IndexId> local;
  auto local_of = [&](IndexId id) {
    auto it = std::find(local.begin(), local.end(), id);
    if (it != local.end()) return static_cast<std::size_t>(it - local.begin());
    local.push_back(id);
    return local.size() - 1;
  };
  std::vector<LocalSet> part_sets(static_cast<std::size_t>(k));
  for (int p = 0; p < k; ++p) {
    for (auto id : tr.labels[static_cast<std::size_t>(parts[static_cast<std::size_t>(p)])]) {
      const auto li = local_of(id);
      if (li >= kMaxLocalIndices) return false;
      part_sets[static_cast<std::size_t>(p)].set(li);
    }
  }
  LocalSet keep_outside;
  for (auto id : tr.labels[static_cast<std::size_t>(v)]) {
    auto it = std::find(local.begin(), local.end(), id);
    if (it != local.end()) keep_outside.set(static_cast<std::size_t>(it - local.begin()));
  }
  std::vector<double> ldim(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) ldim[i] = std::log2(static_cast<double>(net.dim(local[i])));
  auto log2_of = [&](const LocalSet& s) {
    double x = 0;
    for (std::size_t i = 0; i < local.size(); ++i) {
      if (s.test(i)) x += ldim[i];
    }
    return x;
  };

  const std::size_t full = (std::size_t{1} << k) - 1;
  std::vector<LocalSet> lab(full + 1);
  for (std::size_t s = 1; s <= full; ++s) {
    LocalSet in, out;
    for (int p = 0; p < k; ++p) {
      if (s >> p & 1U) {
        in |= part_sets[static_cast<std::size_t>(p)];
      } else {
        out |= part_sets[static_cast<std::size_t>(p)];
      }
    }
    lab[s] = in & (out | keep_outside);
  }
  std::vector<double> cost(full + 1, 0.0);
  std::vector<std::size_t> split(full + 1, 0);
  for (std::size_t s = 1; s <= full; ++s) {
    if ((s & (s - 1)) == 0) continue;
    double best = std::numeric_limits<double>::infinity();
    const std::size_t low = s & (~s + 1);
    for (std::size_t a = (s - 1) & s; a > 0; a = (a - 1) & s) {
      if (!(a & low)) continue;
      const std::size_t b = s ^ a;
      const double c = cost[a] + cost[b] + std::exp2(3.0 + log2_of(lab[a] | lab[b]));
      if (c < best) {
        best = c;
        split[s] = a;
      }
    }
    cost[s] = best;
  }
  std::function<int(std::size_t)> build = [&](std::size_t s) -> int {
    if ((s & (s - 1)) == 0) return parts[static_cast<std::size_t>(std::countr_zero(s))];
    const int l = build(split[s]);
    const int r = build(s ^ split[s]);
    return bt.add(l, r);
  };
  const int l = build(split[full]);
  const int r = build(full ^ split[full]);
  bt.kids[static_cast<std::size_t>(v)] = {l, r};
  return true;
}

}  // namespace

void validate_tree(const ContractionTree& tree) {
  const int m = tree.num_leaves;
  if (m <= 0) throw Error("pathopt", "tree has no leaves");
  if (static_cast<int>(tree.steps.size()) != m - 1) {
    throw Error("pathopt", "tree over " + std::to_string(m) + " leaves needs " + std::to_string(m - 1) +
                               " steps, got " + std::to_string(tree.steps.size()));
  }
  std::vector<char> used(static_cast<std::size_t>(2 * m - 1), 0);
  for (std::size_t s = 0; s < tree.steps.size(); ++s) {
    const int limit = m + static_cast<int>(s);
    for (int id : {tree.steps[s].first, tree.steps[s].second}) {
      if (id < 0 || id >= limit) {
        throw Error("pathopt", "step " + std::to_string(s) + " uses id " + std::to_string(id) + " not yet created");
      }
      if (used[static_cast<std::size_t>(id)]) {
        throw Error("pathopt", "step " + std::to_string(s) + " reuses id " + std::to_string(id));
      }
      used[static_cast<std::size_t>(id)] = 1;
    }
    if (tree.steps[s].first == tree.steps[s].second) throw Error("pathopt", "step contracts an id with itself");
  }
}

CostReport evaluate_cost(const TensorNetwork& net, const ContractionTree& tree, const std::vector<IndexId>& sliced) {
  const auto mask = slice_mask(net, sliced);
  return report_from_trace(net, tree, trace_labels(net, tree, mask), sliced);
}

double SlicingPlan::num_tasks() const {
  double t = 1;
  for (auto d : dims) t *= static_cast<double>(d);
  return t;
}

LatticeParams lattice_slicing_params(int N, int d) {
  if (N < 1) throw Error("pathopt", "lattice half-width must be >= 1");
  if (d < 0) throw Error("pathopt", "depth must be >= 0");
  LatticeParams p;
  p.N = N;
  p.d = d;
  p.b = (N % 2 == 1) ? 1 : 2;
  if (N < p.b) p.b = N;
  p.S = 3 * (N - p.b) / 2;
  p.L = std::int64_t{1} << ((d + 7) / 8);
  p.rank_cap = N + p.b;
  return p;
}

std::pair<ContractionTree, SlicingPlan> lattice_contraction_tree(const TensorNetwork& coarse,
                                                                 const LatticeParams& params) {
  const int N = params.N;
  const int M = 2 * N;
  if (coarse.rows() != M || coarse.cols() != M) {
    throw Error("pathopt", "lattice schedule needs a " + std::to_string(M) + "x" + std::to_string(M) +
                               " network, got " + std::to_string(coarse.rows()) + "x" +
                               std::to_string(coarse.cols()));
  }
  if (static_cast<int>(coarse.num_nodes()) != M * M) {
    throw Error("pathopt", "lattice schedule needs one node per site");
  }
  std::vector<int> node_of(static_cast<std::size_t>(M * M), -1);
  for (std::size_t n = 0; n < coarse.num_nodes(); ++n) {
    const int s = coarse.node(static_cast<int>(n)).site;
    if (s < 0 || s >= M * M || node_of[static_cast<std::size_t>(s)] >= 0) {
      throw Error("pathopt", "lattice schedule needs one node per site");
    }
    node_of[static_cast<std::size_t>(s)] = static_cast<int>(n);
  }

  ContractionTree tree;
  tree.num_leaves = M * M;
  int next = M * M;
  auto join = [&](int a, int b) {
    if (a < 0) return b;
    tree.steps.emplace_back(a, b);
    return next++;
  };
  const int k = (N + params.b) / 2;
  auto half = [&](bool mirrored) {
    auto leaf = [&](int r, int c) { return node_of[static_cast<std::size_t>(r * M + (mirrored ? M - 1 - c : c))]; };
    int q = -1;
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) q = join(q, leaf(r, c));
    }
    int t = -1;
    for (int r = M - 1; r >= k; --r) {
      for (int c = 0; c < N; ++c) t = join(t, leaf(r, c));
    }
    int h = t < 0 ? q : join(q, t);
    for (int r = k - 1; r >= 0; --r) {
      for (int c = k; c < N; ++c) h = join(h, leaf(r, c));
    }
    return h;
  };
  const int left = half(false);
  const int right = half(true);
  join(left, right);

  SlicingPlan plan;
  plan.N = N;
  plan.b = params.b;
  plan.S = params.S;
  plan.d = params.d;
  plan.L = params.L;
  for (int r = M - params.S; r < M; ++r) {
    const int bond = bond_between(coarse, r * M + N - 1, r * M + N);
    if (bond < 0) continue;
    plan.sliced.push_back(make_index(bond));
    plan.dims.push_back(coarse.dim(make_index(bond)));
  }
  const auto base = evaluate_cost(coarse, tree);
  const auto sliced = evaluate_cost(coarse, tree, plan.sliced);
  plan.overhead = std::exp2(sliced.log2_flops - base.log2_flops);
  return {std::move(tree), std::move(plan)};
}

ContractionTree greedy_path(const TensorNetwork& net, const GreedyOptions& options) {
  const int m = static_cast<int>(net.num_nodes());
  if (m == 0) throw Error("pathopt", "empty network");
  std::mt19937_64 rng(options.seed);
  ContractionTree tree;
  tree.num_leaves = m;
  std::vector<std::vector<IndexId>> labels(static_cast<std::size_t>(2 * m - 1));
  std::vector<double> sizes(labels.size(), 0.0);
  std::vector<int> live(net.num_index_slots(), 0);
  std::vector<std::vector<int>> holders(net.num_index_slots());
  std::vector<char> alive(labels.size(), 0);
  for (int n = 0; n < m; ++n) {
    labels[static_cast<std::size_t>(n)] = net.node(n).indices;
    sizes[static_cast<std::size_t>(n)] = size_of(net, net.node(n).indices);
    alive[static_cast<std::size_t>(n)] = 1;
    for (auto id : net.node(n).indices) {
      ++live[static_cast<std::size_t>(to_int(id))];
      holders[static_cast<std::size_t>(to_int(id))].push_back(n);
    }
  }
  for (auto id : net.open_indices()) ++live[static_cast<std::size_t>(to_int(id))];

  for (int s = 0; s < m - 1; ++s) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> pick{-1, -1};
    auto consider = [&](int a, int b) {
      if (a > b) std::swap(a, b);
      const auto out = contraction_output(labels[static_cast<std::size_t>(a)], labels[static_cast<std::size_t>(b)], live);
      double c = size_of(net, out) - sizes[static_cast<std::size_t>(a)] - sizes[static_cast<std::size_t>(b)];
      if (options.temperature > 0) c = signed_log(c) - options.temperature * gumbel(rng);
      if (c < best || (c == best && std::pair{a, b} < pick)) {
        best = c;
        pick = {a, b};
      }
    };
    for (const auto& h : holders) {
      for (std::size_t i = 0; i < h.size(); ++i) {
        for (std::size_t j = i + 1; j < h.size(); ++j) consider(h[i], h[j]);
      }
    }
    if (pick.first < 0) {
      // Disconnected components: outer product of the two smallest.
      std::vector<int> ids;
      for (int i = 0; i < m + s; ++i) {
        if (alive[static_cast<std::size_t>(i)]) ids.push_back(i);
      }
      std::stable_sort(ids.begin(), ids.end(), [&](int x, int y) {
        return sizes[static_cast<std::size_t>(x)] < sizes[static_cast<std::size_t>(y)];
      });
      pick = {std::min(ids[0], ids[1]), std::max(ids[0], ids[1])};
    }
    const auto [a, b] = pick;
    const auto& la = labels[static_cast<std::size_t>(a)];
    const auto& lb = labels[static_cast<std::size_t>(b)];
    auto out = contraction_output(la, lb, live);
    for (auto id : la) {
      if (std::find(lb.begin(), lb.end(), id) == lb.end()) continue;
      auto& cnt = live[static_cast<std::size_t>(to_int(id))];
      cnt = (std::find(out.begin(), out.end(), id) != out.end()) ? cnt - 1 : 0;
    }
    const int nid = m + s;
    for (auto id : label_union(la, lb)) {
      auto& h = holders[static_cast<std::size_t>(to_int(id))];
      std::erase_if(h, [&](int x) { return x == a || x == b; });
      if (std::find(out.begin(), out.end(), id) != out.end()) h.push_back(nid);
    }
    alive[static_cast<std::size_t>(a)] = alive[static_cast<std::size_t>(b)] = 0;
    alive[static_cast<std::size_t>(nid)] = 1;
    sizes[static_cast<std::size_t>(nid)] = size_of(net, out);
    labels[static_cast<std::size_t>(nid)] = std::move(out);
    tree.steps.emplace_back(a, b);
  }
  return tree;
}

double loss(const CostReport& report, const LossWeights& weights) {
  double penalty = 0;
  if (weights.w_density != 0 && report.flops_per_task > 0) {
    for (const auto& s : report.per_step) {
      penalty += std::max(0.0, weights.density_target - s.density) * (s.flops / report.flops_per_task);
    }
  }
  return weights.w_complexity * report.log2_flops + weights.w_density * penalty;
}

SlicingPlan general_slicing(const TensorNetwork& net, const ContractionTree& tree, double log2_mem_cap,
                            double min_log2_tasks) {
  SlicingPlan plan;
  const auto base = evaluate_cost(net, tree);
  double current_log2 = base.log2_flops;
  for (;;) {
    const auto tr = trace_labels(net, tree, slice_mask(net, plan.sliced));
    std::size_t worst = 0;
    double worst_size = -1;
    for (std::size_t i = 0; i < tr.labels.size(); ++i) {
      const double s = log2_size(net, tr.labels[i]);
      if (s > worst_size) {
        worst_size = s;
        worst = i;
      }
    }
    if (worst_size <= log2_mem_cap + 1e-9) break;
    IndexId pick{};
    bool found = false;
    double best_flops = std::numeric_limits<double>::infinity();
    double best_mem = std::numeric_limits<double>::infinity();
    for (auto id : tr.labels[worst]) {
      if (net.is_open(id)) continue;
      auto trial = plan.sliced;
      trial.push_back(id);
      const auto r = evaluate_cost(net, tree, trial);
      if (r.log2_flops < best_flops - 1e-12 ||
          (std::abs(r.log2_flops - best_flops) <= 1e-12 && r.log2_max_intermediate < best_mem)) {
        best_flops = r.log2_flops;
        best_mem = r.log2_max_intermediate;
        pick = id;
        found = true;
      }
    }
    if (!found) {
      throw Error("pathopt", "memory cap 2^" + std::to_string(log2_mem_cap) +
                                 " unreachable: largest tensor holds only open indices (2^" +
                                 std::to_string(worst_size) + " elements)");
    }
    plan.sliced.push_back(pick);
    plan.dims.push_back(net.dim(pick));
    current_log2 = best_flops;
  }
  while (std::log2(plan.num_tasks()) < min_log2_tasks - 1e-9) {
    std::vector<char> usable(net.num_index_slots(), 0);
    for (const auto& node : net.nodes()) {
      for (auto id : node.indices) usable[static_cast<std::size_t>(to_int(id))] = 1;
    }
    for (auto id : plan.sliced) usable[static_cast<std::size_t>(to_int(id))] = 0;
    IndexId pick{};
    bool found = false;
    double best_flops = std::numeric_limits<double>::infinity();
    double best_mem = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < usable.size(); ++i) {
      const IndexId id = make_index(static_cast<std::int32_t>(i));
      if (!usable[i] || net.is_open(id) || net.dim(id) < 2) continue;
      auto trial = plan.sliced;
      trial.push_back(id);
      const auto r = evaluate_cost(net, tree, trial);
      if (r.log2_flops < best_flops - 1e-12 ||
          (std::abs(r.log2_flops - best_flops) <= 1e-12 && r.log2_max_intermediate < best_mem)) {
        best_flops = r.log2_flops;
        best_mem = r.log2_max_intermediate;
        pick = id;
        found = true;
      }
    }
    if (!found) break;
    plan.sliced.push_back(pick);
    plan.dims.push_back(net.dim(pick));
    current_log2 = best_flops;
  }
  plan.overhead = std::exp2(current_log2 - base.log2_flops);
  return plan;
}

AnnealResult anneal_path(const TensorNetwork& net, int budget_iters, const LossWeights& weights,
                         std::uint64_t seed, const AnnealOptions& options) {
  if (budget_iters < 1) throw Error("pathopt", "anneal budget must be >= 1");
  std::mt19937_64 rng(seed);
  struct Scored {
    ContractionTree tree;
    SlicingPlan plan;
    CostReport report;
    double loss = 0;
  };
  auto score = [&](ContractionTree t) {
    Scored s;
    s.tree = std::move(t);
    if (options.log2_mem_cap) s.plan = general_slicing(net, s.tree, *options.log2_mem_cap);
    s.report = evaluate_cost(net, s.tree, s.plan.sliced);
    s.loss = loss(s.report, weights);
    return s;
  };

  Scored best = score(greedy_path(net));
  AnnealResult result;
  result.greedy_loss = best.loss;
  Scored current = best;
  const int m = static_cast<int>(net.num_nodes());
  constexpr int kRestartAfter = 64;  // fruitless local moves before a restart
  int stale = 0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int it = 1; it < budget_iters && m > 2; ++it) {
    ContractionTree cand;
    const bool restart = stale >= kRestartAfter;
    if (restart) {
      cand = greedy_path(net, {rng(), 0.05 + 1.5 * unit(rng)});
    } else if (unit(rng) < 0.2) {
      // Leaf-pair swap.
      cand = current.tree;
      const int a = static_cast<int>(rng() % static_cast<std::uint64_t>(m));
      const int b = static_cast<int>(rng() % static_cast<std::uint64_t>(m));
      if (a == b) continue;
      for (auto& st : cand.steps) {
        for (int* x : {&st.first, &st.second}) {
          if (*x == a) {
            *x = b;
          } else if (*x == b) {
            *x = a;
          }
        }
      }
    } else {
      // Subtree reroot: rebuild the subtree under a step over up to
      // max_subtree_parts of its descendants with the cheapest order.
      BinTree bt = BinTree::from(current.tree);
      const auto tr = trace_labels(net, current.tree, std::vector<char>(net.num_index_slots(), 0));
      int v;
      if (unit(rng) < 0.5) {
        std::vector<double> w;
        for (const auto& s : current.report.per_step) w.push_back(s.flops);
        std::discrete_distribution<int> pick(w.begin(), w.end());
        v = m + pick(rng);
      } else {
        v = m + static_cast<int>(rng() % static_cast<std::uint64_t>(m - 1));
      }
      const int want =
          3 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::max(1, options.max_subtree_parts - 2)));
      std::vector<int> parts{bt.kids[static_cast<std::size_t>(v)][0], bt.kids[static_cast<std::size_t>(v)][1]};
      while (static_cast<int>(parts.size()) < want) {
        std::vector<std::size_t> internal;
        for (std::size_t i = 0; i < parts.size(); ++i) {
          if (parts[i] >= m) internal.push_back(i);
        }
        if (internal.empty()) break;
        const auto i = internal[rng() % internal.size()];
        const int p = parts[i];
        parts[i] = bt.kids[static_cast<std::size_t>(p)][0];
        parts.push_back(bt.kids[static_cast<std::size_t>(p)][1]);
      }
      if (parts.size() < 3 || !reconfigure(bt, v, parts, tr, net)) {
        ++stale;
        continue;
      }
      cand = bt.serialize();
    }
    Scored s = score(std::move(cand));
    if (restart || s.loss < current.loss - 1e-12) {
      current = s;
      stale = 0;
    } else {
      ++stale;
    }
    if (s.loss < best.loss - 1e-12) {
      best = std::move(s);
      ++result.accepted_moves;
    }
  }
  result.tree = std::move(best.tree);
  result.plan = std::move(best.plan);
  result.report = std::move(best.report);
  result.loss = best.loss;
  return result;
}

std::string path_to_json(const ContractionTree& tree, const SlicingPlan& plan) {
  nlohmann::json j;
  j["num_leaves"] = tree.num_leaves;
  auto& steps = j["steps"] = nlohmann::json::array();
  for (std::size_t s = 0; s < tree.steps.size(); ++s) {
    steps.push_back({tree.steps[s].first, tree.steps[s].second, tree.num_leaves + static_cast<int>(s)});
  }
  std::vector<int> sliced;
  for (auto id : plan.sliced) sliced.push_back(to_int(id));
  j["sliced"] = sliced;
  j["sliced_dims"] = plan.dims;
  j["overhead"] = plan.overhead;
  if (plan.N >= 0) {
    j["lattice"] = {{"N", plan.N}, {"b", plan.b}, {"S", plan.S}, {"L", plan.L}, {"d", plan.d}};
  }
  return j.dump(2);
}

std::pair<ContractionTree, SlicingPlan> path_from_json(const std::string& text, const TensorNetwork& net) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error("pathopt", std::string("bad path file: ") + e.what());
  }
  ContractionTree tree;
  SlicingPlan plan;
  try {
    tree.num_leaves = j.at("num_leaves").get<int>();
    for (const auto& s : j.at("steps")) {
      if (s.size() < 2) throw Error("pathopt", "path step needs two operands");
      tree.steps.emplace_back(s[0].get<int>(), s[1].get<int>());
    }
    if (j.contains("sliced")) {
      for (int id : j["sliced"].get<std::vector<int>>()) plan.sliced.push_back(make_index(id));
    }
    if (j.contains("overhead")) plan.overhead = j["overhead"].get<double>();
    if (j.contains("lattice")) {
      const auto& l = j["lattice"];
      plan.N = l.at("N").get<int>();
      plan.b = l.at("b").get<int>();
      plan.S = l.at("S").get<int>();
      plan.L = l.at("L").get<std::int64_t>();
      plan.d = l.at("d").get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("pathopt", std::string("bad path file: ") + e.what());
  }
  if (tree.num_leaves != static_cast<int>(net.num_nodes())) {
    throw Error("pathopt", "path has " + std::to_string(tree.num_leaves) + " leaves but network has " +
                               std::to_string(net.num_nodes()) + " nodes");
  }
  validate_tree(tree);
  (void)slice_mask(net, plan.sliced);
  for (auto id : plan.sliced) plan.dims.push_back(net.dim(id));
  return {std::move(tree), std::move(plan)};
}

}  // namespace rqcsim
