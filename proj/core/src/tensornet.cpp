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

#include "rqcsim/tensornet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "json.hpp"

namespace rqcsim {

std::string_view node_origin_name(NodeOrigin o) noexcept {
  switch (o) {
    case NodeOrigin::Gate: return "gate";
    case NodeOrigin::Input: return "input";
    case NodeOrigin::Output: return "output";
    case NodeOrigin::Merged: return "merged";
  }
  return "?";
}

// ---------------------------------------------------------------- TensorNetwork

IndexId TensorNetwork::add_index(std::int64_t dim, int owner) {
  if (dim < 1) throw Error("tensornet", "index dim must be positive");
  indices_.push_back({dim, owner});
  return make_index(static_cast<std::int32_t>(indices_.size() - 1));
}

int TensorNetwork::add_node(TensorNode node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size() - 1);
}

std::vector<std::int64_t> TensorNetwork::dims_of(const std::vector<IndexId>& ids) const {
  std::vector<std::int64_t> d;
  d.reserve(ids.size());
  for (auto id : ids) d.push_back(dim(id));
  return d;
}

bool TensorNetwork::is_open(IndexId id) const noexcept {
  return std::find(open_.begin(), open_.end(), id) != open_.end();
}

std::vector<std::vector<int>> TensorNetwork::index_table() const {
  std::vector<std::vector<int>> table(indices_.size());
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    for (auto id : nodes_[n].indices) table.at(static_cast<std::size_t>(to_int(id))).push_back(static_cast<int>(n));
  }
  return table;
}

void TensorNetwork::validate() const {
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    const auto& idx = nodes_[n].indices;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (to_int(idx[i]) < 0 || static_cast<std::size_t>(to_int(idx[i])) >= indices_.size()) {
        throw Error("tensornet", "node " + std::to_string(n) + " uses an unknown index");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (idx[i] == idx[j]) throw Error("tensornet", "node " + std::to_string(n) + " repeats an index");
      }
    }
  }
  const auto table = index_table();
  std::vector<char> open(indices_.size(), 0);
  for (auto id : open_) {
    if (to_int(id) < 0 || static_cast<std::size_t>(to_int(id)) >= indices_.size()) {
      throw Error("tensornet", "unknown open index");
    }
    if (open[static_cast<std::size_t>(to_int(id))]) throw Error("tensornet", "open index listed twice");
    open[static_cast<std::size_t>(to_int(id))] = 1;
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (open[i] || table[i].empty()) continue;
    if (table[i].size() < 2) throw Error("tensornet", "closed index " + std::to_string(i) + " touches a single node");
  }
}

void TensorNetwork::compact_indices() {
  std::vector<std::int32_t> remap(indices_.size(), -1);
  std::vector<IndexInfo> kept;
  auto visit = [&](IndexId& id) {
    auto& r = remap[static_cast<std::size_t>(to_int(id))];
    if (r < 0) {
      r = static_cast<std::int32_t>(kept.size());
      kept.push_back(indices_[static_cast<std::size_t>(to_int(id))]);
    }
    id = make_index(r);
  };
  for (auto& n : nodes_) {
    for (auto& id : n.indices) visit(id);
  }
  for (auto& id : open_) visit(id);
  // Dense payloads carry labels too.
  for (auto& n : nodes_) {
    if (auto* d = std::get_if<DenseSource>(&n.source)) {
      if (d->tensor->indices() != n.indices) {
        auto t = std::make_shared<TensorD>(*d->tensor);
        t->reshape(n.indices, t->dims());
        d->tensor = std::move(t);
      }
    }
  }
  indices_ = std::move(kept);
}

bool structurally_equal(const TensorNetwork& a, const TensorNetwork& b) {
  if (a.nodes_.size() != b.nodes_.size() || a.open_ != b.open_) return false;
  for (std::size_t n = 0; n < a.nodes_.size(); ++n) {
    if (a.nodes_[n].indices != b.nodes_[n].indices || a.nodes_[n].origin != b.nodes_[n].origin) return false;
    if (a.dims_of(a.nodes_[n].indices) != b.dims_of(b.nodes_[n].indices)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- build

TensorNetwork build_network(const Circuit& c, const Bitstring& fixed_bits, const std::vector<int>& open_qubits) {
  const int n = c.num_qubits();
  if (static_cast<int>(fixed_bits.size()) != n) {
    throw Error("tensornet", "fixed bitstring has " + std::to_string(fixed_bits.size()) + " entries for " +
                                 std::to_string(n) + " qubits");
  }
  std::vector<char> is_open(static_cast<std::size_t>(n), 0);
  for (int q : open_qubits) {
    if (q < 0 || q >= n) throw Error("tensornet", "open qubit out of range");
    if (is_open[static_cast<std::size_t>(q)]) throw Error("tensornet", "open qubit listed twice");
    is_open[static_cast<std::size_t>(q)] = 1;
  }
  TensorNetwork net(c.rows(), c.cols());
  std::vector<IndexId> cur(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) {
    cur[static_cast<std::size_t>(q)] = net.add_index(2, q);
    net.add_node({NodeOrigin::Input, {cur[static_cast<std::size_t>(q)]}, BasisSource{0}, q});
  }
  for (const auto& cycle : c.cycles()) {
    for (const auto& g : cycle) {
      if (g.arity() == 1) {
        const int q = g.qubits[0];
        const IndexId out = net.add_index(2, q);
        net.add_node({NodeOrigin::Gate, {out, cur[static_cast<std::size_t>(q)]}, GateSource{g, false}, q});
        cur[static_cast<std::size_t>(q)] = out;
      } else {
        const int q0 = g.qubits[0], q1 = g.qubits[1];
        const IndexId o0 = net.add_index(2, q0);
        const IndexId o1 = net.add_index(2, q1);
        net.add_node({NodeOrigin::Gate,
                      {o0, o1, cur[static_cast<std::size_t>(q0)], cur[static_cast<std::size_t>(q1)]},
                      GateSource{g, false},
                      std::min(q0, q1)});
        cur[static_cast<std::size_t>(q0)] = o0;
        cur[static_cast<std::size_t>(q1)] = o1;
      }
    }
  }
  std::vector<IndexId> open;
  for (int q : open_qubits) open.push_back(cur[static_cast<std::size_t>(q)]);
  for (int q = 0; q < n; ++q) {
    if (is_open[static_cast<std::size_t>(q)]) continue;
    const int bit = fixed_bits[static_cast<std::size_t>(q)];
    if (bit != 0 && bit != 1) throw Error("tensornet", "fixed bits must be 0 or 1");
    net.add_node({NodeOrigin::Output, {cur[static_cast<std::size_t>(q)]}, BasisSource{bit}, q});
  }
  net.set_open_indices(std::move(open));
  return net;
}

// ---------------------------------------------------------------- diagonal hyperedges

TensorNetwork diagonalize(const TensorNetwork& net) {
  TensorNetwork out = net;
  std::vector<std::int32_t> alias(out.num_index_slots());
  std::iota(alias.begin(), alias.end(), 0);
  auto find = [&](IndexId id) {
    std::int32_t x = to_int(id);
    while (alias[static_cast<std::size_t>(x)] != x) x = alias[static_cast<std::size_t>(x)];
    return make_index(x);
  };
  for (auto& node : out.nodes()) {
    for (auto& id : node.indices) id = find(id);
    auto* gs = std::get_if<GateSource>(&node.source);
    if (!gs || gs->diagonal_form || !gs->gate.is_diagonal()) continue;
    const std::size_t arity = static_cast<std::size_t>(gs->gate.arity());
    for (std::size_t k = 0; k < arity; ++k) {
      alias[static_cast<std::size_t>(to_int(node.indices[k]))] = to_int(node.indices[arity + k]);
    }
    node.indices.erase(node.indices.begin(), node.indices.begin() + static_cast<std::ptrdiff_t>(arity));
    gs->diagonal_form = true;
  }
  for (auto& node : out.nodes()) {
    for (auto& id : node.indices) id = find(id);
  }
  auto open = out.open_indices();
  for (auto& id : open) id = find(id);
  out.set_open_indices(std::move(open));
  out.compact_indices();
  return out;
}

// ---------------------------------------------------------------- materialize

namespace {

template <typename Real>
Tensor<Real> gate_tensor(const TensorNode& node, const GateSource& gs) {
  const UnitaryMatrix u = gate_unitary(gs.gate);
  std::vector<std::complex<Real>> data;
  std::vector<std::int64_t> dims(node.indices.size(), 2);
  if (gs.diagonal_form) {
    for (int k = 0; k < u.dim; ++k) {
      const auto v = u(k, k);
      data.emplace_back(static_cast<Real>(v.real()), static_cast<Real>(v.imag()));
    }
  } else {
    for (int k = 0; k < u.dim * u.dim; ++k) {
      const auto v = u.entries[static_cast<std::size_t>(k)];
      data.emplace_back(static_cast<Real>(v.real()), static_cast<Real>(v.imag()));
    }
  }
  return Tensor<Real>(node.indices, std::move(dims), std::move(data));
}

IndexPins pins_for(const std::vector<IndexId>& idx, const IndexPins& pins) {
  IndexPins out;
  for (const auto& p : pins) {
    if (std::find(idx.begin(), idx.end(), p.first) != idx.end()) out.push_back(p);
  }
  return out;
}

template <typename Real>
Tensor<Real> contract_subset(const TensorNetwork& net, std::span<const int> members,
                             std::span<const std::pair<int, int>> path, const IndexPins& pins,
                             const std::vector<char>& external, const ContractOptions<Real>& options);

template <typename Real>
Tensor<Real> materialize_group(const TensorNetwork& net, const TensorNode& node, const GroupData& g,
                               const IndexPins& pins, FlopCounter* group_flops) {
  const TensorNetwork& fine = *g.fine;
  IndexPins fine_pins;
  std::vector<char> external(fine.num_index_slots(), 0);
  std::vector<IndexId> order;  // surviving fine labels in leg order
  std::vector<IndexId> coarse_idx;
  std::vector<std::int64_t> coarse_dims;
  for (std::size_t leg = 0; leg < g.leg_parts.size(); ++leg) {
    const auto& parts = g.leg_parts[leg];
    for (auto id : parts) external[static_cast<std::size_t>(to_int(id))] = 1;
    const IndexId cid = node.indices[leg];
    auto it = std::find_if(pins.begin(), pins.end(), [&](const auto& p) { return p.first == cid; });
    if (it == pins.end()) {
      order.insert(order.end(), parts.begin(), parts.end());
      coarse_idx.push_back(cid);
      coarse_dims.push_back(net.dim(cid));
      continue;
    }
    std::int64_t v = it->second;
    if (v < 0 || v >= net.dim(cid)) throw Error("tensornet", "slice value out of range");
    for (std::size_t k = parts.size(); k-- > 0;) {
      const std::int64_t d = fine.dim(parts[k]);
      fine_pins.emplace_back(parts[k], v % d);
      v /= d;
    }
  }
  ContractOptions<Real> sub;
  sub.flops = group_flops;
  Tensor<Real> t = contract_subset<Real>(fine, g.members, g.sub_path, fine_pins, external, sub);
  Tensor<Real> p = permute_to(t, std::span<const IndexId>(order));
  p.reshape(std::move(coarse_idx), std::move(coarse_dims));
  return p;
}

template <typename Real>
Tensor<Real> contract_subset(const TensorNetwork& net, std::span<const int> members,
                             std::span<const std::pair<int, int>> path, const IndexPins& pins,
                             const std::vector<char>& external, const ContractOptions<Real>& options) {
  const std::size_t m = members.size();
  if (m == 0) throw Error("tensornet", "cannot contract an empty node set");
  if (path.size() + 1 != m) {
    throw Error("tensornet", "path has " + std::to_string(path.size()) + " steps for " + std::to_string(m) + " tensors");
  }
  std::vector<int> live_count(net.num_index_slots(), 0);
  for (std::size_t i = 0; i < external.size(); ++i) live_count[i] = external[i] ? 1 : 0;
  std::vector<std::optional<Tensor<Real>>> slots(2 * m - 1);
  std::vector<int> height(2 * m - 1, 0);
  std::int64_t peak = 0;
  int max_rank = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& node = net.node(members[i]);
    for (auto id : node.indices) ++live_count[static_cast<std::size_t>(to_int(id))];
    slots[i] = materialize<Real>(net, members[i], pins, options.group_flops);
    peak = std::max<std::int64_t>(peak, static_cast<std::int64_t>(slots[i]->size()));
    max_rank = std::max(max_rank, slots[i]->rank());
  }
  for (std::size_t s = 0; s < path.size(); ++s) {
    const auto [x, y] = path[s];
    const auto valid = [&](int id) {
      return id >= 0 && static_cast<std::size_t>(id) < m + s && slots[static_cast<std::size_t>(id)].has_value();
    };
    if (x == y || !valid(x) || !valid(y)) {
      throw Error("tensornet", "path step " + std::to_string(s) + " refers to a consumed or unknown tensor");
    }
    Tensor<Real> a = std::move(*slots[static_cast<std::size_t>(x)]);
    Tensor<Real> b = std::move(*slots[static_cast<std::size_t>(y)]);
    slots[static_cast<std::size_t>(x)].reset();
    slots[static_cast<std::size_t>(y)].reset();
    const auto out = contraction_output(a.indices(), b.indices(), live_count);
    std::int64_t out_size = 1;
    for (auto id : out) out_size *= net.dim(id);
    if (options.max_elements > 0 && out_size > options.max_elements) {
      throw Error("tensornet", "memory cap exceeded at step " + std::to_string(s) + ": result has 2^" +
                                   std::to_string(std::log2(static_cast<double>(out_size))) + " elements, cap 2^" +
                                   std::to_string(std::log2(static_cast<double>(options.max_elements))));
    }
    for (auto id : a.indices()) {
      if (b.axis_of(id) < 0) continue;
      auto& cnt = live_count[static_cast<std::size_t>(to_int(id))];
      cnt = (std::find(out.begin(), out.end(), id) != out.end()) ? cnt - 1 : 0;
    }
    const auto spec = ContractionSpec::from_labels(a.indices(), b.indices(), out);
    Tensor<Real> r = options.use_naive ? contract_pair_naive(a, b, spec, options.flops)
                                       : contract_pair_ttgt(a, b, spec, options.flops);
    const int h = 1 + std::max(height[static_cast<std::size_t>(x)], height[static_cast<std::size_t>(y)]);
    height[m + s] = h;
    if (options.after_step) options.after_step(r, s, h);
    peak = std::max<std::int64_t>(peak, static_cast<std::int64_t>(r.size()));
    max_rank = std::max(max_rank, r.rank());
    slots[m + s] = std::move(r);
  }
  if (options.stats) {
    options.stats->peak_elements = std::max(options.stats->peak_elements, peak);
    options.stats->max_rank = std::max(options.stats->max_rank, max_rank);
  }
  std::optional<Tensor<Real>> result;
  for (auto& s : slots) {
    if (!s) continue;
    if (result) throw Error("tensornet", "path leaves more than one tensor");
    result = std::move(s);
  }
  return std::move(*result);
}

}  // namespace

template <typename Real>
Tensor<Real> materialize(const TensorNetwork& net, int id, const IndexPins& pins, FlopCounter* group_flops) {
  const TensorNode& node = net.node(id);
  if (const auto* gsrc = std::get_if<GroupSource>(&node.source)) {
    return materialize_group<Real>(net, node, *gsrc->group, pins, group_flops);
  }
  Tensor<Real> t;
  if (const auto* gs = std::get_if<GateSource>(&node.source)) {
    t = gate_tensor<Real>(node, *gs);
  } else if (const auto* bs = std::get_if<BasisSource>(&node.source)) {
    const std::int64_t d = net.dim(node.indices.at(0));
    std::vector<std::complex<Real>> data(static_cast<std::size_t>(d));
    data.at(static_cast<std::size_t>(bs->bit)) = Real(1);
    t = Tensor<Real>(node.indices, {d}, std::move(data));
  } else {
    const auto& ds = std::get<DenseSource>(node.source);
    const auto local = pins_for(node.indices, pins);
    if (!local.empty()) return restrict_indices(*ds.tensor, std::span(local)).template cast<Real>();
    Tensor<Real> c = ds.tensor->template cast<Real>();
    c.reshape(node.indices, c.dims());
    return c;
  }
  const auto local = pins_for(node.indices, pins);
  if (local.empty()) return t;
  return restrict_indices(t, std::span(local));
}

std::vector<IndexId> contraction_output(const std::vector<IndexId>& a, const std::vector<IndexId>& b,
                                        const std::vector<int>& live_count) {
  std::vector<IndexId> out;
  for (auto id : a) {
    const bool shared = std::find(b.begin(), b.end(), id) != b.end();
    if (!shared || live_count[static_cast<std::size_t>(to_int(id))] > 2) out.push_back(id);
  }
  for (auto id : b) {
    if (std::find(a.begin(), a.end(), id) == a.end()) out.push_back(id);
  }
  return out;
}

template <typename Real>
Tensor<Real> contract_network(const TensorNetwork& net, std::span<const std::pair<int, int>> path,
                              const ContractOptions<Real>& options) {
  std::vector<int> members(net.num_nodes());
  std::iota(members.begin(), members.end(), 0);
  std::vector<char> external(net.num_index_slots(), 0);
  for (auto id : net.open_indices()) external[static_cast<std::size_t>(to_int(id))] = 1;
  Tensor<Real> t = contract_subset<Real>(net, members, path, options.pins, external, options);
  return permute_to(t, std::span<const IndexId>(net.open_indices()));
}

std::vector<std::pair<int, int>> linear_path(int n) {
  std::vector<std::pair<int, int>> path;
  if (n < 2) return path;
  int acc = 0;
  for (int i = 1; i < n; ++i) {
    path.emplace_back(acc, i);
    acc = n + i - 1;
  }
  return path;
}

// ---------------------------------------------------------------- simplify

namespace {

struct Work {
  std::vector<std::optional<TensorD>> t;  // per node, labels = node indices
  std::vector<NodeOrigin> origin;
  std::vector<int> site;
};

std::vector<std::vector<int>> live_table(const Work& w, std::size_t slots) {
  std::vector<std::vector<int>> table(slots);
  for (std::size_t n = 0; n < w.t.size(); ++n) {
    if (!w.t[n]) continue;
    for (auto id : w.t[n]->indices()) table[static_cast<std::size_t>(to_int(id))].push_back(static_cast<int>(n));
  }
  return table;
}

std::vector<IndexId> pair_output(const TensorNetwork& net, const std::vector<std::vector<int>>& table,
                                 const TensorD& a, const TensorD& b) {
  std::vector<int> count(table.size(), 0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    count[i] = static_cast<int>(table[i].size()) + (net.is_open(make_index(static_cast<std::int32_t>(i))) ? 1 : 0);
  }
  return contraction_output(a.indices(), b.indices(), count);
}

bool absorb_pass(const TensorNetwork& net, Work& w) {
  bool changed = false;
  for (std::size_t x = 0; x < w.t.size(); ++x) {
    if (!w.t[x] || w.t[x]->rank() > 2) continue;
    std::size_t alive = 0;
    for (const auto& t : w.t) alive += t ? 1 : 0;
    if (alive < 2) break;
    const auto table = live_table(w, net.num_index_slots());
    std::vector<int> candidates;
    if (w.t[x]->rank() == 0) {
      for (std::size_t y = 0; y < w.t.size(); ++y) {
        if (y != x && w.t[y]) candidates.push_back(static_cast<int>(y));
      }
    } else {
      for (auto id : w.t[x]->indices()) {
        for (int y : table[static_cast<std::size_t>(to_int(id))]) {
          if (static_cast<std::size_t>(y) != x) candidates.push_back(y);
        }
      }
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    }
    if (candidates.empty()) continue;
    int best = -1;
    std::size_t best_rank = 0;
    for (int y : candidates) {
      const auto out = pair_output(net, table, *w.t[x], *w.t[static_cast<std::size_t>(y)]);
      if (best < 0 || out.size() < best_rank) {
        best = y;
        best_rank = out.size();
      }
    }
    auto& ty = w.t[static_cast<std::size_t>(best)];
    const auto out = pair_output(net, table, *ty, *w.t[x]);
    const auto spec = ContractionSpec::from_labels(ty->indices(), w.t[x]->indices(), out);
    ty = contract_pair_ttgt(*ty, *w.t[x], spec);
    w.origin[static_cast<std::size_t>(best)] = NodeOrigin::Merged;
    w.t[x].reset();
    changed = true;
  }
  return changed;
}

bool fuse_pass(const TensorNetwork& net, Work& w, std::vector<IndexInfo>& info) {
  const auto table = live_table(w, net.num_index_slots());
  std::map<std::vector<int>, std::vector<IndexId>> groups;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const IndexId id = make_index(static_cast<std::int32_t>(i));
    if (table[i].size() < 2 || net.is_open(id)) continue;
    groups[table[i]].push_back(id);
  }
  bool changed = false;
  for (auto& [nodes, ids] : groups) {
    if (ids.size() < 2) continue;
    std::int64_t fused = 1;
    for (auto id : ids) fused *= info[static_cast<std::size_t>(to_int(id))].dim;
    for (int n : nodes) {
      auto& t = w.t[static_cast<std::size_t>(n)];
      std::vector<IndexId> order, labels;
      std::vector<std::int64_t> dims;
      for (std::size_t ax = 0; ax < t->indices().size(); ++ax) {
        const auto id = t->indices()[ax];
        if (std::find(ids.begin(), ids.end(), id) != ids.end()) continue;
        order.push_back(id);
        labels.push_back(id);
        dims.push_back(t->dims()[ax]);
      }
      order.insert(order.end(), ids.begin(), ids.end());
      labels.push_back(ids.front());
      dims.push_back(fused);
      TensorD p = permute_to(*t, std::span<const IndexId>(order));
      p.reshape(std::move(labels), std::move(dims));
      t = std::move(p);
    }
    info[static_cast<std::size_t>(to_int(ids.front()))].dim = fused;
    changed = true;
  }
  return changed;
}

}  // namespace

TensorNetwork simplify(const TensorNetwork& input) {
  const TensorNetwork net = diagonalize(input);
  Work w;
  for (std::size_t n = 0; n < net.num_nodes(); ++n) {
    if (std::holds_alternative<GroupSource>(net.nodes()[n].source)) {
      throw Error("tensornet", "simplify does not accept merged group nodes");
    }
    w.t.emplace_back(materialize<double>(net, static_cast<int>(n)));
    w.origin.push_back(net.nodes()[n].origin);
    w.site.push_back(net.nodes()[n].site);
  }
  std::vector<IndexInfo> info;
  for (std::size_t i = 0; i < net.num_index_slots(); ++i) info.push_back(net.index(make_index(static_cast<std::int32_t>(i))));

  // The fused dims live in `info`; pair_output only needs incidence and the
  // open list, which fusion never changes.
  bool changed = true;
  while (changed) {
    changed = absorb_pass(net, w);
    changed = fuse_pass(net, w, info) || changed;
  }

  TensorNetwork out(net.rows(), net.cols());
  for (const auto& i : info) out.add_index(i.dim, i.owner);
  for (std::size_t n = 0; n < w.t.size(); ++n) {
    if (!w.t[n]) continue;
    auto shared = std::make_shared<const TensorD>(std::move(*w.t[n]));
    out.add_node({w.origin[n], shared->indices(), DenseSource{shared}, w.site[n]});
  }
  out.set_open_indices(net.open_indices());
  out.compact_indices();
  return out;
}

NetworkStats network_stats(const TensorNetwork& net) {
  NetworkStats s;
  s.num_nodes = net.num_nodes();
  const auto table = net.index_table();
  double total = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!table[i].empty() || net.is_open(make_index(static_cast<std::int32_t>(i)))) ++s.num_indices;
  }
  for (const auto& n : net.nodes()) {
    s.max_rank = std::max(s.max_rank, static_cast<int>(n.indices.size()));
    double log2_size = 0.0;
    for (auto id : n.indices) log2_size += std::log2(static_cast<double>(net.dim(id)));
    total += std::exp2(log2_size);
  }
  s.log2_total_dim = total > 0.0 ? std::log2(total) : 0.0;
  return s;
}

// ---------------------------------------------------------------- lattice coarsening

TensorNetwork coarsen_to_sites(const TensorNetwork& input) {
  auto fine = std::make_shared<TensorNetwork>(input);
  const int num_sites = input.rows() * input.cols();
  if (num_sites <= 0) throw Error("tensornet", "network carries no lattice geometry");
  for (const auto& n : fine->nodes()) {
    if (n.site < 0 || n.site >= num_sites) throw Error("tensornet", "node without a lattice site");
    if (std::holds_alternative<GroupSource>(n.source)) throw Error("tensornet", "network is already coarse");
  }

  // Reroute legs that a node shares with another site's worldline.
  {
    const auto table = fine->index_table();
    for (std::size_t i = 0; i < table.size(); ++i) {
      const IndexId id = make_index(static_cast<std::int32_t>(i));
      const int owner = fine->index(id).owner;
      if (owner < 0) continue;
      for (int nid : table[i]) {
        if (fine->node(nid).site == owner) continue;
        const IndexId fresh = fine->add_index(fine->dim(id), -1);
        for (auto& x : fine->nodes()[static_cast<std::size_t>(nid)].indices) {
          if (x == id) x = fresh;
        }
        const std::int64_t d = fine->dim(id);
        TensorD delta({id, fresh}, {d, d});
        for (std::int64_t k = 0; k < d; ++k) delta.data()[static_cast<std::size_t>(k * d + k)] = 1.0;
        fine->add_node({NodeOrigin::Gate, {id, fresh}, DenseSource{std::make_shared<const TensorD>(std::move(delta))},
                        owner});
      }
    }
  }
  fine->validate();

  const auto table = fine->index_table();
  std::vector<std::vector<int>> members(static_cast<std::size_t>(num_sites));
  for (std::size_t n = 0; n < fine->num_nodes(); ++n) {
    members[static_cast<std::size_t>(fine->node(static_cast<int>(n)).site)].push_back(static_cast<int>(n));
  }
  // Crossing indices per unordered site pair.
  std::map<std::pair<int, int>, std::vector<IndexId>> bonds;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const IndexId id = make_index(static_cast<std::int32_t>(i));
    if (table[i].empty() || fine->is_open(id)) continue;
    std::vector<int> sites;
    for (int nid : table[i]) sites.push_back(fine->node(nid).site);
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    if (sites.size() == 1) continue;
    if (sites.size() > 2) throw Error("tensornet", "index crosses more than two lattice sites");
    bonds[{sites[0], sites[1]}].push_back(id);
  }
  for (auto id : fine->open_indices()) {
    for (int nid : table[static_cast<std::size_t>(to_int(id))]) {
      if (fine->node(nid).site != fine->index(id).owner) throw Error("tensornet", "open index crosses sites");
    }
  }

  TensorNetwork coarse(input.rows(), input.cols());
  std::map<std::pair<int, int>, IndexId> bond_ids;
  for (const auto& [key, parts] : bonds) {
    std::int64_t d = 1;
    for (auto id : parts) d *= fine->dim(id);
    bond_ids[key] = coarse.add_index(d, -1);
  }
  std::vector<IndexId> coarse_open;
  std::map<int, IndexId> open_of_fine;
  for (auto id : fine->open_indices()) {
    const IndexId c = coarse.add_index(fine->dim(id), fine->index(id).owner);
    coarse_open.push_back(c);
    open_of_fine[to_int(id)] = c;
  }
  for (int s = 0; s < num_sites; ++s) {
    const auto& mem = members[static_cast<std::size_t>(s)];
    if (mem.empty()) continue;
    auto g = std::make_shared<GroupData>();
    g->fine = fine;
    g->members = mem;
    g->sub_path = linear_path(static_cast<int>(mem.size()));
    std::vector<IndexId> legs;
    for (const auto& [key, parts] : bonds) {
      if (key.first != s && key.second != s) continue;
      legs.push_back(bond_ids[key]);
      g->leg_parts.push_back(parts);
    }
    for (auto id : fine->open_indices()) {
      if (fine->index(id).owner != s) continue;
      legs.push_back(open_of_fine[to_int(id)]);
      g->leg_parts.push_back({id});
    }
    coarse.add_node({NodeOrigin::Merged, std::move(legs), GroupSource{std::move(g)}, s});
  }
  coarse.set_open_indices(std::move(coarse_open));
  coarse.validate();
  return coarse;
}

int bond_between(const TensorNetwork& coarse, int site_a, int site_b) {
  const TensorNode* a = nullptr;
  const TensorNode* b = nullptr;
  for (const auto& n : coarse.nodes()) {
    if (n.site == site_a) a = &n;
    if (n.site == site_b) b = &n;
  }
  if (!a || !b) return -1;
  for (auto id : a->indices) {
    if (std::find(b->indices.begin(), b->indices.end(), id) != b->indices.end()) return to_int(id);
  }
  return -1;
}

std::string network_to_json(const TensorNetwork& net) {
  nlohmann::json j;
  j["rows"] = net.rows();
  j["cols"] = net.cols();
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (std::size_t n = 0; n < net.num_nodes(); ++n) {
    const auto& node = net.node(static_cast<int>(n));
    nlohmann::json jn;
    jn["id"] = n;
    jn["origin"] = node_origin_name(node.origin);
    jn["site"] = node.site;
    std::vector<int> idx;
    for (auto id : node.indices) idx.push_back(to_int(id));
    jn["indices"] = idx;
    jn["dims"] = net.dims_of(node.indices);
    nodes.push_back(std::move(jn));
  }
  std::vector<int> open;
  for (auto id : net.open_indices()) open.push_back(to_int(id));
  j["open_indices"] = open;
  return j.dump(1);
}

template Tensor<float> materialize<float>(const TensorNetwork&, int, const IndexPins&, FlopCounter*);
template Tensor<double> materialize<double>(const TensorNetwork&, int, const IndexPins&, FlopCounter*);
template Tensor<float> contract_network<float>(const TensorNetwork&, std::span<const std::pair<int, int>>,
                                               const ContractOptions<float>&);
template Tensor<double> contract_network<double>(const TensorNetwork&, std::span<const std::pair<int, int>>,
                                                 const ContractOptions<double>&);

}  // namespace rqcsim
