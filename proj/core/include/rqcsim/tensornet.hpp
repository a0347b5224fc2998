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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rqcsim/circuit.hpp"
#include "rqcsim/engine.hpp"

namespace rqcsim {

enum class NodeOrigin : std::uint8_t { Gate, Input, Output, Merged };

[[nodiscard]] std::string_view node_origin_name(NodeOrigin o) noexcept;

class TensorNetwork;

/// Gate tensor built from gate_unitary on demand. Full form has indices
/// [out..., in...]; diagonal form has only [in...] and holds the diagonal.
struct GateSource {
  Gate gate;
  bool diagonal_form = false;
};

/// Computational-basis vector e_bit (|0> inputs, fixed output bits).
struct BasisSource {
  int bit = 0;
};

struct DenseSource {
  std::shared_ptr<const TensorD> tensor;  // labels match the node's indices
};

/// A coarse node standing for a connected group of nodes of a finer
/// network. Each outer leg fuses several fine indices; the first listed
/// fine index is the most significant digit of the fused value.
struct GroupData {
  std::shared_ptr<const TensorNetwork> fine;
  std::vector<int> members;                      // fine node ids
  std::vector<std::pair<int, int>> sub_path;     // SSA over members
  std::vector<std::vector<IndexId>> leg_parts;   // per coarse leg
};

struct GroupSource {
  std::shared_ptr<const GroupData> group;
};

using NodeSource = std::variant<GateSource, BasisSource, DenseSource, GroupSource>;

struct TensorNode {
  NodeOrigin origin = NodeOrigin::Gate;
  std::vector<IndexId> indices;
  NodeSource source;
  int site = -1;  // lattice qubit the node is attributed to
};

struct IndexInfo {
  std::int64_t dim = 2;
  int owner = -1;  // qubit whose worldline the index belongs to, -1 if none
};

/// Hypergraph of tensors. Node ids are positions in nodes(); index ids are
/// positions in the index table. An index may touch any number of nodes.
class TensorNetwork {
 public:
  TensorNetwork() = default;
  TensorNetwork(int rows, int cols) : rows_(rows), cols_(cols) {}

  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }

  IndexId add_index(std::int64_t dim, int owner = -1);
  int add_node(TensorNode node);

  [[nodiscard]] const std::vector<TensorNode>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::vector<TensorNode>& nodes() noexcept { return nodes_; }
  [[nodiscard]] std::size_t num_nodes() const noexcept { return nodes_.size(); }
  [[nodiscard]] const TensorNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

  [[nodiscard]] std::size_t num_index_slots() const noexcept { return indices_.size(); }
  [[nodiscard]] const IndexInfo& index(IndexId id) const { return indices_.at(static_cast<std::size_t>(to_int(id))); }
  [[nodiscard]] std::int64_t dim(IndexId id) const { return index(id).dim; }
  [[nodiscard]] std::vector<std::int64_t> dims_of(const std::vector<IndexId>& ids) const;

  [[nodiscard]] const std::vector<IndexId>& open_indices() const noexcept { return open_; }
  void set_open_indices(std::vector<IndexId> open) { open_ = std::move(open); }
  [[nodiscard]] bool is_open(IndexId id) const noexcept;

  /// index id -> incident node ids (ascending), the transpose of node index lists.
  [[nodiscard]] std::vector<std::vector<int>> index_table() const;

  /// Throws Error("tensornet", ...) if an index is unknown, a node repeats an
  /// index, or a closed index touches fewer than two nodes.
  void validate() const;

  /// Drops indices touched by no node and not open, renumbering the rest in
  /// order of first use. Node order is kept.
  void compact_indices();

  friend bool structurally_equal(const TensorNetwork& a, const TensorNetwork& b);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<TensorNode> nodes_;
  std::vector<IndexInfo> indices_;
  std::vector<IndexId> open_;
};

/// Same node index lists, origins, index dims and open list.
[[nodiscard]] bool structurally_equal(const TensorNetwork& a, const TensorNetwork& b);

/// Network whose full contraction is <fixed, x| U |0...0> over the open qubits
/// x. `fixed_bits` has one entry per qubit; entries of open qubits are
/// ignored. Open index j of the result belongs to open_qubits[j].
[[nodiscard]] TensorNetwork build_network(const Circuit& c, const Bitstring& fixed_bits,
                                          const std::vector<int>& open_qubits = {});

/// Rewrites diagonal gates in diagonal form: the gate keeps only its input
/// legs and each output leg is merged into the input leg (a hyperedge).
[[nodiscard]] TensorNetwork diagonalize(const TensorNetwork& net);

/// Semantics-preserving reduction to a fixpoint: diagonal gates become
/// hyperedges, rank <= 2 nodes are absorbed into a neighbour, and parallel
/// indices joining the same nodes are fused. Touched payloads become dense.
[[nodiscard]] TensorNetwork simplify(const TensorNetwork& net);

struct NetworkStats {
  std::size_t num_nodes = 0;
  std::size_t num_indices = 0;
  int max_rank = 0;
  double log2_total_dim = 0.0;  // log2 of the summed element counts of all nodes
};

[[nodiscard]] NetworkStats network_stats(const TensorNetwork& net);

using IndexPins = std::vector<std::pair<IndexId, std::int64_t>>;

/// Builds the tensor of node `id` with the pinned indices fixed and removed.
/// Flops spent on group members are added to `group_flops`.
template <typename Real>
[[nodiscard]] Tensor<Real> materialize(const TensorNetwork& net, int id, const IndexPins& pins = {},
                                       FlopCounter* group_flops = nullptr);

/// Per-step hook: (result tensor, step index, height of the step in the tree).
template <typename Real>
using StepHook = std::function<void(Tensor<Real>&, std::size_t, int)>;

struct ContractStats {
  int max_rank = 0;
  std::int64_t peak_elements = 0;  // largest tensor alive at any step
};

template <typename Real>
struct ContractOptions {
  IndexPins pins;
  std::int64_t max_elements = 0;  // 0 = unlimited
  FlopCounter* flops = nullptr;
  FlopCounter* group_flops = nullptr;
  StepHook<Real> after_step;
  ContractStats* stats = nullptr;
  bool use_naive = false;
};

/// Contracts the whole network along an SSA path (leaves 0..n-1, step i
/// creates id n+i). Returns a tensor over open_indices() in that order.
template <typename Real>
[[nodiscard]] Tensor<Real> contract_network(const TensorNetwork& net, std::span<const std::pair<int, int>> path,
                                            const ContractOptions<Real>& options = {});

/// Left-to-right SSA path over n leaves.
[[nodiscard]] std::vector<std::pair<int, int>> linear_path(int n);

/// Result labels of contracting two operands. live_count[i] counts the live
/// operands carrying index i, plus one if i must survive (open or external);
/// a shared label survives when the count exceeds 2.
[[nodiscard]] std::vector<IndexId> contraction_output(const std::vector<IndexId>& a, const std::vector<IndexId>& b,
                                                      const std::vector<int>& live_count);

/// Coarse network with one merged node per lattice site (qubit). Diagonal
/// two-qubit gates sit on their lower qubit; legs a node shares with another
/// site's worldline are rerouted through delta nodes so that every bond
/// joins exactly two sites, and parallel bonds are fused.
[[nodiscard]] TensorNetwork coarsen_to_sites(const TensorNetwork& net);

/// Id of the coarse index joining two sites, or -1.
[[nodiscard]] int bond_between(const TensorNetwork& coarse, int site_a, int site_b);

/// JSON export: nodes with index lists and dims, open indices.
[[nodiscard]] std::string network_to_json(const TensorNetwork& net);

}  // namespace rqcsim
