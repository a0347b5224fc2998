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

#include "rqcsim/circuit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace rqcsim {

namespace {

using cd = std::complex<double>;

// cos/sin with the rounding residue of angles like pi/2 snapped to zero, so
// structural zeros of the gate stay exact.
double snapped(double v) { return std::abs(v) < 1e-15 ? 0.0 : v; }

struct TagInfo {
  GateTag tag;
  std::string_view name;
  int arity;
  int params;
};

constexpr std::array<TagInfo, 8> kTags{{
    {GateTag::H, "h", 1, 0},
    {GateTag::SqrtX, "sx", 1, 0},
    {GateTag::SqrtY, "sy", 1, 0},
    {GateTag::SqrtW, "sw", 1, 0},
    {GateTag::T, "t", 1, 0},
    {GateTag::CZ, "cz", 2, 0},
    {GateTag::ISwap, "iswap", 2, 0},
    {GateTag::FSim, "fsim", 2, 2},
}};

const TagInfo& info(GateTag tag) { return kTags[static_cast<std::size_t>(tag)]; }

bool tag_from_name(std::string_view name, GateTag& out) {
  for (const auto& t : kTags) {
    if (t.name == name) {
      out = t.tag;
      return true;
    }
  }
  return false;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_int(std::string_view s, int& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && p == end;
}

bool parse_double(std::string_view s, double& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && p == end;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

int gate_arity(GateTag tag) noexcept { return info(tag).arity; }
int gate_param_count(GateTag tag) noexcept { return info(tag).params; }
std::string_view gate_tag_name(GateTag tag) noexcept { return info(tag).name; }

bool gate_is_diagonal(GateTag tag, const std::array<double, 2>& params) noexcept {
  switch (tag) {
    case GateTag::T:
    case GateTag::CZ:
      return true;
    case GateTag::FSim:
      return std::sin(params[0]) == 0.0 && std::cos(params[0]) == 1.0;
    default:
      return false;
  }
}

Gate make_gate(GateTag tag, int cycle, int q0) {
  Gate g;
  g.tag = tag;
  g.cycle = cycle;
  g.qubits = {q0, q0};
  return g;
}

Gate make_gate(GateTag tag, int cycle, int q0, int q1) {
  Gate g;
  g.tag = tag;
  g.cycle = cycle;
  g.qubits = {q0, q1};
  return g;
}

Gate make_fsim(int cycle, int q0, int q1, double theta, double phi) {
  Gate g = make_gate(GateTag::FSim, cycle, q0, q1);
  g.params = {theta, phi};
  return g;
}

UnitaryMatrix gate_unitary(const Gate& g) {
  UnitaryMatrix u;
  const double r2 = std::numbers::sqrt2 / 2.0;
  const cd i{0.0, 1.0};
  const cd p{0.5, 0.5};   // (1+i)/2
  const cd m{0.5, -0.5};  // (1-i)/2
  switch (g.tag) {
    case GateTag::H:
      u.dim = 2;
      u(0, 0) = r2;
      u(0, 1) = r2;
      u(1, 0) = r2;
      u(1, 1) = -r2;
      break;
    case GateTag::SqrtX:
      u.dim = 2;
      u(0, 0) = p;
      u(0, 1) = m;
      u(1, 0) = m;
      u(1, 1) = p;
      break;
    case GateTag::SqrtY:
      u.dim = 2;
      u(0, 0) = p;
      u(0, 1) = -p;
      u(1, 0) = p;
      u(1, 1) = p;
      break;
    case GateTag::SqrtW:
      // (1+i)/2 I + (1-i)/2 W with W = (X+Y)/sqrt2
      u.dim = 2;
      u(0, 0) = p;
      u(0, 1) = -i * r2;
      u(1, 0) = r2;
      u(1, 1) = p;
      break;
    case GateTag::T:
      u.dim = 2;
      u(0, 0) = 1.0;
      u(1, 1) = std::polar(1.0, std::numbers::pi / 4.0);
      break;
    case GateTag::CZ:
      u.dim = 4;
      u(0, 0) = 1.0;
      u(1, 1) = 1.0;
      u(2, 2) = 1.0;
      u(3, 3) = -1.0;
      break;
    case GateTag::ISwap:
      u.dim = 4;
      u(0, 0) = 1.0;
      u(1, 2) = i;
      u(2, 1) = i;
      u(3, 3) = 1.0;
      break;
    case GateTag::FSim: {
      const double theta = g.params[0];
      const double phi = g.params[1];
      u.dim = 4;
      u(0, 0) = 1.0;
      u(1, 1) = snapped(std::cos(theta));
      u(1, 2) = -i * snapped(std::sin(theta));
      u(2, 1) = -i * snapped(std::sin(theta));
      u(2, 2) = snapped(std::cos(theta));
      u(3, 3) = cd(snapped(std::cos(phi)), -snapped(std::sin(phi)));
      break;
    }
  }
  return u;
}

double unitarity_defect(const UnitaryMatrix& u) {
  double worst = 0.0;
  for (int r = 0; r < u.dim; ++r) {
    for (int c = 0; c < u.dim; ++c) {
      cd acc = 0.0;
      for (int k = 0; k < u.dim; ++k) acc += std::conj(u(k, r)) * u(k, c);
      if (r == c) acc -= 1.0;
      worst = std::max(worst, std::abs(acc));
    }
  }
  return worst;
}

Circuit::Circuit(int rows, int cols, std::vector<int> disabled)
    : rows_(rows), cols_(cols), disabled_(std::move(disabled)) {
  if (rows < 1 || cols < 1) throw Error("circuit", "lattice dimensions must be positive");
  std::sort(disabled_.begin(), disabled_.end());
  disabled_.erase(std::unique(disabled_.begin(), disabled_.end()), disabled_.end());
  for (int q : disabled_) {
    if (q < 0 || q >= num_qubits()) throw Error("circuit", "disabled qubit out of range");
  }
}

bool Circuit::is_disabled(int q) const noexcept {
  return std::binary_search(disabled_.begin(), disabled_.end(), q);
}

std::size_t Circuit::gate_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : cycles_) n += layer.size();
  return n;
}

void Circuit::ensure_cycles(int count) {
  if (static_cast<int>(cycles_.size()) < count) cycles_.resize(static_cast<std::size_t>(count));
}

void Circuit::add_gate(const Gate& g) {
  if (g.cycle < 0) throw Error("circuit", "negative cycle");
  ensure_cycles(g.cycle + 1);
  cycles_[static_cast<std::size_t>(g.cycle)].push_back(g);
}

bool Circuit::adjacent(int a, int b) const noexcept {
  const int ra = a / cols_, ca = a % cols_;
  const int rb = b / cols_, cb = b % cols_;
  return std::abs(ra - rb) + std::abs(ca - cb) == 1;
}

void Circuit::validate() const {
  const int n = num_qubits();
  std::vector<int> seen(static_cast<std::size_t>(n), -1);
  for (std::size_t c = 0; c < cycles_.size(); ++c) {
    for (const Gate& g : cycles_[c]) {
      if (g.cycle != static_cast<int>(c)) throw Error("circuit", "gate stored under the wrong cycle");
      for (int k = 0; k < g.arity(); ++k) {
        const int q = g.qubits[static_cast<std::size_t>(k)];
        if (q < 0 || q >= n) {
          throw Error("circuit", "qubit " + std::to_string(q) + " out of range in cycle " +
                                     std::to_string(c));
        }
        if (is_disabled(q)) {
          throw Error("circuit", "gate on disabled qubit " + std::to_string(q));
        }
        if (seen[static_cast<std::size_t>(q)] == static_cast<int>(c)) {
          throw Error("circuit", "qubit " + std::to_string(q) + " used twice in cycle " +
                                     std::to_string(c));
        }
        seen[static_cast<std::size_t>(q)] = static_cast<int>(c);
      }
      if (g.arity() == 2) {
        if (g.qubits[0] == g.qubits[1]) throw Error("circuit", "two-qubit gate on a single qubit");
        if (!adjacent(g.qubits[0], g.qubits[1])) {
          throw Error("circuit", "two-qubit gate on non-adjacent qubits " +
                                     std::to_string(g.qubits[0]) + "," +
                                     std::to_string(g.qubits[1]));
        }
      }
    }
  }
}

Circuit parse_circuit(std::string_view text) {
  std::vector<std::pair<int, std::string_view>> lines;
  {
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      ++lineno;
      std::string_view line = text.substr(pos, end - pos);
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      if (!split_ws(line).empty()) lines.emplace_back(lineno, line);
      pos = end + 1;
    }
  }
  if (lines.empty()) throw ParseError(1, "missing header line");

  const auto header = split_ws(lines.front().second);
  int rows = 0, cols = 0;
  if (header.size() < 2 || !parse_int(header[0], rows) || !parse_int(header[1], cols) ||
      rows < 1 || cols < 1) {
    throw ParseError(lines.front().first, "header must be 'rows cols [disabled qubits]'");
  }
  std::vector<int> disabled;
  for (std::size_t k = 2; k < header.size(); ++k) {
    int q = 0;
    if (!parse_int(header[k], q) || q < 0 || q >= rows * cols) {
      throw ParseError(lines.front().first, "bad disabled qubit '" + std::string(header[k]) + "'");
    }
    disabled.push_back(q);
  }
  Circuit circuit(rows, cols, disabled);

  struct Pending {
    Gate gate;
    int line;
  };
  std::vector<Pending> gates;
  std::vector<int> declared;
  int max_cycle = -1;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto [lineno, line] = lines[li];
    const auto tok = split_ws(line);
    int cycle = 0;
    if (!parse_int(tok[0], cycle) || cycle < 0) throw ParseError(lineno, "bad cycle number");
    max_cycle = std::max(max_cycle, cycle);
    declared.push_back(cycle);
    if (tok.size() == 1) continue;  // empty-cycle marker

    GateTag tag{};
    if (!tag_from_name(tok[1], tag)) {
      throw ParseError(lineno, "unknown gate tag '" + std::string(tok[1]) + "'");
    }
    const int arity = gate_arity(tag);
    const int nparams = gate_param_count(tag);
    if (static_cast<int>(tok.size()) != 2 + arity + nparams) {
      throw ParseError(lineno, "gate '" + std::string(tok[1]) + "' expects " +
                                   std::to_string(arity) + " qubit(s) and " +
                                   std::to_string(nparams) + " parameter(s)");
    }
    Gate g;
    g.tag = tag;
    g.cycle = cycle;
    for (int k = 0; k < arity; ++k) {
      int q = 0;
      if (!parse_int(tok[static_cast<std::size_t>(2 + k)], q)) throw ParseError(lineno, "bad qubit index");
      if (q < 0 || q >= rows * cols) {
        throw ParseError(lineno, "qubit " + std::to_string(q) + " out of range");
      }
      g.qubits[static_cast<std::size_t>(k)] = q;
    }
    if (arity == 1) g.qubits[1] = g.qubits[0];
    for (int k = 0; k < nparams; ++k) {
      double v = 0.0;
      if (!parse_double(tok[static_cast<std::size_t>(2 + arity + k)], v)) {
        throw ParseError(lineno, "bad gate parameter");
      }
      g.params[static_cast<std::size_t>(k)] = v;
    }
    gates.push_back({g, lineno});
  }

  std::sort(declared.begin(), declared.end());
  declared.erase(std::unique(declared.begin(), declared.end()), declared.end());
  for (std::size_t k = 0; k < declared.size(); ++k) {
    if (declared[k] != static_cast<int>(k)) {
      throw ParseError(lines.back().first, "cycle numbers are not contiguous from 0 (missing cycle " +
                                               std::to_string(k) + ")");
    }
  }

  circuit.ensure_cycles(max_cycle + 1);
  std::stable_sort(gates.begin(), gates.end(),
                   [](const Pending& a, const Pending& b) { return a.gate.cycle < b.gate.cycle; });
  for (const auto& p : gates) {
    circuit.add_gate(p.gate);
    try {
      circuit.validate();
    } catch (const Error& e) {
      throw ParseError(p.line, e.what());
    }
  }
  return circuit;
}

std::string serialize_circuit(const Circuit& c) {
  std::ostringstream out;
  out << c.rows() << ' ' << c.cols();
  for (int q : c.disabled()) out << ' ' << q;
  out << '\n';
  for (std::size_t k = 0; k < c.cycles().size(); ++k) {
    const auto& layer = c.cycles()[k];
    if (layer.empty()) {
      out << k << '\n';
      continue;
    }
    for (const Gate& g : layer) {
      out << k << ' ' << gate_tag_name(g.tag);
      for (int a = 0; a < g.arity(); ++a) out << ' ' << g.qubits[static_cast<std::size_t>(a)];
      for (int a = 0; a < gate_param_count(g.tag); ++a) {
        out << ' ' << format_double(g.params[static_cast<std::size_t>(a)]);
      }
      out << '\n';
    }
  }
  return out.str();
}

std::vector<std::array<int, 2>> coupler_pattern(int rows, int cols, int pattern, CircuitStyle style) {
  bool vertical = false;
  int k = 0;
  int period = 4;
  if (style == CircuitStyle::CZ) {
    // Horizontal classes take (r,c)-(r,c+1) with (c + 2r) % 4 == k; vertical
    // classes take (r,c)-(r+1,c) with (r + 2c) % 4 == k.
    static constexpr std::array<std::array<int, 2>, 8> kOrder{
        {{0, 0}, {1, 0}, {0, 2}, {1, 2}, {0, 1}, {1, 1}, {0, 3}, {1, 3}}};
    vertical = kOrder[static_cast<std::size_t>(pattern % 8)][0] != 0;
    k = kOrder[static_cast<std::size_t>(pattern % 8)][1];
  } else {
    // A B C D C D A B over the four checkerboard matchings.
    static constexpr std::array<int, 8> kOrder{0, 1, 2, 3, 2, 3, 0, 1};
    vertical = kOrder[static_cast<std::size_t>(pattern % 8)] >= 2;
    k = kOrder[static_cast<std::size_t>(pattern % 8)] % 2;
    period = 2;
  }
  std::vector<std::array<int, 2>> pairs;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!vertical) {
        const int cls = period == 4 ? (c + 2 * r) % 4 : (c + r) % 2;
        if (c + 1 < cols && cls == k) pairs.push_back({r * cols + c, r * cols + c + 1});
      } else {
        const int cls = period == 4 ? (r + 2 * c) % 4 : (r + c) % 2;
        if (r + 1 < rows && cls == k) pairs.push_back({r * cols + c, (r + 1) * cols + c});
      }
    }
  }
  return pairs;
}

Circuit generate_rqc(int rows, int cols, int depth, std::uint64_t seed, CircuitStyle style,
                     std::vector<int> disabled) {
  if (depth < 0) throw Error("circuit", "depth must be non-negative");
  Circuit c(rows, cols, std::move(disabled));
  const int n = c.num_qubits();
  std::mt19937_64 rng(seed);
  const bool fsim = style == CircuitStyle::FSIM;

  const std::array<GateTag, 3> singles =
      fsim ? std::array<GateTag, 3>{GateTag::SqrtX, GateTag::SqrtY, GateTag::SqrtW}
           : std::array<GateTag, 3>{GateTag::SqrtX, GateTag::SqrtY, GateTag::T};
  // Index into `singles` of the previous single-qubit gate on each qubit; -1 = none.
  std::vector<int> last(static_cast<std::size_t>(n), -1);
  auto add_single = [&](int layer, int q) {
    int pick = static_cast<int>(rng() % 3);
    if (pick == last[static_cast<std::size_t>(q)]) {
      // Draw from the two remaining gates.
      pick = (pick + 1 + static_cast<int>(rng() % 2)) % 3;
    }
    last[static_cast<std::size_t>(q)] = pick;
    c.add_gate(make_gate(singles[static_cast<std::size_t>(pick)], layer, q));
  };

  // FSIM cycles take two layers: single-qubit gates on every qubit, then fSim.
  const int middle = fsim ? 2 * depth : depth;
  c.ensure_cycles(middle + 2);
  for (int q = 0; q < n; ++q) {
    if (!c.is_disabled(q)) c.add_gate(make_gate(GateTag::H, 0, q));
  }

  int layer = 1;
  for (int cycle = 0; cycle < depth; ++cycle) {
    if (fsim) {
      for (int q = 0; q < n; ++q) {
        if (!c.is_disabled(q)) add_single(layer, q);
      }
      ++layer;
    }
    std::vector<char> busy(static_cast<std::size_t>(n), 0);
    for (const auto& [q0, q1] : coupler_pattern(rows, cols, cycle % 8, style)) {
      if (c.is_disabled(q0) || c.is_disabled(q1)) continue;
      if (fsim) {
        c.add_gate(make_fsim(layer, q0, q1, std::numbers::pi / 2.0, std::numbers::pi / 6.0));
      } else {
        c.add_gate(make_gate(GateTag::CZ, layer, q0, q1));
      }
      busy[static_cast<std::size_t>(q0)] = 1;
      busy[static_cast<std::size_t>(q1)] = 1;
    }
    if (!fsim) {
      for (int q = 0; q < n; ++q) {
        if (!busy[static_cast<std::size_t>(q)] && !c.is_disabled(q)) add_single(layer, q);
      }
    }
    ++layer;
  }

  if (!fsim) {
    for (int q = 0; q < n; ++q) {
      if (!c.is_disabled(q)) c.add_gate(make_gate(GateTag::H, layer, q));
    }
  }
  return c;
}

std::uint64_t circuit_hash(const Circuit& c) {
  Fnv1a h;
  h.update(serialize_circuit(c));
  return h.digest();
}

}  // namespace rqcsim
