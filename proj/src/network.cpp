#include "mfgswitch/network.hpp"

#include <bit>

#include "mfgswitch/errors.hpp"

namespace mfg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadInterval: return "BadInterval";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotAdmissible: return "NotAdmissible";
    case ErrorCode::BadTimes: return "BadTimes";
    case ErrorCode::InvalidTerminalState: return "InvalidTerminalState";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::DegenerateCost: return "DegenerateCost";
    case ErrorCode::NotAPath: return "NotAPath";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::BoundaryQuery: return "BoundaryQuery";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BadCoefficients: return "BadCoefficients";
    case ErrorCode::PathExplosion: return "PathExplosion";
    case ErrorCode::BadSlope: return "BadSlope";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Node::Node(int num_targets, std::uint32_t id) : n_(num_targets), id_(id) {
  if (num_targets < 1 || num_targets > 31) {
    throw Error(ErrorCode::OutOfRange, "number of targets must be in [1, 31]");
  }
  if (id >= (1u << num_targets)) {
    throw Error(ErrorCode::OutOfRange, "node id " + std::to_string(id) + " exceeds 2^N - 1");
  }
}

Node Node::destination(int num_targets) {
  return Node(num_targets, (1u << num_targets) - 1u);
}

Node Node::from_bits(const std::string& bits) {
  std::uint32_t id = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      id |= 1u << i;
    } else if (bits[i] != '0') {
      throw Error(ErrorCode::OutOfRange, "bit string may only contain 0 and 1: " + bits);
    }
  }
  return Node(static_cast<int>(bits.size()), id);
}

int Node::ones_count() const noexcept { return std::popcount(id_); }

std::string Node::bits() const {
  std::string s(static_cast<std::size_t>(n_), '0');
  for (int i = 0; i < n_; ++i) {
    if (bit(i)) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

std::size_t node_count(int num_targets, int max_targets) {
  if (num_targets < 1 || num_targets > max_targets) {
    throw Error(ErrorCode::OutOfRange, "N = " + std::to_string(num_targets) +
                                           " outside [1, " + std::to_string(max_targets) + "]");
  }
  return std::size_t{1} << num_targets;
}

std::vector<Node> successors(const Node& p) {
  std::vector<Node> out;
  for (int i = 0; i < p.num_targets(); ++i) {
    if (!p.bit(i)) out.emplace_back(p.num_targets(), p.id() | (1u << i));
  }
  return out;
}

int ones_count(const Node& p) { return p.ones_count(); }

bool is_successor(const Node& p, const Node& q) {
  if (p.num_targets() != q.num_targets()) return false;
  const std::uint32_t diff = q.id() ^ p.id();
  return p.dominated_by(q) && std::popcount(diff) == 1;
}

namespace {

void extend(const Node& at, const Node& to, std::vector<Node>& prefix,
            std::vector<std::vector<Node>>& out) {
  if (at == to) {
    out.push_back(prefix);
    return;
  }
  for (const Node& q : successors(at)) {
    if (!q.dominated_by(to)) continue;
    prefix.push_back(q);
    extend(q, to, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<std::vector<Node>> enumerate_node_paths(const Node& from, const Node& to) {
  if (from.num_targets() != to.num_targets() || !from.dominated_by(to)) {
    throw Error(ErrorCode::EmptyResult, "node " + to.bits() + " does not dominate " + from.bits());
  }
  std::vector<std::vector<Node>> out;
  std::vector<Node> prefix{from};
  extend(from, to, prefix, out);
  return out;
}

bool is_admissible(const SwitchPath& path, double horizon, std::string* why) {
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (path.nodes.empty() || path.nodes.size() != path.times.size()) {
    return fail("nodes and times must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    if (!is_successor(path.nodes[i], path.nodes[i + 1])) return fail("consecutive nodes are not a switch");
    if (!(path.times[i] < path.times[i + 1])) return fail("instants must be strictly increasing");
  }
  const double last = path.times.back();
  if (path.times.front() < 0.0 || last > horizon) return fail("instants outside [0, T]");
  if (!path.nodes.back().is_destination() && last != horizon) {
    return fail("a path not ending at the destination must end at T");
  }
  return true;
}

}  // namespace mfg
