#pragma once

#include "ultraco/aco.hpp"
#include "ultraco/errors.hpp"
#include "ultraco/iteration.hpp"
#include "ultraco/ultrametric.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace ultraco::routing {

using NodeId = std::size_t;
using PathId = std::size_t;

/// Node sequence from the source to the destination, both inclusive.
/// The empty path ε at the destination is the one-element sequence {d}.
using Path = std::vector<NodeId>;

/// A set of paths as a bitmask over PathId; instances hold at most 64 paths.
using PathSet = std::uint64_t;

inline constexpr PathId kNoPath = static_cast<PathId>(-1);
inline constexpr std::size_t kMaxPaths = 64;

struct Arc {
  NodeId from;
  NodeId to;
  friend bool operator==(const Arc &, const Arc &) = default;
};

/// How the path preorder is supplied. For the explicit kind, `weak` pairs
/// (p, q) mean p ⪯ q and `strict` pairs mean p ≺ q; the preorder is the
/// reflexive-transitive closure of both.
struct PreferenceSpec {
  enum class Kind { hop_count, explicit_pairs };
  Kind kind = Kind::hop_count;
  std::vector<std::pair<Path, Path>> weak;
  std::vector<std::pair<Path, Path>> strict;
};

/// The declared preference closes into a relation in which some declared
/// strict pair also holds in reverse.
class PreferenceCycleError : public MalformedInputError {
public:
  PreferenceCycleError(const std::string &what, std::vector<Path> cycle)
      : MalformedInputError(what), cycle_(std::move(cycle)) {}
  [[nodiscard]] const std::vector<Path> &cycle() const { return cycle_; }

private:
  std::vector<Path> cycle_;
};

/// All simple directed paths to `dest`, including ε, ordered by length and
/// then lexicographically by node id. Throws SizeLimitError past kMaxPaths.
std::vector<Path> enumerate_paths(std::size_t node_count, NodeId dest,
                                  const std::vector<Arc> &arcs);

/// A multipath stable paths problem: graph, destination, per-node permitted
/// paths and a preorder ⪯ over every simple path to the destination (smaller
/// is better).
class SppInstance {
public:
  /// `permitted[i]` nullopt means every simple path from i is permitted.
  SppInstance(std::vector<std::string> nodes, NodeId dest, std::vector<Arc> arcs,
              std::vector<std::optional<std::vector<Path>>> permitted,
              PreferenceSpec preference);

  [[nodiscard]] const std::vector<std::string> &nodes() const { return nodes_; }
  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  [[nodiscard]] NodeId dest() const { return dest_; }
  [[nodiscard]] const std::vector<Arc> &arcs() const { return arcs_; }
  [[nodiscard]] const PreferenceSpec &preference() const { return preference_; }
  [[nodiscard]] std::optional<NodeId> node_id(std::string_view name) const;

  /// The enumerated path universe.
  [[nodiscard]] const std::vector<Path> &paths() const { return paths_; }
  [[nodiscard]] std::size_t path_count() const { return paths_.size(); }
  [[nodiscard]] const Path &path(PathId p) const { return paths_[p]; }
  [[nodiscard]] std::optional<PathId> path_id(const Path &path) const;
  [[nodiscard]] NodeId source(PathId p) const { return paths_[p].front(); }
  [[nodiscard]] PathId epsilon() const { return epsilon_; }

  [[nodiscard]] PathSet permitted_at(NodeId i) const { return permitted_[i]; }
  [[nodiscard]] PathSet permitted_all() const { return permitted_all_; }
  [[nodiscard]] bool is_permitted(PathId p) const {
    return (permitted_all_ >> p) & 1U;
  }

  /// p ⪯ q in the closed preorder.
  [[nodiscard]] bool prefers_weakly(PathId p, PathId q) const {
    return leq_[p * paths_.size() + q];
  }
  /// p ≺ q: p ⪯ q and not q ⪯ p.
  [[nodiscard]] bool prefers_strictly(PathId p, PathId q) const {
    return prefers_weakly(p, q) && !prefers_weakly(q, p);
  }

  /// (i j)p where j is p's source, if the arc exists and the result is simple.
  [[nodiscard]] PathId extension(PathId p, NodeId i) const {
    return extension_[p * nodes_.size() + i];
  }

  /// "ε" or "(1 2 d)".
  [[nodiscard]] std::string path_label(PathId p) const;
  /// "{ε, (1 d)}".
  [[nodiscard]] std::string set_label(PathSet s) const;

  /// Reads {"nodes", "dest", "arcs", "permitted"?, "preference"?}.
  /// Throws MalformedInputError (PreferenceCycleError for cyclic preferences).
  static SppInstance from_json(const nlohmann::json &doc);
  static SppInstance load(const std::string &path);

private:
  std::vector<std::string> nodes_;
  NodeId dest_;
  std::vector<Arc> arcs_;
  PreferenceSpec preference_;
  std::vector<Path> paths_;
  PathId epsilon_ = kNoPath;
  std::vector<PathSet> permitted_;
  PathSet permitted_all_ = 0;
  std::vector<bool> leq_;
  std::vector<PathId> extension_;
};

struct InflationReport {
  bool pass = true;
  /// First permitted extension (i j)p with p ≺ (i j)p failing.
  std::optional<std::pair<Arc, PathId>> witness;
  /// Strict cycle obtained by closing the declared preorder together with the
  /// required p ≺ (i j)p constraints; first element repeated at the end.
  std::vector<PathId> cycle;
};

InflationReport check_strictly_inflationary(const SppInstance &instance);

/// h(p) = |{q : p ⪯ q}| over the path universe.
std::vector<std::uint32_t> path_height(const SppInstance &instance);

/// Best permitted one-arc extensions of the neighbours' sets; {ε} at d.
PathSet sigma_step(const SppInstance &instance, PathSet state);

/// Paths of `state` whose source is `node`.
PathSet node_view(const SppInstance &instance, PathSet state, NodeId node);

/// 0 if m == n, else max h(p) over the symmetric difference.
std::uint32_t state_distance(std::span<const std::uint32_t> heights, PathSet m,
                             PathSet n);

/// Every subset of the permitted paths, in increasing bitmask order of the
/// compressed permitted index. Throws SizeLimitError past 2^max_paths states.
std::vector<PathSet> enumerate_states(const SppInstance &instance,
                                      std::size_t max_paths = 12);

/// The enumerated state space with state_distance, scale 0..|Paths|.
ultrametric::FiniteUltrametricSpace state_space(const SppInstance &instance,
                                                std::size_t max_paths = 12);

struct StrictContractionReport {
  bool pass = true;
  std::size_t states = 0;
  std::optional<std::pair<PathSet, PathSet>> counterexample;
};

/// d(σm, σn) < d(m, n) over every pair of distinct states.
StrictContractionReport verify_strict_contraction(const SppInstance &instance,
                                                  std::size_t max_paths = 12);

enum class Granularity { per_node, per_nexthop, per_path };

/// "per-node", "per-source-destination-nexthop" (or "per-nexthop"),
/// "per-path". Throws MalformedInputError otherwise.
Granularity parse_granularity(std::string_view label);
std::string_view to_string(Granularity g);

/// sigma split over processors that each own a group of permitted paths.
/// Component value v of processor i is the subset {groups[i][b] : bit b of v}.
struct Decomposition {
  Granularity granularity;
  std::vector<std::vector<PathId>> groups;
  std::vector<std::string> processor_names;
  iteration::DecomposedOperator op;

  [[nodiscard]] iteration::StateVector to_state(PathSet paths) const;
  [[nodiscard]] PathSet to_paths(std::span<const std::size_t> state) const;
};

Decomposition decompose(const SppInstance &instance, Granularity granularity);

/// Product of per-processor metrics d_i(a, b) = max h over a △ b, which
/// reassembles state_distance. Element order matches the decomposed operator.
ultrametric::ProductSpace product_space(const SppInstance &instance,
                                        const Decomposition &decomposition);

/// Each node's set equals the minimal permitted extensions of its
/// neighbours' sets.
bool is_stable(const SppInstance &instance, PathSet state);

enum class SolveMode { sync, async };

struct SolveOptions {
  SolveMode mode = SolveMode::sync;
  Granularity granularity = Granularity::per_node;
  std::uint64_t seed = 1;
  std::size_t schedules = 1;
  std::size_t horizon = 200;
  iteration::SamplingParams sampling{};
  bool force = false;   // run even if the preorder is not strictly inflationary
  PathSet start = 0;    // must be permitted
};

struct AsyncRun {
  std::uint64_t seed = 0;
  iteration::RunStatus status = iteration::RunStatus::horizon_exhausted;
  std::optional<std::size_t> converged_at;
  PathSet final_state = 0;
};

struct SolveResult {
  iteration::Trajectory sync_trajectory;
  PathSet sync_final = 0;
  bool stable = false; // sync_final is a fixed point of σ
  std::vector<PathSet> cycle; // repeating block when the sync run cycles
  std::vector<AsyncRun> async_runs;
  std::vector<iteration::Trajectory> async_trajectories;

  [[nodiscard]] bool async_agrees() const;
};

/// Synchronous run from options.start, plus async runs under
/// options.schedules sampled schedules (seeds seed, seed + 1, ...) in async
/// mode. Throws PreconditionError for non-inflationary instances unless
/// options.force is set.
SolveResult solve(const SppInstance &instance, const SolveOptions &options);

/// Parses "d;1 d;2 d" style path lists (node names separated by spaces,
/// paths by ';').
PathSet parse_path_list(const SppInstance &instance, std::string_view text);

} // namespace ultraco::routing
