#include "ultraco/routing.hpp"

#include "ultraco/errors.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ultraco::routing {

namespace {

constexpr PathSet bit(PathId p) { return PathSet{1} << p; }

template <typename F> void for_each_path(PathSet s, F &&f) {
  while (s) {
    const auto p = static_cast<PathId>(std::countr_zero(s));
    f(p);
    s &= s - 1;
  }
}

bool is_simple(const Path &p) {
  Path sorted = p;
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

// Reflexive-transitive closure of an adjacency matrix, in place.
void close(std::vector<bool> &rel, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    rel[i * n + i] = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (rel[i * n + k])
        for (std::size_t j = 0; j < n; ++j)
          if (rel[k * n + j])
            rel[i * n + j] = true;
}

// Shortest edge path from `from` to `to` in the (unclosed) relation.
std::vector<PathId> find_route(const std::vector<bool> &edges, std::size_t n,
                               PathId from, PathId to) {
  std::vector<PathId> prev(n, kNoPath);
  std::deque<PathId> queue{from};
  std::vector<bool> seen(n, false);
  seen[from] = true;
  while (!queue.empty()) {
    const PathId u = queue.front();
    queue.pop_front();
    if (u == to)
      break;
    for (PathId v = 0; v < n; ++v)
      if (edges[u * n + v] && !seen[v]) {
        seen[v] = true;
        prev[v] = u;
        queue.push_back(v);
      }
  }
  std::vector<PathId> route;
  if (!seen[to])
    return route;
  for (PathId v = to; v != kNoPath; v = prev[v]) {
    route.push_back(v);
    if (v == from)
      break;
  }
  std::reverse(route.begin(), route.end());
  return route;
}

// A strict edge (a, b) whose reverse is derivable closes a strict cycle
// a -> b -> ... -> a. Returns it with the first element repeated, or empty.
std::vector<PathId> find_strict_cycle(const std::vector<bool> &edges,
                                      const std::vector<std::pair<PathId, PathId>> &strict,
                                      std::size_t n) {
  std::vector<bool> closed = edges;
  close(closed, n);
  for (const auto &[a, b] : strict) {
    if (!closed[b * n + a])
      continue;
    std::vector<PathId> cycle{a};
    const auto back = find_route(edges, n, b, a);
    if (back.empty())
      cycle.push_back(a); // a == b
    else
      cycle.insert(cycle.end(), back.begin(), back.end());
    return cycle;
  }
  return {};
}

} // namespace

// ---------------------------------------------------------------------------
// Paths

std::vector<Path> enumerate_paths(std::size_t node_count, NodeId dest,
                                  const std::vector<Arc> &arcs) {
  if (dest >= node_count)
    throw MalformedInputError("destination is not a node");
  std::vector<std::vector<NodeId>> into(node_count);
  for (const auto &a : arcs)
    into[a.to].push_back(a.from);
  for (auto &v : into)
    std::sort(v.begin(), v.end());

  // Grow backwards from d: every simple path to d ends in a simple path to d.
  std::vector<Path> out;
  std::vector<bool> on_path(node_count, false);
  Path rev{dest};
  on_path[dest] = true;
  std::function<void()> grow = [&]() {
    out.emplace_back(rev.rbegin(), rev.rend());
    if (out.size() > kMaxPaths)
      throw SizeLimitError("more than " + std::to_string(kMaxPaths) +
                           " simple paths to the destination");
    for (NodeId u : into[rev.back()]) {
      if (on_path[u])
        continue;
      on_path[u] = true;
      rev.push_back(u);
      grow();
      rev.pop_back();
      on_path[u] = false;
    }
  };
  grow();
  std::sort(out.begin(), out.end(), [](const Path &a, const Path &b) {
    if (a.size() != b.size())
      return a.size() < b.size();
    return a < b;
  });
  return out;
}

SppInstance::SppInstance(std::vector<std::string> nodes, NodeId dest,
                         std::vector<Arc> arcs,
                         std::vector<std::optional<std::vector<Path>>> permitted,
                         PreferenceSpec preference)
    : nodes_(std::move(nodes)), dest_(dest), arcs_(std::move(arcs)),
      preference_(std::move(preference)) {
  const std::size_t n = nodes_.size();
  if (dest_ >= n)
    throw MalformedInputError("destination is not a node");
  for (const auto &a : arcs_)
    if (a.from >= n || a.to >= n || a.from == a.to)
      throw MalformedInputError("arc endpoints must be distinct nodes");
  if (permitted.size() != n)
    throw MalformedInputError("permitted paths must be given per node");

  paths_ = enumerate_paths(n, dest_, arcs_);
  epsilon_ = *path_id(Path{dest_});
  const std::size_t np = paths_.size();

  permitted_.assign(n, 0);
  for (NodeId i = 0; i < n; ++i) {
    if (!permitted[i]) {
      for (PathId p = 0; p < np; ++p)
        if (source(p) == i)
          permitted_[i] |= bit(p);
    } else {
      for (const auto &path : *permitted[i]) {
        if (path.empty() || path.front() != i)
          throw MalformedInputError("permitted path at " + nodes_[i] +
                                    " does not start there");
        const auto id = path_id(path);
        if (!id)
          throw MalformedInputError(
              "permitted path at " + nodes_[i] +
              " is not a simple path along arcs to the destination");
        permitted_[i] |= bit(*id);
      }
    }
  }
  permitted_[dest_] |= bit(epsilon_);
  for (auto m : permitted_)
    permitted_all_ |= m;

  extension_.assign(np * n, kNoPath);
  for (PathId p = 0; p < np; ++p)
    for (const auto &a : arcs_)
      if (a.to == source(p)) {
        Path ext{a.from};
        ext.insert(ext.end(), paths_[p].begin(), paths_[p].end());
        if (is_simple(ext))
          extension_[p * n + a.from] = *path_id(ext);
      }

  // Preorder.
  leq_.assign(np * np, false);
  std::vector<std::pair<PathId, PathId>> strict;
  auto resolve = [&](const Path &path) {
    const auto id = path_id(path);
    if (!id) {
      std::string text;
      for (NodeId v : path)
        text += (text.empty() ? "" : " ") + (v < n ? nodes_[v] : "?");
      throw MalformedInputError("preference mentions unknown path (" + text + ")");
    }
    return *id;
  };
  if (preference_.kind == PreferenceSpec::Kind::hop_count) {
    for (PathId p = 0; p < np; ++p)
      for (PathId q = 0; q < np; ++q)
        leq_[p * np + q] = paths_[p].size() <= paths_[q].size();
  } else {
    for (const auto &[a, b] : preference_.weak)
      leq_[resolve(a) * np + resolve(b)] = true;
    for (const auto &[a, b] : preference_.strict) {
      const auto pa = resolve(a), pb = resolve(b);
      leq_[pa * np + pb] = true;
      strict.emplace_back(pa, pb);
    }
    const auto cycle = find_strict_cycle(leq_, strict, np);
    if (!cycle.empty()) {
      std::vector<Path> witness;
      std::string text;
      for (PathId p : cycle) {
        witness.push_back(paths_[p]);
        text += (text.empty() ? "" : " -> ") + path_label(p);
      }
      throw PreferenceCycleError("declared preference has a strict cycle: " + text,
                                 std::move(witness));
    }
    close(leq_, np);
  }
}

std::optional<NodeId> SppInstance::node_id(std::string_view name) const {
  for (NodeId i = 0; i < nodes_.size(); ++i)
    if (nodes_[i] == name)
      return i;
  return std::nullopt;
}

std::optional<PathId> SppInstance::path_id(const Path &path) const {
  for (PathId p = 0; p < paths_.size(); ++p)
    if (paths_[p] == path)
      return p;
  return std::nullopt;
}

std::string SppInstance::path_label(PathId p) const {
  if (p == epsilon_)
    return "ε";
  std::string out = "(";
  for (std::size_t k = 0; k < paths_[p].size(); ++k) {
    if (k)
      out += " ";
    out += nodes_[paths_[p][k]];
  }
  return out + ")";
}

std::string SppInstance::set_label(PathSet s) const {
  std::string out = "{";
  bool first = true;
  for_each_path(s, [&](PathId p) {
    if (!first)
      out += ", ";
    first = false;
    out += path_label(p);
  });
  return out + "}";
}

// ---------------------------------------------------------------------------
// Instance files

namespace {

Path parse_path(const nlohmann::json &j,
                const std::map<std::string, NodeId> &index) {
  if (!j.is_array() || j.empty())
    throw MalformedInputError("paths are nonempty arrays of node names");
  Path p;
  for (const auto &name : j) {
    const auto it = index.find(name.get<std::string>());
    if (it == index.end())
      throw MalformedInputError("unknown node \"" + name.get<std::string>() + "\"");
    p.push_back(it->second);
  }
  return p;
}

std::vector<std::pair<Path, Path>>
parse_pairs(const nlohmann::json &j, const std::map<std::string, NodeId> &index) {
  std::vector<std::pair<Path, Path>> out;
  for (const auto &pair : j) {
    if (!pair.is_array() || pair.size() != 2)
      throw MalformedInputError("preference pairs are [p, q]");
    out.emplace_back(parse_path(pair[0], index), parse_path(pair[1], index));
  }
  return out;
}

} // namespace

SppInstance SppInstance::from_json(const nlohmann::json &doc) {
  try {
    auto nodes = doc.at("nodes").get<std::vector<std::string>>();
    std::map<std::string, NodeId> index;
    for (NodeId i = 0; i < nodes.size(); ++i)
      if (!index.emplace(nodes[i], i).second)
        throw MalformedInputError("duplicate node \"" + nodes[i] + "\"");
    auto lookup = [&](const std::string &name) {
      const auto it = index.find(name);
      if (it == index.end())
        throw MalformedInputError("unknown node \"" + name + "\"");
      return it->second;
    };
    const NodeId dest = lookup(doc.at("dest").get<std::string>());

    std::vector<Arc> arcs;
    for (const auto &a : doc.at("arcs")) {
      if (!a.is_array() || a.size() != 2)
        throw MalformedInputError("arcs are [from, to] pairs");
      arcs.push_back({lookup(a[0].get<std::string>()), lookup(a[1].get<std::string>())});
    }

    std::vector<std::optional<std::vector<Path>>> permitted(nodes.size());
    if (doc.contains("permitted")) {
      for (const auto &[name, list] : doc.at("permitted").items()) {
        std::vector<Path> paths;
        for (const auto &p : list)
          paths.push_back(parse_path(p, index));
        permitted[lookup(name)] = std::move(paths);
      }
    }

    PreferenceSpec pref;
    if (doc.contains("preference")) {
      const auto &p = doc.at("preference");
      const auto kind = p.at("kind").get<std::string>();
      if (kind == "hop-count") {
        pref.kind = PreferenceSpec::Kind::hop_count;
      } else if (kind == "explicit") {
        pref.kind = PreferenceSpec::Kind::explicit_pairs;
        pref.weak = parse_pairs(p.value("pairs", nlohmann::json::array()), index);
        pref.strict = parse_pairs(p.value("strict", nlohmann::json::array()), index);
      } else {
        throw MalformedInputError("unknown preference kind \"" + kind + "\"");
      }
    }
    return SppInstance(std::move(nodes), dest, std::move(arcs),
                       std::move(permitted), std::move(pref));
  } catch (const nlohmann::json::exception &e) {
    throw MalformedInputError(std::string("instance: ") + e.what());
  }
}

SppInstance SppInstance::load(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw MalformedInputError("cannot open " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error &e) {
    throw MalformedInputError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Preorder checks and heights

InflationReport check_strictly_inflationary(const SppInstance &instance) {
  InflationReport report;
  const std::size_t np = instance.path_count();

  std::vector<bool> edges(np * np, false);
  for (PathId p = 0; p < np; ++p)
    for (PathId q = 0; q < np; ++q)
      edges[p * np + q] = instance.prefers_weakly(p, q);
  std::vector<std::pair<PathId, PathId>> strict;

  for (PathId p = 0; p < np; ++p) {
    if (!instance.is_permitted(p))
      continue;
    for (const auto &arc : instance.arcs()) {
      if (arc.to != instance.source(p))
        continue;
      const PathId ext = instance.extension(p, arc.from);
      if (ext == kNoPath || !((instance.permitted_at(arc.from) >> ext) & 1U))
        continue;
      if (!instance.prefers_strictly(p, ext) && report.pass) {
        report.pass = false;
        report.witness = std::make_pair(arc, p);
      }
      edges[p * np + ext] = true;
      strict.emplace_back(p, ext);
    }
  }
  if (!report.pass)
    report.cycle = find_strict_cycle(edges, strict, np);
  return report;
}

std::vector<std::uint32_t> path_height(const SppInstance &instance) {
  const std::size_t np = instance.path_count();
  std::vector<std::uint32_t> h(np, 0);
  for (PathId p = 0; p < np; ++p)
    for (PathId q = 0; q < np; ++q)
      if (instance.prefers_weakly(p, q))
        ++h[p];
  return h;
}

// ---------------------------------------------------------------------------
// sigma and the state metric

PathSet node_view(const SppInstance &instance, PathSet state, NodeId node) {
  PathSet out = 0;
  for_each_path(state, [&](PathId p) {
    if (instance.source(p) == node)
      out |= bit(p);
  });
  return out;
}

PathSet sigma_step(const SppInstance &instance, PathSet state) {
  if (state & ~instance.permitted_all())
    throw PreconditionError("state holds paths that are not permitted");
  PathSet out = bit(instance.epsilon());
  for (NodeId i = 0; i < instance.node_count(); ++i) {
    if (i == instance.dest())
      continue;
    PathSet candidates = 0;
    for_each_path(state, [&](PathId p) {
      const PathId ext = instance.extension(p, i);
      if (ext != kNoPath && ((instance.permitted_at(i) >> ext) & 1U))
        candidates |= bit(ext);
    });
    for_each_path(candidates, [&](PathId c) {
      bool dominated = false;
      for_each_path(candidates, [&](PathId other) {
        dominated = dominated || instance.prefers_strictly(other, c);
      });
      if (!dominated)
        out |= bit(c);
    });
  }
  return out;
}

std::uint32_t state_distance(std::span<const std::uint32_t> heights, PathSet m,
                             PathSet n) {
  std::uint32_t d = 0;
  for_each_path(m ^ n, [&](PathId p) { d = std::max(d, heights[p]); });
  return d;
}

std::vector<PathSet> enumerate_states(const SppInstance &instance,
                                      std::size_t max_paths) {
  const PathSet mask = instance.permitted_all();
  const auto count = static_cast<std::size_t>(std::popcount(mask));
  if (count > max_paths)
    throw SizeLimitError(std::to_string(count) +
                         " permitted paths exceed the exhaustive limit of " +
                         std::to_string(max_paths));
  std::vector<PathId> ids;
  for_each_path(mask, [&](PathId p) { ids.push_back(p); });
  std::vector<PathSet> states;
  states.reserve(std::size_t{1} << count);
  for (std::size_t code = 0; code < (std::size_t{1} << count); ++code) {
    PathSet s = 0;
    for (std::size_t b = 0; b < count; ++b)
      if ((code >> b) & 1U)
        s |= bit(ids[b]);
    states.push_back(s);
  }
  return states;
}

ultrametric::FiniteUltrametricSpace state_space(const SppInstance &instance,
                                                std::size_t max_paths) {
  const auto states = enumerate_states(instance, max_paths);
  const auto heights = path_height(instance);
  std::vector<std::string> names;
  for (auto s : states)
    names.push_back(instance.set_label(s));
  return ultrametric::FiniteUltrametricSpace(
      std::move(names),
      ultrametric::RadiusScale::integers(
          static_cast<std::uint32_t>(instance.path_count())),
      [&](std::size_t a, std::size_t b) {
        return ultrametric::Radius{state_distance(heights, states[a], states[b])};
      });
}

StrictContractionReport verify_strict_contraction(const SppInstance &instance,
                                                  std::size_t max_paths) {
  const auto states = enumerate_states(instance, max_paths);
  const auto heights = path_height(instance);
  std::vector<PathSet> images;
  images.reserve(states.size());
  for (auto s : states)
    images.push_back(sigma_step(instance, s));

  StrictContractionReport report;
  report.states = states.size();
  for (std::size_t a = 0; a < states.size(); ++a)
    for (std::size_t b = a + 1; b < states.size(); ++b)
      if (state_distance(heights, images[a], images[b]) >=
          state_distance(heights, states[a], states[b])) {
        report.pass = false;
        report.counterexample = std::make_pair(states[a], states[b]);
        return report;
      }
  return report;
}

// ---------------------------------------------------------------------------
// Decompositions

Granularity parse_granularity(std::string_view label) {
  if (label == "per-node")
    return Granularity::per_node;
  if (label == "per-source-destination-nexthop" || label == "per-nexthop")
    return Granularity::per_nexthop;
  if (label == "per-path")
    return Granularity::per_path;
  throw MalformedInputError("unknown granularity \"" + std::string(label) + "\"");
}

std::string_view to_string(Granularity g) {
  switch (g) {
  case Granularity::per_node:
    return "per-node";
  case Granularity::per_nexthop:
    return "per-source-destination-nexthop";
  case Granularity::per_path:
    return "per-path";
  }
  return "?";
}

iteration::StateVector Decomposition::to_state(PathSet paths) const {
  iteration::StateVector state(groups.size(), 0);
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t b = 0; b < groups[i].size(); ++b)
      if ((paths >> groups[i][b]) & 1U)
        state[i] |= std::size_t{1} << b;
  return state;
}

PathSet Decomposition::to_paths(std::span<const std::size_t> state) const {
  PathSet out = 0;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t b = 0; b < groups[i].size(); ++b)
      if ((state[i] >> b) & 1U)
        out |= bit(groups[i][b]);
  return out;
}

Decomposition decompose(const SppInstance &instance, Granularity granularity) {
  std::vector<std::vector<PathId>> groups;
  std::vector<std::string> names;
  switch (granularity) {
  case Granularity::per_node:
    for (NodeId i = 0; i < instance.node_count(); ++i) {
      std::vector<PathId> g;
      for_each_path(instance.permitted_at(i), [&](PathId p) { g.push_back(p); });
      groups.push_back(std::move(g));
      names.push_back(instance.nodes()[i]);
    }
    break;
  case Granularity::per_nexthop: {
    // Keyed by (source, next hop); ε has no next hop and sorts first.
    std::map<std::pair<NodeId, NodeId>, std::vector<PathId>> by_hop;
    for_each_path(instance.permitted_all(), [&](PathId p) {
      const auto &path = instance.path(p);
      const NodeId hop = path.size() > 1 ? path[1] : kNoPath;
      by_hop[{path.front(), hop}].push_back(p);
    });
    for (auto &[key, g] : by_hop) {
      names.push_back(key.second == kNoPath
                          ? instance.nodes()[key.first]
                          : instance.nodes()[key.first] + "->" +
                                instance.nodes()[key.second]);
      groups.push_back(std::move(g));
    }
    break;
  }
  case Granularity::per_path:
    for_each_path(instance.permitted_all(), [&](PathId p) {
      groups.push_back({p});
      names.push_back(instance.path_label(p));
    });
    break;
  }

  for (const auto &g : groups)
    if (g.size() >= 32)
      throw SizeLimitError("processor owns too many paths");

  std::vector<std::size_t> sizes;
  for (const auto &g : groups)
    sizes.push_back(std::size_t{1} << g.size());

  // Components share the group table; each evaluates σ on the assembled state
  // and projects onto its own paths.
  auto shared = std::make_shared<const std::vector<std::vector<PathId>>>(groups);
  auto assemble = [shared](std::span<const std::size_t> state) {
    PathSet out = 0;
    for (std::size_t i = 0; i < shared->size(); ++i)
      for (std::size_t b = 0; b < (*shared)[i].size(); ++b)
        if ((state[i] >> b) & 1U)
          out |= bit((*shared)[i][b]);
    return out;
  };
  std::vector<iteration::ComponentFn> fns;
  for (std::size_t i = 0; i < groups.size(); ++i)
    fns.emplace_back([&instance, shared, assemble, i](std::span<const std::size_t> state) {
      const PathSet next = sigma_step(instance, assemble(state));
      std::size_t v = 0;
      for (std::size_t b = 0; b < (*shared)[i].size(); ++b)
        if ((next >> (*shared)[i][b]) & 1U)
          v |= std::size_t{1} << b;
      return v;
    });
  auto labeler = [&instance, shared](std::size_t i, std::size_t v) {
    PathSet s = 0;
    for (std::size_t b = 0; b < (*shared)[i].size(); ++b)
      if ((v >> b) & 1U)
        s |= bit((*shared)[i][b]);
    return instance.set_label(s);
  };

  return Decomposition{granularity, std::move(groups), std::move(names),
                       iteration::DecomposedOperator(std::move(sizes), std::move(fns),
                                                     std::move(labeler))};
}

ultrametric::ProductSpace product_space(const SppInstance &instance,
                                        const Decomposition &decomposition) {
  const auto heights = path_height(instance);
  const auto scale = ultrametric::RadiusScale::integers(
      static_cast<std::uint32_t>(instance.path_count()));
  std::vector<ultrametric::FiniteUltrametricSpace> comps;
  for (std::size_t i = 0; i < decomposition.groups.size(); ++i) {
    const auto &g = decomposition.groups[i];
    const std::size_t size = std::size_t{1} << g.size();
    std::vector<std::string> names;
    for (std::size_t v = 0; v < size; ++v)
      names.push_back(decomposition.op.value_label(i, v));
    comps.emplace_back(std::move(names), scale, [&](std::size_t a, std::size_t b) {
      std::uint32_t d = 0;
      for (std::size_t k = 0; k < g.size(); ++k)
        if (((a ^ b) >> k) & 1U)
          d = std::max(d, heights[g[k]]);
      return ultrametric::Radius{d};
    });
  }
  return ultrametric::ProductSpace(std::move(comps));
}

bool is_stable(const SppInstance &instance, PathSet state) {
  const PathSet next = sigma_step(instance, state);
  for (NodeId i = 0; i < instance.node_count(); ++i)
    if (node_view(instance, next, i) != node_view(instance, state, i))
      return false;
  return true;
}

// ---------------------------------------------------------------------------
// Solving

bool SolveResult::async_agrees() const {
  return std::all_of(async_runs.begin(), async_runs.end(), [&](const AsyncRun &r) {
    return r.status == iteration::RunStatus::converged && r.final_state == sync_final;
  });
}

SolveResult solve(const SppInstance &instance, const SolveOptions &options) {
  if (!options.force) {
    const auto inflation = check_strictly_inflationary(instance);
    if (!inflation.pass) {
      const auto &[arc, p] = *inflation.witness;
      throw PreconditionError(
          "preferences are not strictly inflationary: " + instance.path_label(p) +
          " is not strictly preferred to its extension over arc (" +
          instance.nodes()[arc.from] + " " + instance.nodes()[arc.to] +
          "); rerun with --force to explore anyway");
    }
  }
  if (options.start & ~instance.permitted_all())
    throw PreconditionError("start state holds paths that are not permitted");

  const auto dec = decompose(instance, options.granularity);
  const auto start = dec.to_state(options.start);

  SolveResult result;
  const auto states = std::size_t{1} << std::popcount(instance.permitted_all());
  result.sync_trajectory = iteration::run_sync(dec.op, start, states + 1);
  result.sync_final = dec.to_paths(result.sync_trajectory.final_state());
  result.stable = result.sync_trajectory.status == iteration::RunStatus::converged &&
                  is_stable(instance, result.sync_final);
  if (result.sync_trajectory.status == iteration::RunStatus::cycle) {
    const auto &tr = result.sync_trajectory;
    for (std::size_t t = *tr.cycle_start; t < *tr.cycle_start + tr.cycle_length; ++t)
      result.cycle.push_back(dec.to_paths(tr.states[t]));
  }

  if (options.mode == SolveMode::async) {
    const iteration::AdmissibilityBounds bounds{options.sampling.fairness_window,
                                                options.sampling.max_staleness};
    for (std::size_t s = 0; s < options.schedules; ++s) {
      AsyncRun run;
      run.seed = options.seed + s;
      const auto schedule = iteration::sample_schedule(
          dec.op.processor_count(), options.horizon, run.seed, options.sampling);
      auto traj = iteration::run_async(dec.op, start, schedule, bounds);
      run.status = traj.status;
      run.converged_at = traj.converged_at;
      run.final_state = dec.to_paths(traj.final_state());
      result.async_runs.push_back(run);
      result.async_trajectories.push_back(std::move(traj));
    }
  }
  return result;
}

PathSet parse_path_list(const SppInstance &instance, std::string_view text) {
  PathSet out = 0;
  std::string list(text);
  std::stringstream items(list);
  std::string item;
  while (std::getline(items, item, ';')) {
    std::stringstream words(item);
    std::string word;
    Path path;
    while (words >> word) {
      const auto id = instance.node_id(word);
      if (!id)
        throw MalformedInputError("unknown node \"" + word + "\" in path list");
      path.push_back(*id);
    }
    if (path.empty())
      continue;
    const auto p = instance.path_id(path);
    if (!p)
      throw MalformedInputError("\"" + item + "\" is not a simple path to the destination");
    out |= bit(*p);
  }
  return out;
}

} // namespace ultraco::routing
