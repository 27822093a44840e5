#include "ultraco/aco.hpp"
#include "ultraco/errors.hpp"
#include "ultraco/routing.hpp"

#include <gtest/gtest.h>

#include <bit>

using namespace ultraco;
using namespace ultraco::routing;

namespace {

SppInstance load(const std::string &name) {
  return SppInstance::load(std::string(ULTRACO_CORPUS "/routing/") + name);
}

PathId pid(const SppInstance &inst, std::initializer_list<const char *> names) {
  Path p;
  for (const char *n : names)
    p.push_back(*inst.node_id(n));
  return *inst.path_id(p);
}

PathSet bit(PathId p) { return PathSet{1} << p; }

PathSet ring3_fixed_point(const SppInstance &r) {
  return bit(pid(r, {"d"})) | bit(pid(r, {"1", "d"})) | bit(pid(r, {"2", "d"}));
}

} // namespace

TEST(EnumeratePaths, Ring3AndMulti2) {
  const auto ring = load("ring3.json");
  ASSERT_EQ(ring.path_count(), 5u);
  std::vector<std::string> labels;
  for (PathId p = 0; p < ring.path_count(); ++p)
    labels.push_back(ring.path_label(p));
  EXPECT_EQ(labels, (std::vector<std::string>{"ε", "(1 d)", "(2 d)", "(1 2 d)", "(2 1 d)"}));
  EXPECT_EQ(ring.epsilon(), 0u);

  const auto multi = load("multi2.json");
  EXPECT_EQ(multi.set_label(multi.permitted_all()),
            "{ε, (1 d), (2 d), (3 1 d), (3 2 d)}");
}

TEST(EnumeratePaths, SizeLimit) {
  std::vector<Arc> arcs;
  for (NodeId i = 0; i < 7; ++i)
    for (NodeId j = 0; j < 7; ++j)
      if (i != j)
        arcs.push_back({i, j});
  EXPECT_THROW(enumerate_paths(7, 0, arcs), SizeLimitError);
}

TEST(Instance, ParsesAndRejects) {
  EXPECT_THROW(SppInstance::from_json(nlohmann::json::parse(
                   R"({"nodes": ["d"], "dest": "x", "arcs": []})")),
               MalformedInputError);
  EXPECT_THROW(SppInstance::from_json(nlohmann::json::parse(
                   R"({"nodes": ["d", "1"], "dest": "d", "arcs": [["1"]]})")),
               MalformedInputError);
  EXPECT_THROW(SppInstance::from_json(nlohmann::json::parse(
                   R"({"nodes": ["d", "1"], "dest": "d", "arcs": [["1", "d"]],
                       "preference": {"kind": "shortest"}})")),
               MalformedInputError);
  EXPECT_THROW(load("missing.json"), MalformedInputError);
  try {
    load("cyclic_preference.json");
    FAIL() << "cyclic preference accepted";
  } catch (const PreferenceCycleError &e) {
    EXPECT_GE(e.cycle().size(), 3u);
    EXPECT_EQ(e.cycle().front(), e.cycle().back());
  }
}

TEST(Instance, PermittedRestriction) {
  const auto inst = load("noninflationary.json");
  EXPECT_FALSE(inst.is_permitted(pid(inst, {"2", "1", "d"})));
  EXPECT_TRUE(inst.is_permitted(pid(inst, {"1", "2", "d"})));
}

TEST(Preorder, HopCountIsStrictlyInflationary) {
  for (const char *name : {"ring3.json", "multi2.json", "single_arc.json"})
    EXPECT_TRUE(check_strictly_inflationary(load(name)).pass) << name;
}

TEST(Preorder, DisagreeRejectedWithCycle) {
  const auto inst = load("disagree.json");
  const auto r = check_strictly_inflationary(inst);
  ASSERT_FALSE(r.pass);
  ASSERT_TRUE(r.witness);
  ASSERT_GE(r.cycle.size(), 3u);
  EXPECT_EQ(r.cycle.front(), r.cycle.back());
  std::vector<PathId> ring(r.cycle.begin(), r.cycle.end() - 1);
  std::sort(ring.begin(), ring.end());
  const std::vector<PathId> expected{pid(inst, {"1", "d"}), pid(inst, {"2", "d"}),
                                     pid(inst, {"1", "2", "d"}), pid(inst, {"2", "1", "d"})};
  std::vector<PathId> sorted_expected = expected;
  std::sort(sorted_expected.begin(), sorted_expected.end());
  EXPECT_EQ(ring, sorted_expected);
}

TEST(Preorder, NonInflationaryWithoutCycle) {
  const auto r = check_strictly_inflationary(load("noninflationary.json"));
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(r.witness);
  EXPECT_TRUE(r.cycle.empty());
}

TEST(Heights, Examples) {
  EXPECT_EQ(path_height(load("ring3.json")), (std::vector<std::uint32_t>{5, 4, 4, 2, 2}));
  EXPECT_EQ(path_height(load("single_arc.json")), (std::vector<std::uint32_t>{2, 1}));
}

TEST(Sigma, Examples) {
  const auto r = load("ring3.json");
  EXPECT_EQ(sigma_step(r, 0), bit(r.epsilon()));
  const PathSet s = bit(r.epsilon()) | bit(pid(r, {"2", "d"}));
  EXPECT_EQ(node_view(r, sigma_step(r, s), *r.node_id("1")), bit(pid(r, {"1", "d"})));

  const auto m = load("multi2.json");
  const PathSet ms = bit(m.epsilon()) | bit(pid(m, {"1", "d"})) | bit(pid(m, {"2", "d"}));
  EXPECT_EQ(node_view(m, sigma_step(m, ms), *m.node_id("3")),
            bit(pid(m, {"3", "1", "d"})) | bit(pid(m, {"3", "2", "d"})));
}

TEST(StateDistance, Examples) {
  const auto r = load("ring3.json");
  const auto h = path_height(r);
  EXPECT_EQ(state_distance(h, 0, ring3_fixed_point(r)), 5u);
  const PathSet base = ring3_fixed_point(r);
  EXPECT_EQ(state_distance(h, base, base | bit(pid(r, {"1", "2", "d"}))), 2u);
  EXPECT_EQ(state_distance(h, base, base), 0u);
}

TEST(StateSpace, AxiomsHold) {
  for (const char *name : {"ring3.json", "multi2.json", "single_arc.json"}) {
    const auto space = state_space(load(name));
    EXPECT_TRUE(ultrametric::check_axioms(space).pass) << name;
    EXPECT_FALSE(ultrametric::find_isosceles_violation(space)) << name;
  }
  EXPECT_EQ(enumerate_states(load("ring3.json")).size(), 32u);
  EXPECT_THROW(enumerate_states(load("ring3.json"), 4), SizeLimitError);
}

TEST(StrictContraction, Exhaustive) {
  for (const char *name : {"ring3.json", "multi2.json", "single_arc.json"}) {
    const auto r = verify_strict_contraction(load(name));
    EXPECT_TRUE(r.pass) << name;
  }
  EXPECT_EQ(verify_strict_contraction(load("single_arc.json")).states, 4u);
  const auto bad = verify_strict_contraction(load("noninflationary.json"));
  EXPECT_FALSE(bad.pass);
  ASSERT_TRUE(bad.counterexample);
  const auto inst = load("noninflationary.json");
  const auto h = path_height(inst);
  const auto [m, n] = *bad.counterexample;
  EXPECT_GE(state_distance(h, sigma_step(inst, m), sigma_step(inst, n)),
            state_distance(h, m, n));
}

TEST(Decompose, ProcessorCounts) {
  const auto r = load("ring3.json");
  const auto node = decompose(r, Granularity::per_node);
  EXPECT_EQ(node.op.processor_count(), 3u);
  EXPECT_EQ(node.processor_names, (std::vector<std::string>{"d", "1", "2"}));
  EXPECT_EQ(decompose(r, Granularity::per_path).op.processor_count(), 5u);
  EXPECT_EQ(decompose(r, Granularity::per_nexthop).op.processor_count(), 5u);
  EXPECT_EQ(decompose(load("multi2.json"), Granularity::per_nexthop).op.processor_count(), 5u);
  EXPECT_EQ(parse_granularity("per-source-destination-nexthop"), Granularity::per_nexthop);
  EXPECT_EQ(to_string(Granularity::per_path), "per-path");
  EXPECT_THROW(parse_granularity("per-link"), MalformedInputError);
}

TEST(Decompose, AssembledOperatorEqualsSigma) {
  for (const char *name : {"ring3.json", "multi2.json", "noninflationary.json"}) {
    const auto inst = load(name);
    for (auto g : {Granularity::per_node, Granularity::per_nexthop, Granularity::per_path}) {
      const auto dec = decompose(inst, g);
      for (PathSet s : enumerate_states(inst)) {
        const auto state = dec.to_state(s);
        EXPECT_EQ(dec.to_paths(state), s);
        EXPECT_EQ(dec.to_paths(dec.op.apply(state)), sigma_step(inst, s)) << name;
      }
    }
  }
}

TEST(Decompose, ProductSpaceMatchesStateDistance) {
  const auto inst = load("ring3.json");
  const auto h = path_height(inst);
  for (auto g : {Granularity::per_node, Granularity::per_path}) {
    const auto dec = decompose(inst, g);
    const auto product = product_space(inst, dec);
    const auto states = enumerate_states(inst);
    for (PathSet a : states)
      for (PathSet b : states) {
        const auto sa = dec.to_state(a), sb = dec.to_state(b);
        EXPECT_EQ(ultrametric::product_distance(product, sa, sb).rank,
                  state_distance(h, a, b));
      }
  }
}

TEST(Solve, Ring3Sync) {
  const auto r = load("ring3.json");
  const auto res = solve(r, {});
  EXPECT_EQ(res.sync_final, ring3_fixed_point(r));
  EXPECT_TRUE(res.stable);
  EXPECT_LE(*res.sync_trajectory.converged_at, 3u);
}

TEST(Solve, Multi2Multipath) {
  const auto m = load("multi2.json");
  const auto res = solve(m, {});
  EXPECT_TRUE(res.stable);
  EXPECT_EQ(node_view(m, res.sync_final, *m.node_id("3")),
            bit(pid(m, {"3", "1", "d"})) | bit(pid(m, {"3", "2", "d"})));
}

TEST(Solve, GranularityIndependence) {
  for (const char *name : {"ring3.json", "multi2.json", "single_arc.json"}) {
    const auto inst = load(name);
    SolveOptions opt;
    const auto base = solve(inst, opt).sync_final;
    for (auto g : {Granularity::per_nexthop, Granularity::per_path}) {
      opt.granularity = g;
      EXPECT_EQ(solve(inst, opt).sync_final, base) << name;
    }
  }
}

TEST(Solve, AsyncAgreesOverSeeds) {
  for (const char *name : {"ring3.json", "multi2.json"}) {
    const auto inst = load(name);
    for (auto g : {Granularity::per_node, Granularity::per_path}) {
      SolveOptions opt;
      opt.mode = SolveMode::async;
      opt.granularity = g;
      opt.schedules = 100;
      opt.seed = 1;
      const auto res = solve(inst, opt);
      ASSERT_EQ(res.async_runs.size(), 100u);
      EXPECT_TRUE(res.async_agrees()) << name;
      for (const auto &run : res.async_runs)
        EXPECT_EQ(run.final_state, res.sync_final);
    }
  }
}

TEST(Solve, DestinationAnchoring) {
  const auto inst = load("multi2.json");
  SolveOptions opt;
  opt.mode = SolveMode::async;
  opt.schedules = 10;
  opt.seed = 7;
  const auto dec = decompose(inst, opt.granularity);
  const auto res = solve(inst, opt);
  const auto d = *inst.node_id("d");
  for (const auto &tr : res.async_trajectories) {
    bool anchored = false;
    for (std::size_t t = 1; t < tr.states.size(); ++t) {
      const auto view = node_view(inst, dec.to_paths(tr.states[t]), d);
      if (tr.activated[t][d])
        anchored = true;
      if (anchored)
        EXPECT_EQ(view, bit(inst.epsilon()));
    }
  }
}

TEST(Solve, FinalStateHasNoDominatedPaths) {
  const auto inst = load("multi2.json");
  const auto fp = solve(inst, {}).sync_final;
  for (PathId p = 0; p < inst.path_count(); ++p) {
    if (!((fp >> p) & 1U))
      continue;
    for (PathId q = 0; q < inst.path_count(); ++q)
      if (((fp >> q) & 1U) && inst.source(q) == inst.source(p))
        EXPECT_FALSE(inst.prefers_strictly(q, p));
  }
}

TEST(Solve, DisagreeRefusedThenOscillates) {
  const auto inst = load("disagree.json");
  SolveOptions opt;
  opt.start = parse_path_list(inst, "d; 1 d; 2 d");
  EXPECT_THROW(solve(inst, opt), PreconditionError);
  opt.force = true;
  const auto res = solve(inst, opt);
  EXPECT_EQ(res.sync_trajectory.status, iteration::RunStatus::cycle);
  ASSERT_EQ(res.cycle.size(), 2u);
  const PathSet a = parse_path_list(inst, "d; 1 d; 2 d");
  const PathSet b = parse_path_list(inst, "d; 1 2 d; 2 1 d");
  EXPECT_EQ(res.cycle[0], a);
  EXPECT_EQ(res.cycle[1], b);
  EXPECT_FALSE(res.stable);
}

TEST(Solve, RejectsUnpermittedStart) {
  const auto inst = load("noninflationary.json");
  SolveOptions opt;
  opt.force = true;
  opt.start = parse_path_list(inst, "2 1 d");
  EXPECT_THROW(solve(inst, opt), PreconditionError);
  EXPECT_THROW(parse_path_list(inst, "3 d"), MalformedInputError);
}

TEST(Aco, Ring3CertifiedDisagreeRefuted) {
  const auto ring = load("ring3.json");
  const auto dec = decompose(ring, Granularity::per_node);
  aco::CampaignParams campaign;
  campaign.schedules = 10;
  const auto cert = aco::certify_aco(dec.op, campaign);
  ASSERT_EQ(cert.verdict, aco::Verdict::certified);
  EXPECT_EQ(dec.to_paths(cert.boxes->fixed_point), ring3_fixed_point(ring));

  // Balls of the routing ultrametric about the fixed point are boxes.
  const auto product = product_space(ring, dec);
  const auto flat = product.materialize();
  const auto seq = aco::boxes_from_ultrametric(flat, dec.op);
  EXPECT_TRUE(aco::verify_box_sequence(dec.op, seq).pass);
  const auto center = dec.op.encode(seq.fixed_point);
  std::set<std::vector<ultrametric::ElementId>> balls;
  for (std::uint32_t r = 0; r < flat.scale().size(); ++r)
    balls.insert(ultrametric::ball_members({&flat, center, ultrametric::Radius{r}}));
  EXPECT_EQ(seq.boxes.size(), balls.size());

  const auto dis = load("disagree.json");
  const auto ddec = decompose(dis, Granularity::per_node);
  EXPECT_EQ(aco::certify_aco(ddec.op).verdict, aco::Verdict::refuted);
}
