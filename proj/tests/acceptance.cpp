// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "ultraco/aco.hpp"
#include "ultraco/cli.hpp"
#include "ultraco/errors.hpp"
#include "ultraco/logic.hpp"
#include "ultraco/routing.hpp"
#include "ultraco/ultrametric.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace ultraco;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string corpus(const std::string &rel) { return std::string(ULTRACO_CORPUS "/") + rel; }

// ---------------------------------------------------------------------------

Outcome census() {
  const auto report = aco::run_census();
  Outcome o;
  o.pass = report.entries.size() == 256 && report.agreements() == 256;
  o.detail = std::to_string(report.agreements()) + "/256 verdicts agree, " +
             std::to_string(report.certified()) + " certified";
  return o;
}

// Balls about m* in d_C equal the boxes; boxes rebuilt from an ultrametric verify.
bool round_trip(const iteration::DecomposedOperator &op, std::string &why) {
  const auto seq = aco::search_box_sequence(op);
  if (!seq) {
    why = "no box sequence";
    return false;
  }
  const auto space = aco::ultrametric_from_boxes(*seq, op);
  const auto centre = op.encode(seq->fixed_point);
  for (std::size_t r = 0; r < seq->boxes.size(); ++r) {
    std::set<std::size_t> ball, box;
    for (auto m : ultrametric::ball_members({&space, centre, ultrametric::Radius{
                                                                  static_cast<std::uint32_t>(r)}}))
      ball.insert(m);
    for (const auto &s : seq->boxes[r].members())
      box.insert(op.encode(s));
    if (ball != box) {
      why = "ball " + std::to_string(r) + " differs from its box";
      return false;
    }
  }
  if (!aco::verify_box_sequence(op, aco::boxes_from_ultrametric(space, op)).pass) {
    why = "boxes rebuilt from d_C fail verification";
    return false;
  }
  std::optional<ultrametric::ProductSpace> product;
  try {
    product = aco::search_ultrametric(op);
  } catch (const SizeLimitError &) {
    // Only small domains have a product-metric search; d_C above covers the rest.
  }
  if (product) {
    if (!aco::verify_box_sequence(op, aco::boxes_from_ultrametric(product->materialize(), op))
             .pass) {
      why = "boxes from the searched product metric fail verification";
      return false;
    }
  }
  return true;
}

Outcome construction_round_trip() {
  Outcome o;
  std::size_t checked = 0;
  const auto report = aco::run_census();
  for (const auto &e : report.entries) {
    if (!e.box_verdict)
      continue;
    std::string why;
    if (!round_trip(aco::binary_square_operator(e.images), why)) {
      o.pass = false;
      o.detail += "census operator: " + why + "; ";
    }
    ++checked;
  }
  const std::size_t census_checked = checked;

  std::vector<std::pair<std::string, std::function<bool(std::string &)>>> extra;
  for (const char *file : {"operators/countdown.json", "operators/constant.json"})
    extra.emplace_back(file, [file](std::string &why) {
      return round_trip(iteration::load_operator(corpus(file)).op, why);
    });
  for (const char *file : {"routing/ring3.json", "routing/multi2.json"})
    extra.emplace_back(std::string(file) + " per-node", [file](std::string &why) {
      const auto inst = routing::SppInstance::load(corpus(file));
      const auto dec = routing::decompose(inst, routing::Granularity::per_node);
      return round_trip(dec.op, why);
    });
  for (const char *file : {"logic/facts_only.pl", "logic/single_negation.pl",
                           "logic/three_clause_refined.pl", "logic/win_chain.pl",
                           "logic/declared_strata.pl"})
    extra.emplace_back(std::string(file) + " per-atom", [file](std::string &why) {
      const auto program = logic::GroundProgram::load(corpus(file));
      return round_trip(logic::per_atom_operator(program), why);
    });
  for (auto &[name, fn] : extra) {
    std::string why;
    if (!fn(why)) {
      o.pass = false;
      o.detail += name + ": " + why + "; ";
    }
    ++checked;
  }
  o.detail += std::to_string(census_checked) + " census + " +
              std::to_string(checked - census_checked) + " corpus operators";
  return o;
}

// ---------------------------------------------------------------------------

bool ultrametric_ok(const ultrametric::FiniteUltrametricSpace &space) {
  return ultrametric::check_axioms(space).pass && !ultrametric::find_isosceles_violation(space);
}

Outcome axioms() {
  Outcome o;
  std::size_t spaces = 0;
  auto check = [&](const std::string &name, const ultrametric::FiniteUltrametricSpace &space) {
    ++spaces;
    if (!ultrametric_ok(space)) {
      o.pass = false;
      o.detail += name + " fails; ";
    }
  };

  // String metric: all words over {a, b} of length <= 4, plus random samples.
  {
    std::vector<std::string> words{""};
    for (std::size_t len = 1; len <= 4; ++len)
      for (std::size_t bits = 0; bits < (1u << len); ++bits) {
        std::string w;
        for (std::size_t k = 0; k < len; ++k)
          w += (bits >> k) & 1 ? 'b' : 'a';
        words.push_back(w);
      }
    std::mt19937_64 rng(11);
    for (int k = 0; k < 20; ++k) {
      std::string w;
      const auto len = rng() % 7;
      for (std::size_t j = 0; j < len; ++j)
        w += static_cast<char>('a' + rng() % 3);
      if (std::find(words.begin(), words.end(), w) == words.end())
        words.push_back(w);
    }
    std::vector<Dyadic> values;
    for (const auto &x : words)
      for (const auto &y : words)
        values.push_back(ultrametric::string_distance(x, y));
    const auto scale = ultrametric::RadiusScale::from_dyadics(values);
    check("string metric", ultrametric::FiniteUltrametricSpace(
                               words, scale, [&](std::size_t m, std::size_t n) {
                                 return scale.radius_of(
                                     ultrametric::string_distance(words[m], words[n]));
                               }));
  }

  // d_h spaces with random heights, and products of them.
  std::mt19937_64 rng(5);
  const auto scale = ultrametric::RadiusScale::integers(4);
  auto random_height_space = [&](std::size_t n) {
    std::vector<std::string> names;
    std::vector<ultrametric::Radius> heights;
    for (std::size_t i = 0; i < n; ++i) {
      names.push_back("e" + std::to_string(i));
      heights.push_back({static_cast<std::uint32_t>(1 + rng() % 4)});
    }
    return ultrametric::make_height_space(names, scale, heights);
  };
  for (int k = 0; k < 10; ++k)
    check("d_h space " + std::to_string(k), random_height_space(2 + k % 5));
  for (int k = 0; k < 5; ++k) {
    ultrametric::ProductSpace product({random_height_space(2 + k % 3), random_height_space(3),
                                       random_height_space(2)});
    check("product space " + std::to_string(k), product.materialize());
  }

  for (const char *file : {"routing/ring3.json", "routing/multi2.json"}) {
    const auto inst = routing::SppInstance::load(corpus(file));
    check(file, routing::state_space(inst));
    for (auto g : {routing::Granularity::per_node, routing::Granularity::per_path}) {
      const auto dec = routing::decompose(inst, g);
      check(std::string(file) + " product", routing::product_space(inst, dec).materialize());
    }
  }

  for (const auto &entry : fs::directory_iterator(corpus("logic"))) {
    if (entry.path().extension() != ".pl")
      continue;
    const auto program = logic::GroundProgram::load(entry.path().string());
    if (program.atom_count() > 8)
      continue;
    check(entry.path().filename().string(),
          logic::interpretation_space(program, logic::stratification_for(program)));
  }
  o.detail += std::to_string(spaces) + " spaces checked";
  return o;
}

// ---------------------------------------------------------------------------

Outcome routing_strict_contraction() {
  Outcome o;
  for (const char *file : {"routing/ring3.json", "routing/multi2.json", "routing/single_arc.json"}) {
    const auto inst = routing::SppInstance::load(corpus(file));
    const auto r = routing::verify_strict_contraction(inst);
    o.pass = o.pass && r.pass;
    o.detail += fs::path(file).stem().string() + " " + (r.pass ? "pass" : "FAIL") + " (" +
                std::to_string(r.states) + " states); ";
  }
  const auto bad = routing::SppInstance::load(corpus("routing/noninflationary.json"));
  const auto r = routing::verify_strict_contraction(bad);
  const bool refuted = !r.pass && r.counterexample.has_value();
  o.pass = o.pass && refuted;
  o.detail += "noninflationary ";
  o.detail += refuted ? "fails with witness " + bad.set_label(r.counterexample->first) + ", " +
                            bad.set_label(r.counterexample->second)
                      : "NOT refuted";
  return o;
}

Outcome async_convergence() {
  Outcome o;
  for (const char *file : {"routing/ring3.json", "routing/multi2.json"}) {
    const auto inst = routing::SppInstance::load(corpus(file));
    std::size_t agree = 0, total = 0;
    for (auto g : {routing::Granularity::per_node, routing::Granularity::per_path}) {
      routing::SolveOptions opt;
      opt.mode = routing::SolveMode::async;
      opt.granularity = g;
      opt.schedules = 100;
      opt.horizon = 200;
      opt.sampling = {0.5, 5, 8};
      const auto res = routing::solve(inst, opt);
      for (const auto &run : res.async_runs) {
        ++total;
        agree += res.stable && run.status == iteration::RunStatus::converged &&
                 run.final_state == res.sync_final;
      }
    }
    o.pass = o.pass && total == 200 && agree == 200;
    o.detail += fs::path(file).stem().string() + " " + std::to_string(agree) + "/" +
                std::to_string(total) + "; ";
  }
  return o;
}

Outcome disagree() {
  Outcome o;
  const auto inst = routing::SppInstance::load(corpus("routing/disagree.json"));
  const auto inflation = routing::check_strictly_inflationary(inst);
  bool refused = false;
  try {
    routing::solve(inst, {});
  } catch (const PreconditionError &) {
    refused = true;
  }
  bool cyclic_rejected = false;
  try {
    routing::SppInstance::load(corpus("routing/cyclic_preference.json"));
  } catch (const routing::PreferenceCycleError &) {
    cyclic_rejected = true;
  }

  routing::SolveOptions forced;
  forced.force = true;
  const auto res = routing::solve(inst, forced);
  const auto a = routing::parse_path_list(inst, "d; 1 d; 2 d");
  const auto b = routing::parse_path_list(inst, "d; 1 2 d; 2 1 d");
  const bool oscillates = res.sync_trajectory.status == iteration::RunStatus::cycle &&
                          res.cycle.size() == 2 &&
                          std::set<routing::PathSet>(res.cycle.begin(), res.cycle.end()) ==
                              std::set<routing::PathSet>{a, b};
  o.pass = !inflation.pass && !inflation.cycle.empty() && refused && cyclic_rejected && oscillates;
  o.detail = std::string("inflation check ") + (inflation.pass ? "accepted" : "rejected") +
             ", solve " + (refused ? "refused" : "ran") + ", cyclic declaration " +
             (cyclic_rejected ? "rejected" : "accepted") + ", forced run " +
             (oscillates ? "alternates " + inst.set_label(a) + " <-> " + inst.set_label(b)
                         : "does not show the 2-cycle");
  return o;
}

// ---------------------------------------------------------------------------

std::vector<fs::path> logic_corpus() {
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(corpus("logic")))
    if (entry.path().extension() == ".pl")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

Outcome logic_semantics() {
  Outcome o;
  std::size_t agree = 0, programs = 0;
  for (const auto &file : logic_corpus()) {
    const auto program = logic::GroundProgram::load(file.string());
    if (program.atom_count() > 12)
      continue;
    ++programs;
    const auto result = logic::compute_perfect_model(program);
    const auto oracle = logic::stratified_model(program, logic::stratification_for(program));
    if (result.status == logic::ModelStatus::agrees && result.model == oracle)
      ++agree;
    else
      o.detail += file.filename().string() + " disagrees; ";
  }
  const auto three = logic::GroundProgram::load(corpus("logic/three_clause.pl"));
  const auto result = logic::compute_perfect_model(three);
  std::vector<std::string> steps;
  for (const auto &i : result.trajectory)
    steps.push_back(i.to_string(three));
  const std::vector<std::string> expected{"{}", "{q, p}", "{q, r}", "{q}"};
  const bool trajectory_ok = steps == expected;
  o.pass = programs >= 10 && agree == programs && trajectory_ok;
  o.detail += std::to_string(agree) + "/" + std::to_string(programs) +
              " programs agree with the oracle; three-clause trajectory " +
              (trajectory_ok ? "matches" : "DIFFERS");
  return o;
}

Outcome per_atom_async() {
  Outcome o;
  std::size_t programs = 0;
  for (const auto &file : logic_corpus()) {
    const auto program = logic::GroundProgram::load(file.string());
    if (program.atom_count() > 12)
      continue;
    const auto cls = logic::classify_tp_contraction(program);
    if (cls.report.classification < ultrametric::ContractionClass::contraction_strict_on_orbits)
      continue;
    ++programs;
    const auto model = logic::compute_perfect_model(program).oracle_model;
    const auto op = logic::per_atom_operator(program);
    const auto start = logic::to_state(logic::Interpretation(program.atom_count()));
    std::size_t hits = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto schedule =
          iteration::sample_schedule(op.processor_count(), 200, seed, {0.5, 5, 8});
      const auto tr = iteration::run_async(op, start, schedule, {8, 5});
      hits += tr.status == iteration::RunStatus::converged &&
              logic::from_state(tr.final_state()) == model;
    }
    o.pass = o.pass && hits == 100;
    o.detail += file.stem().string() + " " + std::to_string(hits) + "/100; ";
  }
  o.pass = o.pass && programs > 0;
  return o;
}

// ---------------------------------------------------------------------------

struct CliCapture {
  int code = 0;
  std::string out, err, files;
};

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliCapture invoke(std::vector<std::string> args, const fs::path &dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (auto &a : args)
    if (a.rfind("@", 0) == 0)
      a = (dir / a.substr(1)).string();
  args.insert(args.begin(), "ultraco");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliCapture c;
  c.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  c.out = out.str();
  c.err = err.str();
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir))
    files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto &f : files)
    c.files += f.filename().string() + "\n" + slurp(f);
  return c;
}

Outcome determinism() {
  Outcome o;
  const std::vector<std::vector<std::string>> campaigns{
      {"routing", "solve", corpus("routing/multi2.json"), "--mode", "async", "--seed", "42",
       "--granularity", "per-path", "--trace", "@trace.csv", "--summary", "@summary.json"},
      {"routing", "solve", corpus("routing/ring3.json"), "--mode", "async", "--seed", "3",
       "--trace", "@trace.csv"},
      {"logic", "solve", corpus("logic/win_chain.pl"), "--mode", "async", "--seed", "9",
       "--trace", "@trace.csv", "--summary", "@summary.json"},
      {"aco", "certify", corpus("operators/countdown.json"), "--seed", "17", "--output",
       "@cert.json"},
      {"run", "async", corpus("operators/countdown.json"), "--start", "busy,2", "--seed", "5",
       "--horizon", "60", "--trace", "@trace.csv", "--summary", "@summary.json"},
      {"aco", "census", "--output", "@census.json"},
  };
  const auto base = fs::temp_directory_path() / "ultraco-acceptance";
  std::size_t identical = 0;
  for (std::size_t k = 0; k < campaigns.size(); ++k) {
    const auto first = invoke(campaigns[k], base / ("a" + std::to_string(k)));
    const auto second = invoke(campaigns[k], base / ("b" + std::to_string(k)));
    const bool same = first.code == second.code && first.out == second.out &&
                      first.err == second.err && first.files == second.files &&
                      !first.files.empty();
    identical += same;
    if (!same)
      o.detail += campaigns[k][0] + " " + campaigns[k][1] + " differs; ";
  }
  fs::remove_all(base);
  o.pass = identical == campaigns.size();
  o.detail += std::to_string(identical) + "/" + std::to_string(campaigns.size()) +
              " campaigns byte-identical (stdout, stderr, written files)";
  return o;
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char *name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "equivalence census", 10, census},
      {2, "construction round-trip", 10, construction_round_trip},
      {3, "ultrametric axioms", 30, axioms},
      {4, "routing strict contraction", 60, routing_strict_contraction},
      {5, "routing async convergence", 60, async_convergence},
      {6, "DISAGREE behaviour", 5, disagree},
      {7, "logic semantics", 10, logic_semantics},
      {8, "per-atom async logic", 60, per_atom_async},
      {9, "CLI determinism", 10, determinism},
  };
  int failures = 0;
  for (const auto &c : criteria) {
    const auto begin = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    const bool in_budget = secs <= c.budget_s;
    const bool pass = o.pass && in_budget;
    failures += !pass;
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2f s of %.0f s", secs, c.budget_s);
    while (!o.detail.empty() && (o.detail.back() == ' ' || o.detail.back() == ';'))
      o.detail.pop_back();
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << o.detail << " [" << timing << (in_budget ? "" : ", over budget")
              << "]\n";
  }
  return failures == 0 ? 0 : 1;
}
