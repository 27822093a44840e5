#include "ultraco/cli.hpp"

#include "ultraco/aco.hpp"
#include "ultraco/errors.hpp"
#include "ultraco/iteration.hpp"
#include "ultraco/logic.hpp"
#include "ultraco/routing.hpp"
#include "ultraco/trace.hpp"
#include "ultraco/ultrametric.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

namespace ultraco::cli {
namespace {

using iteration::DecomposedOperator;
using iteration::StateVector;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Logging (stderr only, level from ULTRACO_LOG)

enum class LogLevel { quiet, info, debug };

class Logger {
public:
  explicit Logger(std::ostream &err) : err_(err) {
    if (const char *v = std::getenv("ULTRACO_LOG")) {
      const std::string level(v);
      if (level == "info")
        level_ = LogLevel::info;
      else if (level == "debug")
        level_ = LogLevel::debug;
    }
  }
  void info(const std::string &msg) const {
    if (level_ >= LogLevel::info)
      err_ << "[info] " << msg << '\n';
  }
  void debug(const std::string &msg) const {
    if (level_ >= LogLevel::debug)
      err_ << "[debug] " << msg << '\n';
  }

private:
  std::ostream &err_;
  LogLevel level_ = LogLevel::quiet;
};

struct Context {
  const RunConfig &cfg;
  std::ostream &out;
  std::ostream &err;
  Logger log;
};

// ---------------------------------------------------------------------------
// Small helpers

iteration::SamplingParams sampling_of(const RunConfig &cfg) {
  return {cfg.activation_prob, cfg.max_staleness, cfg.fairness_window};
}

iteration::AdmissibilityBounds bounds_of(const RunConfig &cfg) {
  return {cfg.fairness_window, cfg.max_staleness};
}

void write_json_file(const std::string &path, const json &doc) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw Error("cannot write " + path);
  f << doc.dump(2) << '\n';
  if (!f)
    throw Error("failed writing " + path);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string &text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    parts.push_back(trim(item));
  return parts;
}

std::string join(const std::vector<std::string> &items, std::string_view sep) {
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k)
      out += sep;
    out += items[k];
  }
  return out;
}

std::string describe_run(const iteration::Trajectory &tr) {
  switch (tr.status) {
  case iteration::RunStatus::converged:
    return "converged at t=" + std::to_string(*tr.converged_at);
  case iteration::RunStatus::cycle:
    return "cycle of length " + std::to_string(tr.cycle_length) + " from t=" +
           std::to_string(*tr.cycle_start);
  case iteration::RunStatus::horizon_exhausted:
    return "not converged within " + std::to_string(tr.ticks()) + " ticks";
  }
  return "";
}

json trajectory_json(const iteration::Trajectory &tr, const DecomposedOperator &op) {
  json doc{{"status", iteration::to_string(tr.status)},
           {"ticks", tr.ticks()},
           {"final_state", op.state_label(tr.final_state())}};
  doc["converged_at"] = tr.converged_at ? json(*tr.converged_at) : json(nullptr);
  if (tr.cycle_start) {
    doc["cycle_start"] = *tr.cycle_start;
    doc["cycle_length"] = tr.cycle_length;
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Input loading shared by `run` and `aco certify`

enum class InputKind { operator_table, routing, logic };

InputKind detect_kind(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw MalformedInputError("cannot open " + path);
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".pl" || ext == ".lp")
    return InputKind::logic;
  std::stringstream buf;
  buf << in.rdbuf();
  const auto doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) {
    if (ext == ".json")
      throw MalformedInputError(path + ": not valid JSON");
    return InputKind::logic;
  }
  if (doc.is_object() && doc.contains("arcs"))
    return InputKind::routing;
  if (doc.is_object() && doc.contains("sizes"))
    return InputKind::operator_table;
  throw MalformedInputError(path +
                            ": expected an operator (\"sizes\") or a routing instance (\"arcs\")");
}

// Held in place: the routing decomposition refers to `instance`.
struct Problem {
  Problem() = default;
  Problem(const Problem &) = delete;
  Problem &operator=(const Problem &) = delete;

  InputKind kind = InputKind::operator_table;
  std::optional<iteration::NamedOperator> table;
  std::optional<routing::SppInstance> instance;
  std::optional<routing::Decomposition> decomposition;
  std::optional<logic::GroundProgram> program;
  std::optional<DecomposedOperator> atom_op;

  [[nodiscard]] const DecomposedOperator &op() const {
    switch (kind) {
    case InputKind::operator_table:
      return table->op;
    case InputKind::routing:
      return decomposition->op;
    case InputKind::logic:
      return *atom_op;
    }
    throw Error("unreachable");
  }

  [[nodiscard]] std::vector<std::string> names() const {
    switch (kind) {
    case InputKind::operator_table:
      return table->processor_names;
    case InputKind::routing:
      return decomposition->processor_names;
    case InputKind::logic:
      return program->atoms();
    }
    return {};
  }
};

void load_problem(Problem &p, const RunConfig &cfg) {
  p.kind = detect_kind(cfg.instance_path);
  switch (p.kind) {
  case InputKind::operator_table:
    p.table.emplace(iteration::load_operator(cfg.instance_path));
    break;
  case InputKind::routing:
    p.instance.emplace(routing::SppInstance::load(cfg.instance_path));
    p.decomposition.emplace(
        routing::decompose(*p.instance, routing::parse_granularity(cfg.granularity)));
    break;
  case InputKind::logic:
    p.program.emplace(logic::GroundProgram::load(cfg.instance_path));
    p.atom_op.emplace(logic::per_atom_operator(*p.program));
    break;
  }
}

logic::Interpretation parse_atoms(const logic::GroundProgram &program, const std::string &text) {
  logic::Interpretation i(program.atom_count());
  for (const auto &name : split(text, ',')) {
    if (name.empty())
      continue;
    const auto id = program.atom_id(name);
    if (!id)
      throw MalformedInputError("unknown atom \"" + name + "\" in --start");
    i.set(*id);
  }
  return i;
}

StateVector parse_start(const Problem &p, const std::string &text) {
  const auto &op = p.op();
  switch (p.kind) {
  case InputKind::routing: {
    const auto paths = routing::parse_path_list(*p.instance, text);
    if (paths & ~p.instance->permitted_all())
      throw PreconditionError("start state holds paths that are not permitted");
    return p.decomposition->to_state(paths);
  }
  case InputKind::logic:
    return logic::to_state(parse_atoms(*p.program, text));
  case InputKind::operator_table:
    break;
  }
  if (trim(text).empty())
    return StateVector(op.processor_count(), 0);
  const auto parts = split(text, ',');
  if (parts.size() != op.processor_count())
    throw MalformedInputError("--start needs one value per processor");
  StateVector s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::optional<std::size_t> value;
    for (std::size_t v = 0; v < op.component_size(i) && !value; ++v)
      if (op.value_label(i, v) == parts[i])
        value = v;
    if (!value)
      throw MalformedInputError("unknown value \"" + parts[i] + "\" for processor " +
                                std::to_string(i));
    s.push_back(*value);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Distances to a certified fixed point, for traces

trace::DistanceLabeler routing_distance(const routing::SppInstance &instance,
                                        const routing::Decomposition &dec,
                                        routing::PathSet fixed_point) {
  auto heights = std::make_shared<std::vector<std::uint32_t>>(routing::path_height(instance));
  return [heights, &dec, fixed_point](const StateVector &s) -> std::optional<std::string> {
    return std::to_string(routing::state_distance(*heights, dec.to_paths(s), fixed_point));
  };
}

trace::DistanceLabeler logic_distance(const logic::Stratification &strat,
                                      const logic::Interpretation &model) {
  return [strat, model](const StateVector &s) -> std::optional<std::string> {
    return logic::interpretation_distance(strat, logic::from_state(s), model).to_string();
  };
}

// Certified routing instance: strictly inflationary, with its unique fixed point.
std::optional<routing::PathSet> routing_fixed_point(const routing::SppInstance &instance) {
  if (!routing::check_strictly_inflationary(instance).pass)
    return std::nullopt;
  const auto res = routing::solve(instance, {});
  if (!res.stable)
    return std::nullopt;
  return res.sync_final;
}

struct LogicCertificate {
  logic::Stratification strat;
  logic::Interpretation model;
};

std::optional<LogicCertificate> logic_certificate(const logic::GroundProgram &program) {
  if (program.atom_count() > 12)
    return std::nullopt;
  const auto cls = logic::classify_tp_contraction(program);
  if (cls.report.classification < ultrametric::ContractionClass::contraction_strict_on_orbits)
    return std::nullopt;
  const auto perfect = logic::compute_perfect_model(program);
  if (perfect.status != logic::ModelStatus::agrees)
    return std::nullopt;
  return LogicCertificate{cls.strata, perfect.model};
}

trace::DistanceLabeler certificate_distance(const Problem &p, std::string &description,
                                            const Logger &log) {
  switch (p.kind) {
  case InputKind::routing: {
    if (const auto fp = routing_fixed_point(*p.instance)) {
      description = "strictly inflationary preference, fixed point " +
                    p.instance->set_label(*fp);
      return routing_distance(*p.instance, *p.decomposition, *fp);
    }
    description = "none (preference not strictly inflationary)";
    return {};
  }
  case InputKind::logic: {
    if (const auto cert = logic_certificate(*p.program)) {
      description = "T_P strict on orbits, perfect model " + cert->model.to_string(*p.program);
      return logic_distance(cert->strat, cert->model);
    }
    description = "none (T_P not certified strict on orbits)";
    return {};
  }
  case InputKind::operator_table:
    break;
  }
  try {
    const auto seq = aco::search_box_sequence(p.op());
    if (!seq) {
      description = "none (no box sequence exists)";
      return {};
    }
    description = "box sequence with " + std::to_string(seq->boxes.size()) +
                  " boxes, fixed point " + p.op().state_label(seq->fixed_point);
    auto boxes = std::make_shared<aco::BoxSequence>(*seq);
    return [boxes](const StateVector &s) -> std::optional<std::string> {
      for (std::size_t r = 0; r < boxes->boxes.size(); ++r)
        if (boxes->boxes[r].contains(s))
          return std::to_string(r);
      return std::nullopt;
    };
  } catch (const SizeLimitError &e) {
    log.info(std::string("no certificate: ") + e.what());
    description = "none (domain too large for the box search)";
    return {};
  }
}

void maybe_trace(const Context &ctx, const iteration::Trajectory &tr,
                 const DecomposedOperator &op, std::vector<std::string> names,
                 trace::DistanceLabeler dist) {
  if (ctx.cfg.trace_path.empty())
    return;
  trace::emit_trace(ctx.cfg.trace_path, tr, {&op, std::move(names), std::move(dist)});
  ctx.log.info("trace written to " + ctx.cfg.trace_path);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_space_check(const Context &ctx) {
  const auto space = ultrametric::load_space(ctx.cfg.instance_path);
  auto &out = ctx.out;
  auto names = [&](const std::vector<ultrametric::ElementId> &ids) {
    std::vector<std::string> n;
    for (auto id : ids)
      n.push_back(space.element(id));
    return "(" + join(n, ", ") + ")";
  };
  out << "elements: " << space.size() << '\n';
  out << "scale: " << join(space.scale().labels(), " < ") << '\n';

  const auto axioms = ultrametric::check_axioms(space, 10);
  out << "axioms: " << (axioms.pass ? "pass" : "fail") << '\n';
  for (const auto &v : axioms.violations)
    out << "  " << ultrametric::to_string(v.axiom) << ' ' << names(v.witness) << '\n';
  if (axioms.truncated)
    out << "  (more violations not shown)\n";

  const auto iso = ultrametric::find_isosceles_violation(space);
  out << "isosceles: " << (iso ? "fail " + names(*iso) : std::string("pass")) << '\n';

  const auto complete = ultrametric::check_spherical_completeness(space);
  out << "spherical completeness: " << (complete.pass ? "pass" : "fail") << " ("
      << complete.distinct_balls << " balls, " << complete.chains_checked
      << " maximal chains)\n";
  return axioms.pass && !iso && complete.pass ? kExitOk : kExitFailed;
}

int cmd_aco_certify(const Context &ctx) {
  Problem p;
  load_problem(p, ctx.cfg);
  aco::CampaignParams campaign;
  campaign.schedules = ctx.cfg.schedules;
  campaign.seed = ctx.cfg.seed;
  campaign.horizon = ctx.cfg.horizon;
  campaign.sampling = sampling_of(ctx.cfg);
  const auto cert = aco::certify_aco(p.op(), campaign);
  auto doc = aco::certificate_to_json(cert, p.op());
  doc["processor_names"] = p.names();
  ctx.out << doc.dump(2) << '\n';
  if (!ctx.cfg.output_path.empty())
    write_json_file(ctx.cfg.output_path, doc);
  if (cert.verdict != aco::Verdict::certified)
    return kExitFailed;
  return cert.sampling && !cert.sampling->all_converged() ? kExitFailed : kExitOk;
}

int cmd_aco_census(const Context &ctx) {
  const auto report = aco::run_census();
  std::size_t by_boxes = 0, by_metric = 0;
  json entries = json::array();
  for (const auto &e : report.entries) {
    by_boxes += e.box_verdict;
    by_metric += e.ultrametric_verdict;
    entries.push_back({{"images", e.images},
                       {"box_sequence", e.box_verdict},
                       {"ultrametric", e.ultrametric_verdict}});
  }
  auto &out = ctx.out;
  out << "operators: " << report.entries.size() << '\n';
  out << "box-sequence search certifies: " << by_boxes << '\n';
  out << "ultrametric search certifies: " << by_metric << '\n';
  for (std::size_t k = 0; k < report.entries.size(); ++k) {
    const auto &e = report.entries[k];
    if (e.box_verdict != e.ultrametric_verdict) {
      std::vector<std::string> img;
      for (auto v : e.images)
        img.push_back(std::to_string(v));
      out << "disagreement on operator " << k << " [" << join(img, " ") << "]\n";
    }
  }
  out << "verdicts agree on " << report.agreements() << '/' << report.entries.size()
      << " operators\n";
  if (!ctx.cfg.output_path.empty())
    write_json_file(ctx.cfg.output_path,
                    {{"operators", report.entries.size()},
                     {"agreements", report.agreements()},
                     {"certified", report.certified()},
                     {"entries", entries}});
  return report.agreements() == report.entries.size() ? kExitOk : kExitFailed;
}

int cmd_routing_check(const Context &ctx) {
  auto &out = ctx.out;
  std::optional<routing::SppInstance> loaded;
  try {
    loaded.emplace(routing::SppInstance::load(ctx.cfg.instance_path));
  } catch (const routing::PreferenceCycleError &e) {
    out << "preference: rejected, " << e.what() << '\n';
    return kExitFailed;
  }
  const auto &inst = *loaded;
  out << "nodes: " << join(inst.nodes(), ", ") << '\n';
  out << "destination: " << inst.nodes()[inst.dest()] << '\n';
  const auto heights = routing::path_height(inst);
  out << "paths: " << inst.path_count() << '\n';
  for (routing::PathId p = 0; p < inst.path_count(); ++p)
    out << "  " << inst.path_label(p) << "  height " << heights[p]
        << (inst.is_permitted(p) ? "" : "  (not permitted)") << '\n';

  const auto inflation = routing::check_strictly_inflationary(inst);
  bool ok = inflation.pass;
  if (inflation.pass) {
    out << "strictly inflationary: pass\n";
  } else {
    out << "strictly inflationary: fail\n";
    if (inflation.witness) {
      const auto &[arc, p] = *inflation.witness;
      const auto ext = inst.extension(p, arc.from);
      out << "  witness: " << inst.path_label(p) << " is not strictly preferred to "
          << inst.path_label(ext) << " over arc (" << inst.nodes()[arc.from] << ' '
          << inst.nodes()[arc.to] << ")\n";
    }
    if (!inflation.cycle.empty()) {
      std::vector<std::string> labels;
      for (auto p : inflation.cycle)
        labels.push_back(inst.path_label(p));
      out << "  preference cycle: " << join(labels, " < ") << '\n';
    }
  }

  try {
    const auto strict = routing::verify_strict_contraction(inst);
    out << "strict contraction: " << (strict.pass ? "pass" : "fail") << " (" << strict.states
        << " states)\n";
    if (strict.counterexample)
      out << "  counterexample: " << inst.set_label(strict.counterexample->first) << " and "
          << inst.set_label(strict.counterexample->second) << '\n';
    ok = ok && strict.pass;
  } catch (const SizeLimitError &) {
    out << "strict contraction: skipped (more than 12 permitted paths)\n";
  }
  return ok ? kExitOk : kExitFailed;
}

int cmd_routing_solve(const Context &ctx) {
  const auto &cfg = ctx.cfg;
  auto &out = ctx.out;
  const auto inst = routing::SppInstance::load(cfg.instance_path);
  routing::SolveOptions opt;
  opt.mode = cfg.mode == "async" ? routing::SolveMode::async : routing::SolveMode::sync;
  opt.granularity = routing::parse_granularity(cfg.granularity);
  opt.seed = cfg.seed;
  opt.schedules = cfg.schedules;
  opt.horizon = cfg.horizon;
  opt.sampling = sampling_of(cfg);
  opt.force = cfg.force;
  opt.start = routing::parse_path_list(inst, cfg.start);

  const auto res = routing::solve(inst, opt);
  const auto dec = routing::decompose(inst, opt.granularity);
  out << "granularity: " << routing::to_string(opt.granularity) << " ("
      << dec.op.processor_count() << " processors)\n";
  out << "start: " << inst.set_label(opt.start) << '\n';
  out << "sync: " << describe_run(res.sync_trajectory) << '\n';
  if (res.sync_trajectory.status == iteration::RunStatus::cycle) {
    for (std::size_t k = 0; k < res.cycle.size(); ++k)
      out << "  cycle state " << k << ": " << inst.set_label(res.cycle[k]) << '\n';
  } else {
    out << "fixed point: " << inst.set_label(res.sync_final) << '\n';
    for (routing::NodeId n = 0; n < inst.node_count(); ++n)
      out << "  " << inst.nodes()[n] << ": "
          << inst.set_label(routing::node_view(inst, res.sync_final, n)) << '\n';
  }
  out << "stable: " << (res.stable ? "yes" : "no") << '\n';

  json summary{{"granularity", routing::to_string(opt.granularity)},
               {"start", inst.set_label(opt.start)},
               {"sync", trajectory_json(res.sync_trajectory, dec.op)},
               {"fixed_point", inst.set_label(res.sync_final)},
               {"stable", res.stable}};
  if (!res.cycle.empty()) {
    json cyc = json::array();
    for (auto s : res.cycle)
      cyc.push_back(inst.set_label(s));
    summary["cycle"] = cyc;
  }

  bool ok = res.stable;
  if (opt.mode == routing::SolveMode::async) {
    std::size_t agree = 0, max_tick = 0;
    json runs = json::array();
    for (const auto &r : res.async_runs) {
      const bool hit = r.status == iteration::RunStatus::converged && r.final_state == res.sync_final;
      agree += hit;
      if (r.converged_at)
        max_tick = std::max(max_tick, *r.converged_at);
      runs.push_back({{"seed", r.seed},
                      {"status", iteration::to_string(r.status)},
                      {"converged_at", r.converged_at ? json(*r.converged_at) : json(nullptr)},
                      {"final_state", inst.set_label(r.final_state)}});
    }
    out << "async: " << agree << '/' << res.async_runs.size()
        << " schedules converged to the sync fixed point (seeds " << cfg.seed << ".."
        << cfg.seed + cfg.schedules - 1 << ", B=" << cfg.max_staleness
        << ", W=" << cfg.fairness_window << ", horizon " << cfg.horizon
        << "), max converged_at " << max_tick << '\n';
    summary["async"] = runs;
    ok = ok && agree == res.async_runs.size();
  }

  if (!cfg.trace_path.empty()) {
    trace::DistanceLabeler dist;
    if (routing::check_strictly_inflationary(inst).pass && res.stable)
      dist = routing_distance(inst, dec, res.sync_final);
    const auto &tr = opt.mode == routing::SolveMode::async && !res.async_trajectories.empty()
                         ? res.async_trajectories.front()
                         : res.sync_trajectory;
    maybe_trace(ctx, tr, dec.op, dec.processor_names, dist);
  }
  if (!cfg.summary_path.empty())
    write_json_file(cfg.summary_path, summary);
  return ok ? kExitOk : kExitFailed;
}

int cmd_logic_solve(const Context &ctx) {
  const auto &cfg = ctx.cfg;
  auto &out = ctx.out;
  const auto program = logic::GroundProgram::load(cfg.instance_path);
  const auto strat = logic::stratification_for(program);
  const auto perfect = logic::compute_perfect_model(program);

  std::vector<std::string> levels;
  for (logic::AtomId a = 0; a < program.atom_count(); ++a)
    levels.push_back(program.atoms()[a] + "=" + std::to_string(strat.rho[a]));
  out << "atoms: " << program.atom_count() << '\n';
  out << "strata: " << join(levels, ", ") << '\n';
  std::vector<std::string> steps;
  for (const auto &i : perfect.trajectory)
    steps.push_back(i.to_string(program));
  out << "trajectory: " << join(steps, " -> ") << '\n';
  out << "model: " << perfect.model.to_string(program) << '\n';
  out << "oracle: " << logic::to_string(perfect.status);
  if (perfect.status != logic::ModelStatus::agrees)
    out << " (stratified model " << perfect.oracle_model.to_string(program) << ')';
  out << '\n';

  json summary{{"strata", levels},
               {"trajectory", steps},
               {"model", perfect.model.to_string(program)},
               {"oracle_model", perfect.oracle_model.to_string(program)},
               {"status", logic::to_string(perfect.status)}};

  std::optional<LogicCertificate> cert;
  if (program.atom_count() <= 12) {
    const auto cls = logic::classify_tp_contraction(program);
    out << "T_P: " << ultrametric::to_string(cls.report.classification);
    if (!cls.report.witness.empty() &&
        cls.report.classification != ultrametric::ContractionClass::strict_contraction) {
      std::vector<std::string> w;
      for (auto e : cls.report.witness)
        w.push_back(logic::Interpretation::from_bits(program.atom_count(), e).to_string(program));
      out << " (witness " << join(w, ", ") << ')';
    }
    out << '\n';
    summary["classification"] = ultrametric::to_string(cls.report.classification);
    if (cls.report.classification >= ultrametric::ContractionClass::contraction_strict_on_orbits &&
        perfect.status == logic::ModelStatus::agrees)
      cert = LogicCertificate{strat, perfect.model};
  } else {
    out << "T_P: not classified (more than 12 atoms)\n";
  }

  bool ok = perfect.status == logic::ModelStatus::agrees;
  const auto op = logic::per_atom_operator(program);
  const auto empty = logic::to_state(logic::Interpretation(program.atom_count()));
  std::optional<iteration::Trajectory> first;
  if (cfg.mode == "async") {
    std::size_t hits = 0, max_tick = 0;
    json runs = json::array();
    for (std::size_t s = 0; s < cfg.schedules; ++s) {
      const auto seed = cfg.seed + s;
      const auto sched =
          iteration::sample_schedule(op.processor_count(), cfg.horizon, seed, sampling_of(cfg));
      auto tr = iteration::run_async(op, empty, sched, bounds_of(cfg));
      const auto final = logic::from_state(tr.final_state());
      const bool hit = tr.status == iteration::RunStatus::converged && final == perfect.oracle_model;
      hits += hit;
      if (tr.converged_at)
        max_tick = std::max(max_tick, *tr.converged_at);
      runs.push_back({{"seed", seed},
                      {"status", iteration::to_string(tr.status)},
                      {"final_state", final.to_string(program)}});
      if (!first)
        first = std::move(tr);
    }
    out << "async: " << hits << '/' << cfg.schedules
        << " per-atom schedules converged to the stratified model (seeds " << cfg.seed << ".."
        << cfg.seed + cfg.schedules - 1 << "), max converged_at " << max_tick << '\n';
    summary["async"] = runs;
    ok = ok && hits == cfg.schedules;
  } else {
    first = iteration::run_sync(op, empty, std::size_t{1} << std::min<std::size_t>(program.atom_count(), 20));
  }

  if (!cfg.trace_path.empty()) {
    trace::DistanceLabeler dist;
    if (cert)
      dist = logic_distance(cert->strat, cert->model);
    maybe_trace(ctx, *first, op, program.atoms(), dist);
  }
  if (!cfg.summary_path.empty())
    write_json_file(cfg.summary_path, summary);
  return ok ? kExitOk : kExitFailed;
}

int cmd_run(const Context &ctx, bool async) {
  const auto &cfg = ctx.cfg;
  auto &out = ctx.out;
  Problem p;
  load_problem(p, cfg);
  const auto &op = p.op();
  const auto start = parse_start(p, cfg.start);

  std::string certificate;
  auto dist = certificate_distance(p, certificate, ctx.log);

  iteration::Trajectory tr;
  if (async) {
    const auto schedule =
        cfg.schedule_path.empty()
            ? iteration::sample_schedule(op.processor_count(), cfg.horizon, cfg.seed,
                                         sampling_of(cfg))
            : iteration::load_schedule(cfg.schedule_path, op.processor_count());
    tr = iteration::run_async(op, start, schedule, bounds_of(cfg));
  } else {
    tr = iteration::run_sync(op, start, cfg.horizon);
  }

  out << "mode: " << (async ? "async" : "sync") << '\n';
  out << "processors: " << join(p.names(), ", ") << '\n';
  out << "start: " << op.state_label(start) << '\n';
  out << "status: " << describe_run(tr) << '\n';
  out << "final state: " << op.state_label(tr.final_state()) << '\n';
  out << "certificate: " << certificate << '\n';
  if (dist)
    out << "dist_to_fixpoint: " << dist(tr.final_state()).value_or("") << '\n';

  if (!cfg.trace_path.empty())
    maybe_trace(ctx, tr, op, p.names(), dist);
  if (!cfg.summary_path.empty()) {
    auto doc = trajectory_json(tr, op);
    doc["mode"] = async ? "async" : "sync";
    doc["start"] = op.state_label(start);
    doc["certificate"] = certificate;
    write_json_file(cfg.summary_path, doc);
  }
  return tr.status == iteration::RunStatus::converged ? kExitOk : kExitFailed;
}

// ---------------------------------------------------------------------------
// Argument wiring

void add_input(CLI::App *sub, RunConfig &cfg, const std::string &what) {
  sub->add_option("file", cfg.instance_path, what)->required();
}

void add_campaign_options(CLI::App *sub, RunConfig &cfg) {
  sub->add_option("--seed", cfg.seed, "base seed; schedule s uses seed + s");
  sub->add_option("--horizon", cfg.horizon, "ticks per run")->check(CLI::NonNegativeNumber);
  sub->add_option("--max-staleness", cfg.max_staleness, "staleness bound B")
      ->check(CLI::PositiveNumber);
  sub->add_option("--fairness-window", cfg.fairness_window, "fairness window W")
      ->check(CLI::PositiveNumber);
  sub->add_option("--activation-prob", cfg.activation_prob, "per-tick activation probability")
      ->check(CLI::Range(0.0, 1.0));
}

void add_outputs(CLI::App *sub, RunConfig &cfg) {
  sub->add_option("--trace", cfg.trace_path, "write the trajectory as CSV");
  sub->add_option("--summary", cfg.summary_path, "write a JSON summary");
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  RunConfig cfg;
  CLI::App app{"Certify and simulate asynchronously contracting operators", "ultraco"};
  app.require_subcommand(1);

  auto *space = app.add_subcommand("space", "finite ultrametric spaces");
  space->require_subcommand(1);
  auto *space_check = space->add_subcommand("check", "check the ultrametric axioms");
  add_input(space_check, cfg, "space description (JSON)");

  auto *aco = app.add_subcommand("aco", "asynchronously contracting operators");
  aco->require_subcommand(1);
  auto *aco_certify = aco->add_subcommand("certify", "certify or refute an operator");
  add_input(aco_certify, cfg, "operator, routing instance or logic program");
  add_campaign_options(aco_certify, cfg);
  aco_certify->add_option("--schedules", cfg.schedules, "sampled schedules");
  aco_certify->add_option("--granularity", cfg.granularity, "routing decomposition");
  aco_certify->add_option("--output", cfg.output_path, "write the certificate JSON");
  auto *aco_census = aco->add_subcommand("census", "all 256 operators on {0,1}x{0,1}");
  aco_census->add_option("--output", cfg.output_path, "write per-operator verdicts as JSON");

  auto *routing_cmd = app.add_subcommand("routing", "multipath stable paths problems");
  routing_cmd->require_subcommand(1);
  auto *routing_check = routing_cmd->add_subcommand("check", "validate preferences and contraction");
  add_input(routing_check, cfg, "routing instance (JSON)");
  auto *routing_solve = routing_cmd->add_subcommand("solve", "compute the stable assignment");
  add_input(routing_solve, cfg, "routing instance (JSON)");
  routing_solve->add_option("--mode", cfg.mode)->check(CLI::IsMember({"sync", "async"}));
  routing_solve->add_option("--granularity", cfg.granularity,
                            "per-node, per-source-destination-nexthop or per-path");
  routing_solve->add_option("--schedules", cfg.schedules, "sampled schedules in async mode");
  routing_solve->add_option("--start", cfg.start, "start paths, e.g. \"d;1 d\"");
  routing_solve->add_flag("--force", cfg.force, "run even without strict inflation");
  add_campaign_options(routing_solve, cfg);
  add_outputs(routing_solve, cfg);

  auto *logic_cmd = app.add_subcommand("logic", "stratified ground logic programs");
  logic_cmd->require_subcommand(1);
  auto *logic_solve = logic_cmd->add_subcommand("solve", "compute the perfect model");
  add_input(logic_solve, cfg, "ground program");
  logic_solve->add_option("--mode", cfg.mode)->check(CLI::IsMember({"sync", "async"}));
  logic_solve->add_option("--schedules", cfg.schedules, "sampled schedules in async mode");
  add_campaign_options(logic_solve, cfg);
  add_outputs(logic_solve, cfg);

  auto *run_cmd = app.add_subcommand("run", "iterate an operator");
  run_cmd->require_subcommand(1);
  std::vector<CLI::App *> run_modes;
  for (const char *mode : {"sync", "async"}) {
    auto *sub = run_cmd->add_subcommand(mode, std::string(mode) + "hronous iteration");
    add_input(sub, cfg, "operator, routing instance or logic program");
    sub->add_option("--start", cfg.start, "start state");
    sub->add_option("--granularity", cfg.granularity, "routing decomposition");
    add_campaign_options(sub, cfg);
    add_outputs(sub, cfg);
    run_modes.push_back(sub);
  }
  run_modes[1]->add_option("--schedule", cfg.schedule_path, "schedule file (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitMalformed;
  }

  Context ctx{cfg, out, err, Logger(err)};
  try {
    if (*space_check)
      return cmd_space_check(ctx);
    if (*aco_certify)
      return cmd_aco_certify(ctx);
    if (*aco_census)
      return cmd_aco_census(ctx);
    if (*routing_check)
      return cmd_routing_check(ctx);
    if (*routing_solve)
      return cmd_routing_solve(ctx);
    if (*logic_solve)
      return cmd_logic_solve(ctx);
    if (*run_modes[0])
      return cmd_run(ctx, false);
    if (*run_modes[1])
      return cmd_run(ctx, true);
  } catch (const PreconditionError &e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitMalformed;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitMalformed;
  }
  err << "error: no command\n";
  return kExitMalformed;
}

} // namespace ultraco::cli
