#include "ultraco/logic.hpp"

#include "ultraco/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace ultraco::logic {

// ---------------------------------------------------------------------------
// Program and parser

GroundProgram::GroundProgram(std::vector<std::string> atoms,
                             std::vector<Clause> clauses,
                             std::optional<std::vector<std::uint32_t>> declared_strata)
    : atoms_(std::move(atoms)), clauses_(std::move(clauses)),
      declared_strata_(std::move(declared_strata)) {
  for (const auto &c : clauses_) {
    if (c.head >= atoms_.size())
      throw MalformedInputError("clause head outside the Herbrand base");
    for (const auto &l : c.body)
      if (l.atom >= atoms_.size())
        throw MalformedInputError("body literal outside the Herbrand base");
  }
  if (declared_strata_ && declared_strata_->size() != atoms_.size())
    throw MalformedInputError("declared strata must cover every atom");
}

std::optional<AtomId> GroundProgram::atom_id(std::string_view name) const {
  for (AtomId a = 0; a < atoms_.size(); ++a)
    if (atoms_[a] == name)
      return a;
  return std::nullopt;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
    ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
    --e;
  return std::string(s.substr(b, e - b));
}

// Splits on `sep` outside parentheses.
std::vector<std::string> split_top(std::string_view s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(')
      ++depth;
    else if (c == ')')
      --depth;
    if (c == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool valid_atom(const std::string &a) {
  if (a.empty() || !(std::isalpha(static_cast<unsigned char>(a[0])) || a[0] == '_'))
    return false;
  int depth = 0;
  for (char c : a) {
    const auto u = static_cast<unsigned char>(c);
    if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (--depth < 0)
        return false;
    } else if (std::isspace(u) || c == ',') {
      if (depth == 0)
        return false;
    } else if (!(std::isalnum(u) || c == '_' || c == '\'')) {
      return false;
    }
  }
  return depth == 0;
}

} // namespace

GroundProgram GroundProgram::parse(std::string_view text) {
  std::vector<std::string> atoms;
  std::map<std::string, AtomId> index;
  auto intern = [&](const std::string &name, std::size_t line) {
    if (!valid_atom(name))
      throw MalformedInputError("line " + std::to_string(line) +
                                ": invalid atom \"" + name + "\"");
    auto [it, fresh] = index.emplace(name, atoms.size());
    if (fresh)
      atoms.push_back(name);
    return it->second;
  };

  // Strip comments, remembering the strata pragma and clause start lines.
  std::string body;
  std::vector<std::size_t> line_of; // line number of each char in body
  std::optional<std::pair<std::string, std::size_t>> pragma;
  {
    std::size_t line_no = 0;
    std::string line_text(text);
    std::stringstream lines(line_text);
    std::string line;
    while (std::getline(lines, line)) {
      ++line_no;
      const auto pct = line.find('%');
      if (pct != std::string::npos) {
        const std::string comment = trim(std::string_view(line).substr(pct + 1));
        if (comment.rfind("strata:", 0) == 0) {
          if (pragma)
            throw MalformedInputError("line " + std::to_string(line_no) +
                                      ": duplicate strata pragma");
          pragma.emplace(comment.substr(7), line_no);
        }
        line.resize(pct);
      }
      for (char c : line) {
        body += c;
        line_of.push_back(line_no);
      }
      body += '\n';
      line_of.push_back(line_no);
    }
  }

  std::vector<Clause> clauses;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t k = 0; k < body.size(); ++k) {
    const char c = body[k];
    if (c == '(')
      ++depth;
    else if (c == ')')
      --depth;
    if (c != '.' || depth != 0)
      continue;
    const std::string clause_text = trim(std::string_view(body).substr(start, k - start));
    std::size_t line = line_of[start];
    for (std::size_t s = start; s < k; ++s)
      if (!std::isspace(static_cast<unsigned char>(body[s]))) {
        line = line_of[s];
        break;
      }
    start = k + 1;
    if (clause_text.empty())
      throw MalformedInputError("line " + std::to_string(line) + ": empty clause");

    Clause clause;
    const auto arrow = clause_text.find(":-");
    clause.head = intern(trim(clause_text.substr(0, arrow)), line);
    if (arrow != std::string::npos) {
      for (const auto &raw : split_top(clause_text.substr(arrow + 2), ',')) {
        std::string lit = trim(raw);
        Literal l;
        if (lit.rfind("not ", 0) == 0 || lit.rfind("not\t", 0) == 0) {
          l.negated = true;
          lit = trim(lit.substr(4));
        } else if (lit.rfind("\\+", 0) == 0) {
          l.negated = true;
          lit = trim(lit.substr(2));
        }
        l.atom = intern(lit, line);
        clause.body.push_back(l);
      }
    }
    clauses.push_back(std::move(clause));
  }
  if (!trim(std::string_view(body).substr(start)).empty())
    throw MalformedInputError("line " + std::to_string(line_of[start]) +
                              ": clause is missing its terminating '.'");

  std::optional<std::vector<std::uint32_t>> strata;
  if (pragma) {
    std::string mapping = trim(pragma->first);
    if (mapping.size() < 2 || mapping.front() != '{' || mapping.back() != '}')
      throw MalformedInputError("line " + std::to_string(pragma->second) +
                                ": strata pragma must be {atom: level, ...}");
    std::vector<std::optional<std::uint32_t>> levels(atoms.size());
    for (const auto &entry : split_top(mapping.substr(1, mapping.size() - 2), ',')) {
      if (trim(entry).empty())
        continue;
      const auto colon = entry.rfind(':');
      if (colon == std::string::npos)
        throw MalformedInputError("line " + std::to_string(pragma->second) +
                                  ": strata entries are atom: level");
      const auto name = trim(entry.substr(0, colon));
      const auto it = index.find(name);
      if (it == index.end())
        throw MalformedInputError("line " + std::to_string(pragma->second) +
                                  ": strata pragma names unknown atom \"" + name + "\"");
      try {
        levels[it->second] = static_cast<std::uint32_t>(std::stoul(trim(entry.substr(colon + 1))));
      } catch (const std::exception &) {
        throw MalformedInputError("line " + std::to_string(pragma->second) +
                                  ": bad level for \"" + name + "\"");
      }
    }
    std::vector<std::uint32_t> rho;
    for (AtomId a = 0; a < atoms.size(); ++a) {
      if (!levels[a])
        throw MalformedInputError("strata pragma does not cover atom \"" + atoms[a] + "\"");
      rho.push_back(*levels[a]);
    }
    strata = std::move(rho);
  }
  return GroundProgram(std::move(atoms), std::move(clauses), std::move(strata));
}

GroundProgram GroundProgram::load(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw MalformedInputError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const MalformedInputError &e) {
    throw MalformedInputError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Interpretations

Interpretation::Interpretation(std::size_t atoms,
                               std::initializer_list<AtomId> true_atoms)
    : truth_(atoms, false) {
  for (AtomId a : true_atoms)
    truth_.at(a) = true;
}

std::size_t Interpretation::count() const {
  return static_cast<std::size_t>(std::count(truth_.begin(), truth_.end(), true));
}

std::uint64_t Interpretation::to_bits() const {
  if (truth_.size() > 64)
    throw SizeLimitError("interpretation has more than 64 atoms");
  std::uint64_t bits = 0;
  for (std::size_t a = 0; a < truth_.size(); ++a)
    if (truth_[a])
      bits |= std::uint64_t{1} << a;
  return bits;
}

Interpretation Interpretation::from_bits(std::size_t atoms, std::uint64_t bits) {
  Interpretation i(atoms);
  for (std::size_t a = 0; a < atoms; ++a)
    i.truth_[a] = (bits >> a) & 1U;
  return i;
}

std::string Interpretation::to_string(const GroundProgram &program) const {
  std::string out = "{";
  bool first = true;
  for (AtomId a = 0; a < truth_.size(); ++a) {
    if (!truth_[a])
      continue;
    if (!first)
      out += ", ";
    first = false;
    out += program.atoms()[a];
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// Stratification

std::uint32_t Stratification::max_level() const {
  return rho.empty() ? 0 : *std::max_element(rho.begin(), rho.end());
}

StratificationResult find_stratification(const GroundProgram &program) {
  const std::size_t n = program.atom_count();
  // Edge body atom -> head, weight 1 when the body literal is negated.
  struct Edge {
    AtomId to;
    bool negative;
  };
  std::vector<std::vector<Edge>> out(n);
  for (const auto &c : program.clauses())
    for (const auto &l : c.body)
      out[l.atom].push_back({c.head, l.negated});

  // Tarjan's SCC; components come out in reverse topological order.
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<AtomId> stack;
  int counter = 0, comps = 0;
  std::function<void(AtomId)> strongconnect = [&](AtomId v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (const auto &e : out[v]) {
      if (index[e.to] < 0) {
        strongconnect(e.to);
        low[v] = std::min(low[v], low[e.to]);
      } else if (on_stack[e.to]) {
        low[v] = std::min(low[v], index[e.to]);
      }
    }
    if (low[v] == index[v]) {
      AtomId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = comps;
      } while (w != v);
      ++comps;
    }
  };
  for (AtomId v = 0; v < n; ++v)
    if (index[v] < 0)
      strongconnect(v);

  StratificationResult result;
  for (AtomId v = 0; v < n; ++v)
    for (const auto &e : out[v]) {
      if (!e.negative || comp[v] != comp[e.to])
        continue;
      // Witness: v -(not)-> e.to, then back to v inside the component.
      std::vector<AtomId> prev(n, static_cast<AtomId>(-1));
      std::vector<AtomId> queue{e.to};
      std::vector<bool> seen(n, false);
      seen[e.to] = true;
      for (std::size_t q = 0; q < queue.size(); ++q)
        for (const auto &f : out[queue[q]])
          if (!seen[f.to] && comp[f.to] == comp[v]) {
            seen[f.to] = true;
            prev[f.to] = queue[q];
            queue.push_back(f.to);
          }
      std::vector<AtomId> back;
      for (AtomId w = v; w != e.to; w = prev[w])
        back.push_back(w);
      result.cycle = {v, e.to};
      for (auto it = back.rbegin(); it != back.rend(); ++it)
        if (*it != v)
          result.cycle.push_back(*it);
      result.cycle.push_back(v);
      if (v == e.to)
        result.cycle = {v, v};
      return result;
    }

  // Longest-path layering over the condensation, processed sources first.
  std::vector<std::vector<AtomId>> members(comps);
  for (AtomId v = 0; v < n; ++v)
    members[comp[v]].push_back(v);
  std::vector<std::uint32_t> level(comps, 0);
  for (int c = comps - 1; c >= 0; --c)
    for (AtomId v : members[c])
      for (const auto &e : out[v])
        if (comp[e.to] != c)
          level[comp[e.to]] =
              std::max(level[comp[e.to]], level[c] + (e.negative ? 1U : 0U));

  Stratification strat;
  strat.rho.resize(n);
  for (AtomId v = 0; v < n; ++v)
    strat.rho[v] = level[comp[v]];
  result.strata = std::move(strat);
  return result;
}

std::optional<std::string> stratification_violation(const GroundProgram &program,
                                                    const Stratification &strat) {
  if (strat.rho.size() != program.atom_count())
    return "stratification does not cover every atom";
  for (const auto &c : program.clauses())
    for (const auto &l : c.body) {
      const auto head = strat.rho[c.head], body = strat.rho[l.atom];
      if (l.negated ? !(head > body) : !(head >= body))
        return "clause for " + program.atoms()[c.head] + " needs rho(" +
               program.atoms()[c.head] + ") " + (l.negated ? ">" : ">=") + " rho(" +
               program.atoms()[l.atom] + ")";
    }
  return std::nullopt;
}

Stratification stratification_for(const GroundProgram &program) {
  if (const auto &declared = program.declared_strata()) {
    Stratification strat{*declared};
    if (const auto why = stratification_violation(program, strat))
      throw PreconditionError("declared strata are invalid: " + *why);
    return strat;
  }
  auto found = find_stratification(program);
  if (!found.strata) {
    std::string text;
    for (AtomId a : found.cycle)
      text += (text.empty() ? "" : " -> ") + program.atoms()[a];
    throw PreconditionError("program is not stratified; negative cycle " + text);
  }
  return *found.strata;
}

// ---------------------------------------------------------------------------
// T_P and distances

Interpretation immediate_consequence(const GroundProgram &program,
                                     const Interpretation &interpretation) {
  if (interpretation.size() != program.atom_count())
    throw PreconditionError("interpretation is over a different base");
  Interpretation next(program.atom_count());
  for (const auto &c : program.clauses()) {
    const bool fires = std::all_of(c.body.begin(), c.body.end(), [&](const Literal &l) {
      return interpretation.holds(l.atom) != l.negated;
    });
    if (fires)
      next.set(c.head);
  }
  return next;
}

namespace {

std::optional<std::uint32_t> min_differing_stratum(const Stratification &strat,
                                                   const Interpretation &i,
                                                   const Interpretation &j) {
  if (i.size() != j.size() || i.size() != strat.rho.size())
    throw PreconditionError("interpretations over different bases");
  std::optional<std::uint32_t> s;
  for (AtomId a = 0; a < i.size(); ++a)
    if (i.holds(a) != j.holds(a))
      s = s ? std::min(*s, strat.rho[a]) : strat.rho[a];
  return s;
}

} // namespace

Dyadic interpretation_distance(const Stratification &strat, const Interpretation &i,
                               const Interpretation &j) {
  const auto s = min_differing_stratum(strat, i, j);
  return s ? Dyadic::inverse_power_of_two(*s) : Dyadic::zero();
}

std::uint32_t literal_stratum_distance(const Stratification &strat,
                                       const Interpretation &i,
                                       const Interpretation &j) {
  const auto s = min_differing_stratum(strat, i, j);
  return s ? *s + 1 : 0;
}

ultrametric::FiniteUltrametricSpace
interpretation_space(const GroundProgram &program, const Stratification &strat,
                     DistanceReading reading, std::size_t max_atoms) {
  const std::size_t n = program.atom_count();
  if (n > max_atoms)
    throw SizeLimitError(std::to_string(n) + " atoms exceed the exhaustive limit of " +
                         std::to_string(max_atoms));
  const std::size_t count = std::size_t{1} << n;
  std::vector<Interpretation> points;
  std::vector<std::string> names;
  points.reserve(count);
  names.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    points.push_back(Interpretation::from_bits(n, k));
    names.push_back(points.back().to_string(program));
  }

  if (reading == DistanceReading::literal_min) {
    return ultrametric::FiniteUltrametricSpace(
        std::move(names), ultrametric::RadiusScale::integers(strat.max_level() + 1),
        [&](std::size_t a, std::size_t b) {
          return ultrametric::Radius{literal_stratum_distance(strat, points[a], points[b])};
        });
  }
  std::vector<Dyadic> values;
  for (auto r : strat.rho)
    values.push_back(Dyadic::inverse_power_of_two(r));
  const auto scale = ultrametric::RadiusScale::from_dyadics(values);
  return ultrametric::FiniteUltrametricSpace(
      std::move(names), scale, [&](std::size_t a, std::size_t b) {
        return scale.radius_of(interpretation_distance(strat, points[a], points[b]));
      });
}

// ---------------------------------------------------------------------------
// Models

Interpretation stratified_model(const GroundProgram &program,
                                const Stratification &strat) {
  Interpretation model(program.atom_count());
  std::set<std::uint32_t> levels(strat.rho.begin(), strat.rho.end());
  for (std::uint32_t s : levels) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto &c : program.clauses()) {
        if (strat.rho[c.head] != s || model.holds(c.head))
          continue;
        const bool fires = std::all_of(c.body.begin(), c.body.end(), [&](const Literal &l) {
          return model.holds(l.atom) != l.negated;
        });
        if (fires) {
          model.set(c.head);
          changed = true;
        }
      }
    }
  }
  return model;
}

std::string_view to_string(ModelStatus status) {
  switch (status) {
  case ModelStatus::agrees:
    return "agrees";
  case ModelStatus::oracle_mismatch:
    return "oracle-mismatch";
  case ModelStatus::cycle:
    return "cycle";
  }
  return "?";
}

PerfectModelResult compute_perfect_model(const GroundProgram &program) {
  const auto strat = stratification_for(program);
  PerfectModelResult result;
  result.oracle_model = stratified_model(program, strat);

  const std::size_t n = program.atom_count();
  const std::size_t max_steps = n >= 20 ? std::size_t{1} << 20 : std::size_t{1} << n;
  std::map<Interpretation, std::size_t> seen;
  Interpretation current(n);
  result.trajectory.push_back(current);
  seen.emplace(current, 0);
  for (std::size_t step = 1; step <= max_steps; ++step) {
    Interpretation next = immediate_consequence(program, current);
    if (next == current)
      break;
    result.trajectory.push_back(next);
    auto [it, fresh] = seen.emplace(next, step);
    if (!fresh) {
      result.status = ModelStatus::cycle;
      result.cycle_start = it->second;
      result.model = next;
      return result;
    }
    current = std::move(next);
  }
  result.model = current;
  result.status = result.model == result.oracle_model ? ModelStatus::agrees
                                                      : ModelStatus::oracle_mismatch;
  return result;
}

TpClassification classify_tp_contraction(const GroundProgram &program,
                                         DistanceReading reading,
                                         std::size_t max_atoms) {
  TpClassification out;
  out.strata = stratification_for(program);
  const auto space = interpretation_space(program, out.strata, reading, max_atoms);
  const std::size_t n = program.atom_count();
  std::vector<std::size_t> sigma(space.size());
  for (std::size_t k = 0; k < space.size(); ++k)
    sigma[k] = immediate_consequence(program, Interpretation::from_bits(n, k)).to_bits();
  out.report = ultrametric::classify_contraction(space, sigma);
  return out;
}

iteration::StateVector to_state(const Interpretation &interpretation) {
  iteration::StateVector s(interpretation.size());
  for (AtomId a = 0; a < s.size(); ++a)
    s[a] = interpretation.holds(a) ? 1 : 0;
  return s;
}

Interpretation from_state(std::span<const std::size_t> state) {
  Interpretation i(state.size());
  for (AtomId a = 0; a < state.size(); ++a)
    i.set(a, state[a] != 0);
  return i;
}

iteration::DecomposedOperator per_atom_operator(const GroundProgram &program) {
  // Clauses grouped by head so each processor only evaluates its own atom.
  auto by_head = std::make_shared<std::vector<std::vector<Clause>>>(program.atom_count());
  for (const auto &c : program.clauses())
    (*by_head)[c.head].push_back(c);

  std::vector<iteration::ComponentFn> fns;
  for (AtomId a = 0; a < program.atom_count(); ++a)
    fns.emplace_back([by_head, a](std::span<const std::size_t> state) -> std::size_t {
      for (const auto &c : (*by_head)[a]) {
        const bool fires = std::all_of(c.body.begin(), c.body.end(), [&](const Literal &l) {
          return (state[l.atom] != 0) != l.negated;
        });
        if (fires)
          return 1;
      }
      return 0;
    });
  return iteration::DecomposedOperator(std::vector<std::size_t>(program.atom_count(), 2),
                                       std::move(fns));
}

} // namespace ultraco::logic
