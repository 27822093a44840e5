#include "ultraco/iteration.hpp"

#include "ultraco/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>

namespace ultraco::iteration {

namespace {

// mt19937_64 output is fixed by the standard; the distributions in <random>
// are not, so draws are derived by hand to keep seeds portable.
bool draw_bernoulli(std::mt19937_64 &rng, double p) {
  if (p >= 1.0)
    return true;
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return u < p;
}

std::uint64_t draw_below(std::mt19937_64 &rng, std::uint64_t bound) {
  if (bound <= 1)
    return 0;
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

} // namespace

// ---------------------------------------------------------------------------
// DecomposedOperator

DecomposedOperator::DecomposedOperator(std::vector<std::size_t> component_sizes,
                                       std::vector<ComponentFn> components,
                                       ValueLabeler labeler)
    : sizes_(std::move(component_sizes)), components_(std::move(components)),
      labeler_(std::move(labeler)) {
  if (sizes_.empty())
    throw PreconditionError("operator needs at least one processor");
  if (sizes_.size() != components_.size())
    throw PreconditionError("one component function per processor required");
  for (std::size_t s : sizes_)
    if (s == 0)
      throw PreconditionError("component domains must be nonempty");
}

DecomposedOperator
DecomposedOperator::from_table(std::vector<std::size_t> component_sizes,
                               std::vector<StateVector> images,
                               ValueLabeler labeler) {
  DecomposedOperator shape(component_sizes,
                           std::vector<ComponentFn>(component_sizes.size()));
  const auto size = shape.domain_size();
  if (!size || *size != images.size())
    throw PreconditionError("image table must cover the whole domain");
  for (const auto &img : images)
    if (!shape.in_domain(img))
      throw PreconditionError("image table maps outside the domain");

  auto table = std::make_shared<const std::vector<StateVector>>(std::move(images));
  std::vector<ComponentFn> fns;
  for (std::size_t i = 0; i < component_sizes.size(); ++i)
    fns.emplace_back([table, shape, i](std::span<const std::size_t> state) {
      return (*table)[shape.encode(state)][i];
    });
  return DecomposedOperator(std::move(component_sizes), std::move(fns),
                            std::move(labeler));
}

std::optional<std::size_t> DecomposedOperator::domain_size() const {
  std::size_t total = 1;
  for (std::size_t s : sizes_) {
    if (total > std::numeric_limits<std::size_t>::max() / s)
      return std::nullopt;
    total *= s;
  }
  return total;
}

bool DecomposedOperator::in_domain(std::span<const std::size_t> state) const {
  if (state.size() != sizes_.size())
    return false;
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state[i] >= sizes_[i])
      return false;
  return true;
}

std::size_t DecomposedOperator::encode(std::span<const std::size_t> state) const {
  if (!in_domain(state))
    throw PreconditionError("state outside the operator's domain");
  std::size_t index = 0;
  for (std::size_t i = 0; i < state.size(); ++i)
    index = index * sizes_[i] + state[i];
  return index;
}

StateVector DecomposedOperator::decode(std::size_t index) const {
  StateVector state(sizes_.size());
  for (std::size_t i = sizes_.size(); i-- > 0;) {
    state[i] = index % sizes_[i];
    index /= sizes_[i];
  }
  return state;
}

std::size_t
DecomposedOperator::apply_component(std::size_t i,
                                    std::span<const std::size_t> state) const {
  const std::size_t v = components_[i](state);
  if (v >= sizes_[i])
    throw PreconditionError("component " + std::to_string(i) +
                            " produced a value outside its domain");
  return v;
}

StateVector DecomposedOperator::apply(std::span<const std::size_t> state) const {
  StateVector out(sizes_.size());
  for (std::size_t i = 0; i < sizes_.size(); ++i)
    out[i] = apply_component(i, state);
  return out;
}

std::vector<std::size_t> DecomposedOperator::image_table(std::size_t limit) const {
  const auto size = domain_size();
  if (!size || *size > limit)
    throw SizeLimitError("operator domain exceeds " + std::to_string(limit) +
                         " states");
  std::vector<std::size_t> table(*size);
  for (std::size_t m = 0; m < *size; ++m)
    table[m] = encode(apply(decode(m)));
  return table;
}

std::string DecomposedOperator::value_label(std::size_t i, std::size_t v) const {
  if (labeler_)
    return labeler_(i, v);
  return std::to_string(v);
}

std::string
DecomposedOperator::state_label(std::span<const std::size_t> state) const {
  std::string out = "(";
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (i)
      out += ", ";
    out += value_label(i, state[i]);
  }
  return out + ")";
}

// ---------------------------------------------------------------------------
// Schedule

Schedule::Schedule(std::size_t processors, std::size_t horizon)
    : processors_(processors), horizon_(horizon),
      active_((horizon + 1) * processors, 0),
      sources_((horizon + 1) * processors * processors, 1) {
  if (processors == 0)
    throw PreconditionError("schedule needs at least one processor");
}

std::size_t Schedule::slot(std::size_t t, std::size_t i) const {
  if (t == 0 || t > horizon_ || i >= processors_)
    throw PreconditionError("schedule index (t=" + std::to_string(t) +
                            ", i=" + std::to_string(i) + ") out of range");
  return t * processors_ + i;
}

bool Schedule::active(std::size_t t, std::size_t i) const {
  return active_[slot(t, i)] != 0;
}

void Schedule::set_active(std::size_t t, std::size_t i, bool on) {
  active_[slot(t, i)] = on ? 1 : 0;
}

std::vector<std::size_t> Schedule::activations(std::size_t t) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < processors_; ++i)
    if (active(t, i))
      out.push_back(i);
  return out;
}

std::size_t Schedule::delay_source(std::size_t t, std::size_t i,
                                   std::size_t j) const {
  if (j >= processors_)
    throw PreconditionError("delay source processor out of range");
  const std::int64_t age = sources_[slot(t, i) * processors_ + j];
  return static_cast<std::size_t>(static_cast<std::int64_t>(t) - age);
}

void Schedule::set_delay_source(std::size_t t, std::size_t i, std::size_t j,
                                std::size_t source) {
  if (j >= processors_)
    throw PreconditionError("delay source processor out of range");
  sources_[slot(t, i) * processors_ + j] =
      static_cast<std::int64_t>(t) - static_cast<std::int64_t>(source);
}

std::string ScheduleViolation::describe() const {
  switch (kind) {
  case ScheduleViolationKind::causality:
    return "causality violation at (t=" + std::to_string(t) +
           ", i=" + std::to_string(i) + ", j=" + std::to_string(j) + ")";
  case ScheduleViolationKind::staleness:
    return "staleness bound exceeded at (t=" + std::to_string(t) +
           ", i=" + std::to_string(i) + ", j=" + std::to_string(j) + ")";
  case ScheduleViolationKind::fairness:
    return "fairness violation: processor " + std::to_string(i) +
           " inactive in the window starting at t=" + std::to_string(t);
  }
  return "?";
}

Schedule make_synchronous_schedule(std::size_t processors, std::size_t horizon) {
  Schedule s(processors, horizon);
  for (std::size_t t = 1; t <= horizon; ++t)
    for (std::size_t i = 0; i < processors; ++i)
      s.set_active(t, i);
  return s;
}

Schedule sample_schedule(std::size_t processors, std::size_t horizon,
                         std::uint64_t seed, const SamplingParams &params) {
  if (processors == 0 || horizon == 0)
    throw PreconditionError("schedule needs processors >= 1 and horizon >= 1");
  if (!(params.activation_prob > 0.0 && params.activation_prob <= 1.0))
    throw PreconditionError("activation_prob must lie in (0, 1]");
  if (params.max_staleness < 1)
    throw PreconditionError("max_staleness must be at least 1");
  const auto min_window =
      static_cast<std::size_t>(std::ceil(1.0 / params.activation_prob));
  if (params.fairness_window < min_window)
    throw PreconditionError(
        "fairness window " + std::to_string(params.fairness_window) +
        " is shorter than ceil(1/activation_prob) = " +
        std::to_string(min_window));

  std::mt19937_64 rng(seed);
  Schedule s(processors, horizon);
  std::vector<std::size_t> last_active(processors, 0);
  for (std::size_t t = 1; t <= horizon; ++t) {
    for (std::size_t i = 0; i < processors; ++i) {
      bool on = draw_bernoulli(rng, params.activation_prob);
      // Window [t - W + 1, t] must contain an activation.
      if (!on && t - last_active[i] >= params.fairness_window)
        on = true;
      if (on) {
        s.set_active(t, i);
        last_active[i] = t;
      }
    }
    const std::size_t oldest =
        t > params.max_staleness ? t - params.max_staleness : 0;
    for (std::size_t i = 0; i < processors; ++i)
      for (std::size_t j = 0; j < processors; ++j)
        s.set_delay_source(t, i, j, oldest + draw_below(rng, t - oldest));
  }
  return s;
}

AdmissibilityReport check_admissible_prefix(const Schedule &schedule,
                                            const AdmissibilityBounds &bounds) {
  const std::size_t k = schedule.processors();
  const std::size_t horizon = schedule.horizon();
  const std::size_t window = bounds.fairness_window;
  if (window == 0)
    throw PreconditionError("fairness window must be positive");

  // Windows are reported at their last tick, so merge both checks in tick
  // order to find the earliest violation.
  std::vector<std::size_t> last_active(k, 0);
  for (std::size_t t = 1; t <= horizon; ++t) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        const auto age = static_cast<std::int64_t>(t) -
                         static_cast<std::int64_t>(schedule.delay_source(t, i, j));
        if (age <= 0 || age > static_cast<std::int64_t>(t))
          return {false, ScheduleViolation{ScheduleViolationKind::causality, t, i, j}};
        if (age > static_cast<std::int64_t>(bounds.max_staleness))
          return {false, ScheduleViolation{ScheduleViolationKind::staleness, t, i, j}};
      }
    for (std::size_t i = 0; i < k; ++i) {
      if (schedule.active(t, i))
        last_active[i] = t;
      else if (t - last_active[i] >= window)
        return {false, ScheduleViolation{ScheduleViolationKind::fairness,
                                         t - window + 1, i, 0}};
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Runs

std::string_view to_string(RunStatus status) {
  switch (status) {
  case RunStatus::converged:
    return "converged";
  case RunStatus::cycle:
    return "cycle";
  case RunStatus::horizon_exhausted:
    return "horizon-exhausted";
  }
  return "?";
}

Trajectory run_sync(const DecomposedOperator &op, const StateVector &start,
                    std::size_t max_steps) {
  if (!op.in_domain(start))
    throw PreconditionError("start state outside the operator's domain");
  Trajectory traj;
  traj.states.push_back(start);
  traj.activated.emplace_back();

  std::map<StateVector, std::size_t> seen{{start, 0}};
  for (std::size_t t = 1; t <= max_steps; ++t) {
    StateVector next = op.apply(traj.states.back());
    if (next == traj.states.back()) {
      traj.status = RunStatus::converged;
      traj.converged_at = t - 1;
      return traj;
    }
    traj.states.push_back(next);
    traj.activated.emplace_back(op.processor_count(), true);
    auto [it, inserted] = seen.emplace(std::move(next), t);
    if (!inserted) {
      traj.status = RunStatus::cycle;
      traj.cycle_start = it->second;
      traj.cycle_length = t - it->second;
      return traj;
    }
  }
  traj.status = RunStatus::horizon_exhausted;
  return traj;
}

Trajectory run_async(const DecomposedOperator &op, const StateVector &start,
                     const Schedule &schedule,
                     const AdmissibilityBounds &bounds) {
  if (!op.in_domain(start))
    throw PreconditionError("start state outside the operator's domain");
  if (schedule.processors() != op.processor_count())
    throw PreconditionError("schedule and operator disagree on processor count");
  if (const auto report = check_admissible_prefix(schedule, bounds); !report.pass)
    throw PreconditionError("schedule is not admissible: " +
                            report.first_violation->describe());

  const std::size_t k = op.processor_count();
  Trajectory traj;
  traj.states.reserve(schedule.horizon() + 1);
  traj.states.push_back(start);
  traj.activated.emplace_back();

  std::size_t last_change = 0;
  StateVector args(k);
  for (std::size_t t = 1; t <= schedule.horizon(); ++t) {
    StateVector next = traj.states.back();
    std::vector<bool> fired(k, false);
    for (std::size_t i = 0; i < k; ++i) {
      if (!schedule.active(t, i))
        continue;
      for (std::size_t j = 0; j < k; ++j)
        args[j] = traj.states[schedule.delay_source(t, i, j)][j];
      next[i] = op.apply_component(i, args);
      fired[i] = true;
    }
    if (next != traj.states.back())
      last_change = t;
    traj.states.push_back(std::move(next));
    traj.activated.push_back(std::move(fired));
  }

  const std::size_t quiet = bounds.max_staleness + bounds.fairness_window;
  if (schedule.horizon() - last_change >= quiet) {
    traj.status = RunStatus::converged;
    traj.converged_at = last_change;
  } else {
    traj.status = RunStatus::horizon_exhausted;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Schedule files

Schedule parse_schedule(const nlohmann::json &doc, std::size_t processors) {
  try {
    const auto horizon = doc.at("horizon").get<std::size_t>();
    Schedule s(processors, horizon);
    const auto &acts = doc.at("activations");
    if (!acts.is_array() || acts.size() != horizon)
      throw MalformedInputError("activations must list one array per tick");
    for (std::size_t t = 1; t <= horizon; ++t)
      for (const auto &i : acts[t - 1]) {
        const auto p = i.get<std::size_t>();
        if (p >= processors)
          throw MalformedInputError("activation of unknown processor " +
                                    std::to_string(p));
        s.set_active(t, p);
      }
    for (const auto &d : doc.value("delays", nlohmann::json::array())) {
      if (!d.is_array() || d.size() != 4)
        throw MalformedInputError("delay entries must be [t, i, j, source]");
      const auto t = d[0].get<std::size_t>();
      const auto i = d[1].get<std::size_t>();
      const auto j = d[2].get<std::size_t>();
      if (t == 0 || t > horizon || i >= processors || j >= processors)
        throw MalformedInputError("delay entry out of range");
      s.set_delay_source(t, i, j, d[3].get<std::size_t>());
    }
    return s;
  } catch (const nlohmann::json::exception &e) {
    throw MalformedInputError(std::string("schedule: ") + e.what());
  }
}

Schedule load_schedule(const std::string &path, std::size_t processors) {
  std::ifstream in(path);
  if (!in)
    throw MalformedInputError("cannot open " + path);
  try {
    return parse_schedule(nlohmann::json::parse(in), processors);
  } catch (const nlohmann::json::parse_error &e) {
    throw MalformedInputError(path + ": " + e.what());
  }
}

nlohmann::json schedule_to_json(const Schedule &schedule) {
  nlohmann::json acts = nlohmann::json::array();
  nlohmann::json delays = nlohmann::json::array();
  for (std::size_t t = 1; t <= schedule.horizon(); ++t) {
    acts.push_back(schedule.activations(t));
    for (std::size_t i = 0; i < schedule.processors(); ++i)
      for (std::size_t j = 0; j < schedule.processors(); ++j) {
        const auto src = schedule.delay_source(t, i, j);
        if (src != t - 1)
          delays.push_back({t, i, j, src});
      }
  }
  return {{"horizon", schedule.horizon()},
          {"activations", std::move(acts)},
          {"delays", std::move(delays)}};
}

NamedOperator parse_operator(const nlohmann::json &doc) {
  try {
    auto sizes = doc.at("sizes").get<std::vector<std::size_t>>();
    if (sizes.empty())
      throw MalformedInputError("operator needs at least one component");
    for (auto s : sizes)
      if (s == 0)
        throw MalformedInputError("component sizes must be positive");

    std::vector<std::string> names;
    if (doc.contains("names"))
      names = doc.at("names").get<std::vector<std::string>>();
    else
      for (std::size_t i = 0; i < sizes.size(); ++i)
        names.push_back(std::to_string(i));
    if (names.size() != sizes.size())
      throw MalformedInputError("one name per component is required");

    std::vector<std::vector<std::string>> labels;
    if (doc.contains("labels")) {
      labels = doc.at("labels").get<std::vector<std::vector<std::string>>>();
      if (labels.size() != sizes.size())
        throw MalformedInputError("one label list per component is required");
      for (std::size_t i = 0; i < sizes.size(); ++i)
        if (labels[i].size() != sizes[i])
          throw MalformedInputError("component " + names[i] + " has " +
                                    std::to_string(sizes[i]) + " values but " +
                                    std::to_string(labels[i].size()) + " labels");
    } else {
      for (auto s : sizes) {
        labels.emplace_back();
        for (std::size_t v = 0; v < s; ++v)
          labels.back().push_back(std::to_string(v));
      }
    }

    auto value_of = [&](std::size_t i, const nlohmann::json &v) -> std::size_t {
      if (v.is_number_unsigned()) {
        const auto idx = v.get<std::size_t>();
        if (idx >= sizes[i])
          throw MalformedInputError("value " + std::to_string(idx) +
                                    " out of range for component " + names[i]);
        return idx;
      }
      const auto text = v.get<std::string>();
      const auto it = std::find(labels[i].begin(), labels[i].end(), text);
      if (it == labels[i].end())
        throw MalformedInputError("unknown value \"" + text + "\" for component " +
                                  names[i]);
      return static_cast<std::size_t>(it - labels[i].begin());
    };

    std::vector<StateVector> images;
    for (const auto &img : doc.at("images")) {
      if (!img.is_array() || img.size() != sizes.size())
        throw MalformedInputError("each image must list one value per component");
      StateVector s;
      for (std::size_t i = 0; i < sizes.size(); ++i)
        s.push_back(value_of(i, img[i]));
      images.push_back(std::move(s));
    }
    std::size_t expected = 1;
    for (auto s : sizes) {
      if (expected > (std::size_t{1} << 20) / s)
        throw SizeLimitError("operator domain exceeds 2^20 states");
      expected *= s;
    }
    if (images.size() != expected)
      throw MalformedInputError("images must cover all " + std::to_string(expected) +
                                " states, found " + std::to_string(images.size()));

    auto shared = std::make_shared<const std::vector<std::vector<std::string>>>(labels);
    return {std::move(names),
            DecomposedOperator::from_table(
                std::move(sizes), std::move(images),
                [shared](std::size_t i, std::size_t v) { return (*shared)[i][v]; })};
  } catch (const nlohmann::json::exception &e) {
    throw MalformedInputError(std::string("operator: ") + e.what());
  }
}

NamedOperator load_operator(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw MalformedInputError("cannot open " + path);
  try {
    return parse_operator(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error &e) {
    throw MalformedInputError(path + ": " + e.what());
  }
}

} // namespace ultraco::iteration
