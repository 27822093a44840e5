#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ultraco::iteration {

/// One value index per processor; component i ranges over [0, |M_i|).
using StateVector = std::vector<std::size_t>;

/// sigma_i : M -> M_i, evaluated on a full (possibly mixed-age) argument vector.
using ComponentFn = std::function<std::size_t(std::span<const std::size_t>)>;

/// Renders value v of component i for traces and summaries.
using ValueLabeler = std::function<std::string(std::size_t, std::size_t)>;

/// An operator on M = M_1 x ... x M_k given by its k component functions.
class DecomposedOperator {
public:
  DecomposedOperator(std::vector<std::size_t> component_sizes,
                     std::vector<ComponentFn> components,
                     ValueLabeler labeler = {});

  /// Operator given by its full image table, indexed by encode(state).
  static DecomposedOperator from_table(std::vector<std::size_t> component_sizes,
                                       std::vector<StateVector> images,
                                       ValueLabeler labeler = {});

  [[nodiscard]] std::size_t processor_count() const { return sizes_.size(); }
  [[nodiscard]] std::size_t component_size(std::size_t i) const {
    return sizes_[i];
  }
  [[nodiscard]] const std::vector<std::size_t> &component_sizes() const {
    return sizes_;
  }

  /// |M|, or nullopt if it does not fit in size_t.
  [[nodiscard]] std::optional<std::size_t> domain_size() const;

  [[nodiscard]] bool in_domain(std::span<const std::size_t> state) const;

  /// Mixed-radix index of a state, last component fastest.
  [[nodiscard]] std::size_t encode(std::span<const std::size_t> state) const;
  [[nodiscard]] StateVector decode(std::size_t index) const;

  [[nodiscard]] std::size_t apply_component(std::size_t i,
                                            std::span<const std::size_t> state) const;

  /// The assembled map: sigma(m)_i = sigma_i(m).
  [[nodiscard]] StateVector apply(std::span<const std::size_t> state) const;

  /// sigma as an index table over the whole domain. Throws SizeLimitError
  /// when |M| exceeds `limit`.
  [[nodiscard]] std::vector<std::size_t> image_table(std::size_t limit) const;

  [[nodiscard]] std::string value_label(std::size_t i, std::size_t v) const;
  [[nodiscard]] std::string state_label(std::span<const std::size_t> state) const;

private:
  std::vector<std::size_t> sizes_;
  std::vector<ComponentFn> components_;
  ValueLabeler labeler_;
};

/// A finite-horizon activation/delay schedule over processors 0..k-1 and
/// ticks 1..horizon. delay_source(t, i, j) is the tick whose value of
/// processor j is read by processor i at tick t.
class Schedule {
public:
  /// No activations; every delay source defaults to t - 1.
  Schedule(std::size_t processors, std::size_t horizon);

  [[nodiscard]] std::size_t processors() const { return processors_; }
  [[nodiscard]] std::size_t horizon() const { return horizon_; }

  [[nodiscard]] bool active(std::size_t t, std::size_t i) const;
  void set_active(std::size_t t, std::size_t i, bool on = true);
  [[nodiscard]] std::vector<std::size_t> activations(std::size_t t) const;

  [[nodiscard]] std::size_t delay_source(std::size_t t, std::size_t i,
                                         std::size_t j) const;
  void set_delay_source(std::size_t t, std::size_t i, std::size_t j,
                        std::size_t source);

  friend bool operator==(const Schedule &, const Schedule &) = default;

private:
  [[nodiscard]] std::size_t slot(std::size_t t, std::size_t i) const;

  std::size_t processors_;
  std::size_t horizon_;
  std::vector<std::uint8_t> active_;
  // Ages t - source, kept signed; out-of-range sources are stored as given.
  std::vector<std::int64_t> sources_;
};

/// Finite stand-ins for the infinite admissibility conditions.
struct AdmissibilityBounds {
  std::size_t fairness_window = 8; // W: every processor activates in every W ticks
  std::size_t max_staleness = 5;   // B: t - delay_source(t, i, j) <= B
};

enum class ScheduleViolationKind { causality, fairness, staleness };

struct ScheduleViolation {
  ScheduleViolationKind kind;
  std::size_t t = 0; // tick (first tick of the window for fairness)
  std::size_t i = 0;
  std::size_t j = 0; // unused for fairness

  [[nodiscard]] std::string describe() const;
};

struct AdmissibilityReport {
  bool pass = true;
  std::optional<ScheduleViolation> first_violation;
};

Schedule make_synchronous_schedule(std::size_t processors, std::size_t horizon);

struct SamplingParams {
  double activation_prob = 0.5;
  std::size_t max_staleness = 5;
  std::size_t fairness_window = 8;
};

/// Deterministic in (processors, horizon, seed, params). Each processor
/// activates with probability activation_prob, forced when it would otherwise
/// miss a fairness window; each delay source is uniform on
/// [max(0, t - B), t - 1]. Throws PreconditionError for unusable parameters.
Schedule sample_schedule(std::size_t processors, std::size_t horizon,
                         std::uint64_t seed, const SamplingParams &params);

/// Checks causality, the fairness window and the staleness bound, in tick
/// order, and reports the first violation.
AdmissibilityReport check_admissible_prefix(const Schedule &schedule,
                                            const AdmissibilityBounds &bounds);

enum class RunStatus { converged, cycle, horizon_exhausted };

[[nodiscard]] std::string_view to_string(RunStatus status);

struct Trajectory {
  std::vector<StateVector> states;          // x(0), x(1), ...
  std::vector<std::vector<bool>> activated; // activated[t][i]; row 0 is empty
  RunStatus status = RunStatus::horizon_exhausted;
  std::optional<std::size_t> converged_at;
  std::optional<std::size_t> cycle_start; // first tick of the repeating block
  std::size_t cycle_length = 0;

  [[nodiscard]] const StateVector &final_state() const { return states.back(); }
  [[nodiscard]] std::size_t ticks() const { return states.size() - 1; }
};

/// x(t) = sigma(x(t - 1)) until a fixed point, a revisited state, or
/// max_steps applications.
Trajectory run_sync(const DecomposedOperator &op, const StateVector &start,
                    std::size_t max_steps);

/// The asynchronous recurrence driven by `schedule`. Converged when the state
/// has not changed for the last B + W ticks of the horizon.
Trajectory run_async(const DecomposedOperator &op, const StateVector &start,
                     const Schedule &schedule,
                     const AdmissibilityBounds &bounds);

/// {"horizon": T, "activations": [[i, ...] per tick], "delays": [[t, i, j, t'], ...]}
Schedule parse_schedule(const nlohmann::json &doc, std::size_t processors);
Schedule load_schedule(const std::string &path, std::size_t processors);
nlohmann::json schedule_to_json(const Schedule &schedule);

struct NamedOperator {
  std::vector<std::string> processor_names;
  DecomposedOperator op;
};

/// Operator file: {"sizes": [n_1, ...], "names"?: [...], "labels"?: [[...], ...],
/// "images": [...]} where images[encode(m)] is sigma(m), written with value
/// indices or value labels.
NamedOperator parse_operator(const nlohmann::json &doc);
NamedOperator load_operator(const std::string &path);

} // namespace ultraco::iteration
