#pragma once

#include "ultraco/dyadic.hpp"
#include "ultraco/iteration.hpp"
#include "ultraco/ultrametric.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ultraco::logic {

using AtomId = std::size_t;

struct Literal {
  AtomId atom = 0;
  bool negated = false;
  friend bool operator==(const Literal &, const Literal &) = default;
};

/// head :- body. A fact has an empty body.
struct Clause {
  AtomId head = 0;
  std::vector<Literal> body;
  friend bool operator==(const Clause &, const Clause &) = default;
};

/// A ground normal program over a finite Herbrand base.
class GroundProgram {
public:
  GroundProgram(std::vector<std::string> atoms, std::vector<Clause> clauses,
                std::optional<std::vector<std::uint32_t>> declared_strata = {});

  [[nodiscard]] const std::vector<std::string> &atoms() const { return atoms_; }
  [[nodiscard]] std::size_t atom_count() const { return atoms_.size(); }
  [[nodiscard]] const std::vector<Clause> &clauses() const { return clauses_; }
  [[nodiscard]] std::optional<AtomId> atom_id(std::string_view name) const;
  [[nodiscard]] const std::optional<std::vector<std::uint32_t>> &
  declared_strata() const {
    return declared_strata_;
  }

  /// One clause per `.`: `head :- lit, lit.` or `head.`, with `not a` for
  /// negation and `%` comments. A `% strata: {a: 0, b: 1}` line supplies the
  /// stratification. Atoms are numbered in order of first appearance.
  static GroundProgram parse(std::string_view text);
  static GroundProgram load(const std::string &path);

private:
  std::vector<std::string> atoms_;
  std::vector<Clause> clauses_;
  std::optional<std::vector<std::uint32_t>> declared_strata_;
};

/// Truth assignment over the program's base; bit a is atom a.
class Interpretation {
public:
  Interpretation() = default;
  explicit Interpretation(std::size_t atoms) : truth_(atoms, false) {}
  Interpretation(std::size_t atoms, std::initializer_list<AtomId> true_atoms);

  [[nodiscard]] std::size_t size() const { return truth_.size(); }
  [[nodiscard]] bool holds(AtomId a) const { return truth_[a]; }
  void set(AtomId a, bool value = true) { truth_[a] = value; }
  [[nodiscard]] std::size_t count() const;

  /// Bitmask form for bases of at most 64 atoms.
  [[nodiscard]] std::uint64_t to_bits() const;
  static Interpretation from_bits(std::size_t atoms, std::uint64_t bits);

  /// "{q, p}" in atom order.
  [[nodiscard]] std::string to_string(const GroundProgram &program) const;

  friend bool operator==(const Interpretation &, const Interpretation &) = default;
  friend auto operator<=>(const Interpretation &, const Interpretation &) = default;

private:
  std::vector<bool> truth_;
};

struct Stratification {
  std::vector<std::uint32_t> rho;
  [[nodiscard]] std::uint32_t max_level() const;
};

struct StratificationResult {
  std::optional<Stratification> strata;
  /// When rejected: atoms of a dependency cycle through a negative edge,
  /// first atom repeated at the end.
  std::vector<AtomId> cycle;
};

/// Minimal levels satisfying rho(head) >= rho(B) for positive body atoms and
/// rho(head) > rho(B) for negated ones, or a negative cycle.
StratificationResult find_stratification(const GroundProgram &program);

/// Description of the first clause the levels violate, if any.
std::optional<std::string> stratification_violation(const GroundProgram &program,
                                                    const Stratification &strat);

/// The declared strata when present (validated), else find_stratification.
/// Throws PreconditionError for unstratifiable programs or bad declarations.
Stratification stratification_for(const GroundProgram &program);

/// Heads of the clauses whose bodies hold in I (¬B holds iff B ∉ I).
Interpretation immediate_consequence(const GroundProgram &program,
                                     const Interpretation &interpretation);

/// 0 if I = J, else 2^(-s) with s the least stratum in I △ J.
Dyadic interpretation_distance(const Stratification &strat, const Interpretation &i,
                               const Interpretation &j);

/// The unrepaired min-stratum reading, shifted by one so distinct
/// interpretations stay at a nonzero distance: 0 if I = J, else
/// 1 + min rho over I △ J. Kept for comparison only.
std::uint32_t literal_stratum_distance(const Stratification &strat,
                                       const Interpretation &i,
                                       const Interpretation &j);

enum class DistanceReading { dyadic, literal_min };

/// All 2^|B_P| interpretations (element k is from_bits(k)) with the chosen
/// distance. Throws SizeLimitError above max_atoms.
ultrametric::FiniteUltrametricSpace
interpretation_space(const GroundProgram &program, const Stratification &strat,
                     DistanceReading reading = DistanceReading::dyadic,
                     std::size_t max_atoms = 12);

/// Stratum-by-stratum evaluation: ascending levels, negations read from the
/// settled lower strata, positive atoms closed to a least fixed point.
Interpretation stratified_model(const GroundProgram &program,
                                const Stratification &strat);

enum class ModelStatus { agrees, oracle_mismatch, cycle };

[[nodiscard]] std::string_view to_string(ModelStatus status);

struct PerfectModelResult {
  ModelStatus status = ModelStatus::agrees;
  Interpretation model;        // the T_P fixed point (or last state)
  Interpretation oracle_model; // stratified_model
  std::vector<Interpretation> trajectory; // ∅, T_P(∅), ... up to the fixed point
  std::optional<std::size_t> cycle_start;
};

/// Iterates T_P from ∅ to a fixed point and cross-checks it against the
/// stratified oracle. Throws PreconditionError when no stratification exists.
PerfectModelResult compute_perfect_model(const GroundProgram &program);

struct TpClassification {
  Stratification strata;
  ultrametric::ContractionReport report;
};

/// classify_contraction of T_P on the full interpretation space.
TpClassification classify_tp_contraction(const GroundProgram &program,
                                         DistanceReading reading = DistanceReading::dyadic,
                                         std::size_t max_atoms = 12);

/// One processor per atom, values {0 = false, 1 = true}; component a is
/// atom a of T_P.
iteration::DecomposedOperator per_atom_operator(const GroundProgram &program);

iteration::StateVector to_state(const Interpretation &interpretation);
Interpretation from_state(std::span<const std::size_t> state);

} // namespace ultraco::logic
