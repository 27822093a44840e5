#pragma once

#include "ultraco/iteration.hpp"
#include "ultraco/ultrametric.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ultraco::aco {

using iteration::DecomposedOperator;
using iteration::StateVector;

/// A product of nonempty per-component value sets.
class Box {
public:
  Box() = default;
  /// Each component list is sorted and deduplicated; emptiness is checked by
  /// verify_box_sequence against an operator.
  explicit Box(std::vector<std::vector<std::size_t>> components);

  static Box whole(std::span<const std::size_t> component_sizes);
  static Box singleton(std::span<const std::size_t> state);

  /// The box whose members are exactly the given encoded states of op's
  /// domain. Throws MalformedInputError if the set is not a product.
  static Box from_members(const DecomposedOperator &op,
                          std::span<const std::size_t> encoded_members);

  [[nodiscard]] const std::vector<std::vector<std::size_t>> &components() const {
    return components_;
  }
  [[nodiscard]] bool contains(std::span<const std::size_t> state) const;
  [[nodiscard]] std::size_t cardinality() const;
  [[nodiscard]] bool subset_of(const Box &other) const;

  /// Every member, in mixed-radix order.
  [[nodiscard]] std::vector<StateVector> members() const;

  friend bool operator==(const Box &, const Box &) = default;

private:
  std::vector<std::vector<std::size_t>> components_;
};

/// Nested boxes C_0 = {m*} ⊂ C_1 ⊂ ... ⊂ C_k = M.
struct BoxSequence {
  std::vector<Box> boxes;
  StateVector fixed_point;

  friend bool operator==(const BoxSequence &, const BoxSequence &) = default;
};

struct BoxCheck {
  bool pass = true;
  int condition = 0; // 1..4, the first failing condition
  std::string detail;
};

/// Checks the four nested-box conditions exhaustively: C_0 = {m*},
/// C_k = M, strict nesting, and sigma(C_{r+1}) ⊆ C_r with sigma(C_0) ⊆ C_0.
/// Throws MalformedInputError when a box does not fit op's domain.
BoxCheck verify_box_sequence(const DecomposedOperator &op,
                             const BoxSequence &boxes);

/// Balls about the unique fixed point, deduplicated and ordered by radius.
/// `space` element i is op.decode(i). Throws PreconditionError unless op is a
/// contraction strict on orbits with a unique fixed point, or if some ball
/// about the fixed point is not a box.
BoxSequence boxes_from_ultrametric(const ultrametric::FiniteUltrametricSpace &space,
                                   const DecomposedOperator &op);

/// d_C(m, n) = max(C(m), C(n)) for m != n, where C(m) is the index of the
/// innermost box holding m. Throws PreconditionError on non-nested input.
ultrametric::FiniteUltrametricSpace
ultrametric_from_boxes(const BoxSequence &boxes, const DecomposedOperator &op);

struct SearchLimits {
  std::size_t max_boxes = 4096;  // candidate boxes for the chain search
  std::size_t max_states = 4096; // |M|
  std::size_t max_values = 7;    // sum of |M_i| for the ultrametric search
};

struct BoxSearchTranscript {
  std::vector<StateVector> fixed_points;
  std::size_t candidate_boxes = 0;
  std::size_t boxes_expanded = 0;
};

/// Exhaustive search for a valid box chain. nullopt means op is not an ACO.
std::optional<BoxSequence> search_box_sequence(const DecomposedOperator &op,
                                               const SearchLimits &limits = {},
                                               BoxSearchTranscript *transcript = nullptr);

/// Searches product ultrametrics built from per-component height assignments
/// for one under which op is a contraction, strict on orbits, with a unique
/// fixed point. Returns the witness product space.
std::optional<ultrametric::ProductSpace>
search_ultrametric(const DecomposedOperator &op, const SearchLimits &limits = {});

struct CampaignParams {
  std::size_t schedules = 100;
  std::uint64_t seed = 1;
  std::size_t horizon = 200;
  iteration::SamplingParams sampling{};
  std::size_t max_starts = 64; // start states per schedule
};

struct CampaignRun {
  std::uint64_t seed = 0;
  bool converged = true; // every start reached m* within the horizon
  std::size_t max_converged_at = 0;
};

struct CampaignSummary {
  CampaignParams params;
  std::size_t starts = 0;
  std::vector<CampaignRun> runs;
  [[nodiscard]] bool all_converged() const;
};

enum class Verdict { certified, refuted };

struct Refutation {
  std::string reason; // "no-fixed-point", "multiple-fixed-points", "no-box-chain"
  BoxSearchTranscript transcript;
};

struct AcoCertificate {
  Verdict verdict = Verdict::refuted;
  std::optional<BoxSequence> boxes;
  std::optional<Refutation> refutation;
  std::optional<CampaignSummary> sampling;
};

/// Exact verdict from the box-chain search; certified operators are also run
/// through a seeded campaign of asynchronous executions.
AcoCertificate certify_aco(const DecomposedOperator &op,
                           const CampaignParams &campaign = {},
                           const SearchLimits &limits = {});

/// Runs `op` asynchronously from every start state (or a seeded subset of at
/// most campaign.max_starts) under campaign.schedules sampled schedules and
/// checks arrival at `fixed_point`.
CampaignSummary run_campaign(const DecomposedOperator &op,
                             const StateVector &fixed_point,
                             const CampaignParams &campaign);

nlohmann::json certificate_to_json(const AcoCertificate &cert,
                                   const DecomposedOperator &op);

struct CensusEntry {
  std::vector<std::size_t> images; // sigma as an index table over {0,1}^2
  bool box_verdict = false;
  bool ultrametric_verdict = false;
};

struct CensusReport {
  std::vector<CensusEntry> entries;
  [[nodiscard]] std::size_t agreements() const;
  [[nodiscard]] std::size_t certified() const;
};

/// The operator on {0,1} x {0,1} whose image table is `images`
/// (index 2a + b, value 2a' + b').
DecomposedOperator binary_square_operator(std::span<const std::size_t> images);

/// All 256 self-maps of {0,1} x {0,1}, each judged by both searches.
CensusReport run_census();

} // namespace ultraco::aco
