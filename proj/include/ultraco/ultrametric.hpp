#pragma once

#include "ultraco/dyadic.hpp"

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ultraco::ultrametric {

using ElementId = std::size_t;

/// Position of a label inside a RadiusScale. Comparison is the scale order.
struct Radius {
  std::uint32_t rank = 0;

  friend constexpr auto operator<=>(const Radius &, const Radius &) = default;
};

inline constexpr Radius kZeroRadius{0};

/// A finite totally ordered set of radius labels whose least element is "0".
class RadiusScale {
public:
  /// Labels must be unique and listed in ascending order, first one "0".
  static RadiusScale from_labels(std::vector<std::string> ascending);

  /// "0", "1", ..., std::to_string(max).
  static RadiusScale integers(std::uint32_t max);

  /// Builds the scale of the distinct values in `values` (0 is always added).
  static RadiusScale from_dyadics(std::vector<Dyadic> values);

  [[nodiscard]] std::size_t size() const { return labels_.size(); }
  [[nodiscard]] Radius zero() const { return kZeroRadius; }
  [[nodiscard]] Radius max() const {
    return Radius{static_cast<std::uint32_t>(labels_.size() - 1)};
  }
  [[nodiscard]] const std::string &label(Radius r) const;
  [[nodiscard]] std::optional<Radius> find(std::string_view label) const;
  [[nodiscard]] bool contains(Radius r) const { return r.rank < labels_.size(); }
  [[nodiscard]] const std::vector<std::string> &labels() const {
    return labels_;
  }

  /// Radius of a dyadic value; only valid for scales built by from_dyadics.
  [[nodiscard]] Radius radius_of(Dyadic value) const;

  friend bool operator==(const RadiusScale &, const RadiusScale &) = default;

private:
  std::vector<std::string> labels_;
  std::vector<Dyadic> dyadics_;
};

/// A finite set with a total distance table into a RadiusScale.
///
/// Construction only checks that the table is total and in-scale; whether the
/// table is actually an ultrametric is the job of check_axioms, which needs to
/// be able to report violations on a constructed object.
class FiniteUltrametricSpace {
public:
  /// `table` is row-major elements x elements; every entry must be present.
  FiniteUltrametricSpace(std::vector<std::string> elements, RadiusScale scale,
                         const std::vector<std::optional<Radius>> &table);

  FiniteUltrametricSpace(std::vector<std::string> elements, RadiusScale scale,
                         const std::function<Radius(ElementId, ElementId)> &dist);

  [[nodiscard]] std::size_t size() const { return elements_.size(); }
  [[nodiscard]] const std::string &element(ElementId i) const {
    return elements_[i];
  }
  [[nodiscard]] const std::vector<std::string> &elements() const {
    return elements_;
  }
  [[nodiscard]] std::optional<ElementId> index_of(std::string_view name) const;
  [[nodiscard]] const RadiusScale &scale() const { return scale_; }

  [[nodiscard]] Radius dist(ElementId m, ElementId n) const {
    return Radius{table_[m * elements_.size() + n]};
  }

private:
  std::vector<std::string> elements_;
  RadiusScale scale_;
  std::vector<std::uint16_t> table_;
};

enum class Axiom { identity, symmetry, strong_triangle };

[[nodiscard]] std::string_view to_string(Axiom axiom);

struct AxiomViolation {
  Axiom axiom;
  std::vector<ElementId> witness; // pair for identity/symmetry, triple (l,m,n)
};

struct AxiomReport {
  bool pass = true;
  std::vector<AxiomViolation> violations;
  bool truncated = false; // more violations existed than were recorded
};

AxiomReport check_axioms(const FiniteUltrametricSpace &space,
                         std::size_t max_violations = 64);

/// First triple whose two largest pairwise distances differ, if any.
std::optional<std::vector<ElementId>>
find_isosceles_violation(const FiniteUltrametricSpace &space);

/// 0 for equal sequences, otherwise 2^(-m) for the first differing index m.
/// A shorter sequence reads as padded with an end marker, so running off the
/// end counts as a difference.
template <typename Sequence>
Dyadic string_distance(const Sequence &x, const Sequence &y) {
  const std::size_t common = std::min(std::size(x), std::size(y));
  auto xi = std::begin(x);
  auto yi = std::begin(y);
  for (std::size_t i = 0; i < common; ++i, ++xi, ++yi)
    if (!(*xi == *yi))
      return Dyadic::inverse_power_of_two(static_cast<std::uint32_t>(i));
  if (std::size(x) == std::size(y))
    return Dyadic::zero();
  return Dyadic::inverse_power_of_two(static_cast<std::uint32_t>(common));
}

inline Dyadic string_distance(std::string_view x, std::string_view y) {
  return string_distance<std::string_view>(x, y);
}

/// d_h(m, n): 0 when m == n, otherwise max(h(m), h(n)).
/// Throws InvalidHeightError if h yields the zero radius.
Radius height_distance(const std::function<Radius(ElementId)> &h, ElementId m,
                       ElementId n);

/// The space induced on `elements` by d_h for the given per-element heights.
FiniteUltrametricSpace make_height_space(std::vector<std::string> elements,
                                         RadiusScale scale,
                                         const std::vector<Radius> &heights);

/// Closed ball {n : dist(center, n) <= radius}. The space must outlive it.
struct Ball {
  const FiniteUltrametricSpace *space = nullptr;
  ElementId center = 0;
  Radius radius{};
};

/// Sorted member list of the ball.
std::vector<ElementId> ball_members(const Ball &ball);

struct SphericalCompletenessReport {
  bool pass = true;
  std::size_t distinct_balls = 0;
  std::size_t chains_checked = 0;
  std::vector<std::vector<ElementId>> witness_chain; // outermost first
};

/// Enumerates every maximal chain of distinct balls and checks that each has
/// a nonempty intersection.
SphericalCompletenessReport
check_spherical_completeness(const FiniteUltrametricSpace &space);

/// Max-distance product of spaces that share one RadiusScale.
///
/// Product elements are addressed either as coordinate vectors or by their
/// mixed-radix index (last coordinate varies fastest).
class ProductSpace {
public:
  explicit ProductSpace(std::vector<FiniteUltrametricSpace> components);

  [[nodiscard]] std::size_t dimension() const { return components_.size(); }
  [[nodiscard]] const FiniteUltrametricSpace &component(std::size_t i) const {
    return components_[i];
  }
  [[nodiscard]] const RadiusScale &scale() const {
    return components_.front().scale();
  }
  [[nodiscard]] std::size_t size() const { return size_; }

  [[nodiscard]] std::vector<ElementId> decode(ElementId index) const;
  [[nodiscard]] ElementId encode(std::span<const ElementId> coords) const;

  /// Flattens into a FiniteUltrametricSpace whose element i is decode(i).
  [[nodiscard]] FiniteUltrametricSpace materialize() const;

private:
  std::vector<FiniteUltrametricSpace> components_;
  std::size_t size_ = 1;
};

/// max_i d_i(m_i, n_i). Throws DimensionMismatchError on bad vectors.
Radius product_distance(const ProductSpace &product,
                        std::span<const ElementId> m,
                        std::span<const ElementId> n);

/// True iff the ball (living in product.materialize()) equals the cartesian
/// product of the component balls of the same radius about its center.
bool check_ball_is_box(const ProductSpace &product, const Ball &ball);

enum class ContractionClass {
  not_contraction,
  contraction,
  contraction_strict_on_orbits,
  strict_contraction,
};

[[nodiscard]] std::string_view to_string(ContractionClass c);

struct ContractionReport {
  ContractionClass classification = ContractionClass::not_contraction;
  /// Counterexample to the next-stronger class: a pair (m, n) for the
  /// contraction and strict-contraction conditions, a single m for the orbit
  /// condition. Empty for strict contractions.
  std::vector<ElementId> witness;
};

/// `sigma[m]` is the image of element m.
ContractionReport classify_contraction(const FiniteUltrametricSpace &space,
                                       std::span<const ElementId> sigma);

/// Space description: {"elements": [...], "scale": ["0", ...],
/// "dist": [[m, n, label], ...]}. Missing (m, n) falls back to (n, m);
/// a missing diagonal is "0". Throws MalformedInputError.
FiniteUltrametricSpace parse_space(const nlohmann::json &doc);
FiniteUltrametricSpace load_space(const std::string &path);

} // namespace ultraco::ultrametric
