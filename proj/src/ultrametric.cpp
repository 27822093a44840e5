#include "ultraco/ultrametric.hpp"

#include "detail/member_set.hpp"
#include "ultraco/errors.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ultraco {

double Dyadic::to_double() const {
  return zero_ ? 0.0 : std::ldexp(1.0, -static_cast<int>(exponent_));
}

std::string Dyadic::to_string() const {
  if (zero_)
    return "0";
  if (exponent_ == 0)
    return "1";
  return "2^-" + std::to_string(exponent_);
}

} // namespace ultraco

namespace ultraco::ultrametric {

namespace {

constexpr std::size_t kMaxScaleSize = 0xFFFF;

using detail::MemberSet;

MemberSet ball_set(const FiniteUltrametricSpace &space, ElementId center,
                   Radius radius) {
  MemberSet s(space.size());
  for (ElementId n = 0; n < space.size(); ++n)
    if (space.dist(center, n) <= radius)
      s.insert(n);
  return s;
}

std::string join_coords(std::span<const ElementId> coords,
                        const std::vector<FiniteUltrametricSpace> &all) {
  std::string out = "(";
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (i)
      out += ",";
    out += all[i].element(coords[i]);
  }
  return out + ")";
}

} // namespace

// ---------------------------------------------------------------------------
// RadiusScale

RadiusScale RadiusScale::from_labels(std::vector<std::string> ascending) {
  if (ascending.empty() || ascending.front() != "0")
    throw MalformedInputError("radius scale must start with \"0\"");
  if (ascending.size() > kMaxScaleSize)
    throw SizeLimitError("radius scale has too many labels");
  std::set<std::string> seen;
  for (const auto &l : ascending)
    if (!seen.insert(l).second)
      throw MalformedInputError("duplicate radius label \"" + l + "\"");
  RadiusScale s;
  s.labels_ = std::move(ascending);
  return s;
}

RadiusScale RadiusScale::integers(std::uint32_t max) {
  std::vector<std::string> labels;
  labels.reserve(max + 1);
  for (std::uint32_t i = 0; i <= max; ++i)
    labels.push_back(std::to_string(i));
  return from_labels(std::move(labels));
}

RadiusScale RadiusScale::from_dyadics(std::vector<Dyadic> values) {
  values.push_back(Dyadic::zero());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<std::string> labels;
  for (const auto &v : values)
    labels.push_back(v.to_string());
  RadiusScale s = from_labels(std::move(labels));
  s.dyadics_ = std::move(values);
  return s;
}

const std::string &RadiusScale::label(Radius r) const {
  if (!contains(r))
    throw PreconditionError("radius rank " + std::to_string(r.rank) +
                            " outside scale");
  return labels_[r.rank];
}

std::optional<Radius> RadiusScale::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label)
      return Radius{static_cast<std::uint32_t>(i)};
  return std::nullopt;
}

Radius RadiusScale::radius_of(Dyadic value) const {
  auto it = std::lower_bound(dyadics_.begin(), dyadics_.end(), value);
  if (it == dyadics_.end() || *it != value)
    throw PreconditionError("dyadic value " + value.to_string() +
                            " is not on this scale");
  return Radius{static_cast<std::uint32_t>(it - dyadics_.begin())};
}

// ---------------------------------------------------------------------------
// FiniteUltrametricSpace

FiniteUltrametricSpace::FiniteUltrametricSpace(
    std::vector<std::string> elements, RadiusScale scale,
    const std::vector<std::optional<Radius>> &table)
    : elements_(std::move(elements)), scale_(std::move(scale)) {
  const std::size_t n = elements_.size();
  if (table.size() != n * n)
    throw MalformedInputError("distance table has " +
                              std::to_string(table.size()) +
                              " entries, expected " + std::to_string(n * n));
  table_.resize(n * n);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto &entry = table[m * n + k];
      if (!entry)
        throw MalformedInputError("missing distance entry (" + elements_[m] +
                                  ", " + elements_[k] + ")");
      if (!scale_.contains(*entry))
        throw MalformedInputError("distance (" + elements_[m] + ", " +
                                  elements_[k] + ") is outside the scale");
      table_[m * n + k] = static_cast<std::uint16_t>(entry->rank);
    }
  }
}

FiniteUltrametricSpace::FiniteUltrametricSpace(
    std::vector<std::string> elements, RadiusScale scale,
    const std::function<Radius(ElementId, ElementId)> &dist)
    : elements_(std::move(elements)), scale_(std::move(scale)) {
  const std::size_t n = elements_.size();
  table_.resize(n * n);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      const Radius r = dist(m, k);
      if (!scale_.contains(r))
        throw MalformedInputError("distance (" + elements_[m] + ", " +
                                  elements_[k] + ") is outside the scale");
      table_[m * n + k] = static_cast<std::uint16_t>(r.rank);
    }
  }
}

std::optional<ElementId>
FiniteUltrametricSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < elements_.size(); ++i)
    if (elements_[i] == name)
      return i;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Axioms

std::string_view to_string(Axiom axiom) {
  switch (axiom) {
  case Axiom::identity:
    return "identity";
  case Axiom::symmetry:
    return "symmetry";
  case Axiom::strong_triangle:
    return "strong-triangle";
  }
  return "?";
}

AxiomReport check_axioms(const FiniteUltrametricSpace &space,
                         std::size_t max_violations) {
  AxiomReport report;
  auto record = [&](Axiom a, std::vector<ElementId> w) {
    report.pass = false;
    if (report.violations.size() < max_violations)
      report.violations.push_back({a, std::move(w)});
    else
      report.truncated = true;
  };

  const std::size_t n = space.size();
  for (ElementId m = 0; m < n; ++m) {
    for (ElementId k = 0; k < n; ++k) {
      const bool zero = space.dist(m, k) == kZeroRadius;
      if (zero != (m == k))
        record(Axiom::identity, {m, k});
      if (m < k && space.dist(m, k) != space.dist(k, m))
        record(Axiom::symmetry, {m, k});
    }
  }
  for (ElementId l = 0; l < n; ++l)
    for (ElementId m = 0; m < n; ++m) {
      const Radius lm = space.dist(l, m);
      for (ElementId k = 0; k < n; ++k)
        if (space.dist(l, k) > std::max(lm, space.dist(m, k)))
          record(Axiom::strong_triangle, {l, m, k});
    }
  return report;
}

std::optional<std::vector<ElementId>>
find_isosceles_violation(const FiniteUltrametricSpace &space) {
  const std::size_t n = space.size();
  for (ElementId a = 0; a < n; ++a)
    for (ElementId b = a + 1; b < n; ++b)
      for (ElementId c = b + 1; c < n; ++c) {
        std::array<Radius, 3> d{space.dist(a, b), space.dist(b, c),
                                space.dist(a, c)};
        std::sort(d.begin(), d.end());
        if (d[1] != d[2])
          return std::vector<ElementId>{a, b, c};
      }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Height metrics

Radius height_distance(const std::function<Radius(ElementId)> &h, ElementId m,
                       ElementId n) {
  if (m == n)
    return kZeroRadius;
  const Radius hm = h(m);
  const Radius hn = h(n);
  if (hm == kZeroRadius || hn == kZeroRadius)
    throw InvalidHeightError("height function yields the zero radius");
  return std::max(hm, hn);
}

FiniteUltrametricSpace make_height_space(std::vector<std::string> elements,
                                         RadiusScale scale,
                                         const std::vector<Radius> &heights) {
  if (heights.size() != elements.size())
    throw DimensionMismatchError("one height per element required");
  for (std::size_t i = 0; i < heights.size(); ++i) {
    if (heights[i] == kZeroRadius)
      throw InvalidHeightError("height of " + elements[i] + " is zero");
    if (!scale.contains(heights[i]))
      throw InvalidHeightError("height of " + elements[i] +
                               " is outside the scale");
  }
  auto h = [&](ElementId i) { return heights[i]; };
  return FiniteUltrametricSpace(
      std::move(elements), std::move(scale),
      [&](ElementId m, ElementId n) { return height_distance(h, m, n); });
}

// ---------------------------------------------------------------------------
// Balls

std::vector<ElementId> ball_members(const Ball &ball) {
  if (!ball.space->scale().contains(ball.radius))
    throw PreconditionError("ball radius outside the scale");
  std::vector<ElementId> out;
  for (ElementId n = 0; n < ball.space->size(); ++n)
    if (ball.space->dist(ball.center, n) <= ball.radius)
      out.push_back(n);
  return out;
}

SphericalCompletenessReport
check_spherical_completeness(const FiniteUltrametricSpace &space) {
  constexpr std::size_t kMaxBalls = 8192;
  constexpr std::size_t kMaxChains = 1'000'000;

  SphericalCompletenessReport report;
  const std::size_t n = space.size();

  // Only radii that occur as distances from the center give new balls.
  std::set<MemberSet> distinct;
  for (ElementId c = 0; c < n; ++c) {
    std::set<Radius> radii;
    for (ElementId k = 0; k < n; ++k)
      radii.insert(space.dist(c, k));
    for (Radius r : radii) {
      distinct.insert(ball_set(space, c, r));
      if (distinct.size() > kMaxBalls)
        throw SizeLimitError("too many distinct balls to enumerate chains");
    }
  }
  std::vector<MemberSet> balls(distinct.begin(), distinct.end());
  report.distinct_balls = balls.size();

  // covers[b] = balls strictly inside b with nothing strictly in between.
  const std::size_t count = balls.size();
  std::vector<std::vector<std::size_t>> inside(count);
  std::vector<bool> has_superset(count, false);
  for (std::size_t a = 0; a < count; ++a)
    for (std::size_t b = 0; b < count; ++b)
      if (a != b && balls[b].subset_of(balls[a])) {
        inside[a].push_back(b);
        has_superset[b] = true;
      }
  std::vector<std::vector<std::size_t>> covers(count);
  for (std::size_t a = 0; a < count; ++a)
    for (std::size_t b : inside[a]) {
      bool direct = true;
      for (std::size_t c : inside[a])
        if (c != b && balls[b].subset_of(balls[c])) {
          direct = false;
          break;
        }
      if (direct)
        covers[a].push_back(b);
    }

  std::vector<std::size_t> chain;
  std::function<void(std::size_t, const MemberSet &)> walk =
      [&](std::size_t b, const MemberSet &acc) {
        if (!report.pass)
          return;
        MemberSet meet = acc;
        meet &= balls[b];
        chain.push_back(b);
        if (covers[b].empty()) {
          if (++report.chains_checked > kMaxChains)
            throw SizeLimitError("too many maximal chains of balls");
          if (meet.empty()) {
            report.pass = false;
            for (std::size_t i : chain)
              report.witness_chain.push_back(balls[i].to_vector(n));
          }
        } else {
          for (std::size_t next : covers[b])
            walk(next, meet);
        }
        chain.pop_back();
      };

  MemberSet everything(n);
  for (ElementId i = 0; i < n; ++i)
    everything.insert(i);
  for (std::size_t b = 0; b < count; ++b)
    if (!has_superset[b])
      walk(b, everything);
  return report;
}

// ---------------------------------------------------------------------------
// Products

ProductSpace::ProductSpace(std::vector<FiniteUltrametricSpace> components)
    : components_(std::move(components)) {
  if (components_.empty())
    throw PreconditionError("product space needs at least one component");
  for (const auto &c : components_) {
    if (c.scale() != components_.front().scale())
      throw PreconditionError("product components must share one scale");
    if (c.size() == 0)
      throw PreconditionError("product component is empty");
    size_ *= c.size();
  }
}

std::vector<ElementId> ProductSpace::decode(ElementId index) const {
  std::vector<ElementId> coords(components_.size());
  for (std::size_t i = components_.size(); i-- > 0;) {
    coords[i] = index % components_[i].size();
    index /= components_[i].size();
  }
  return coords;
}

ElementId ProductSpace::encode(std::span<const ElementId> coords) const {
  if (coords.size() != components_.size())
    throw DimensionMismatchError("coordinate vector has wrong length");
  ElementId index = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] >= components_[i].size())
      throw DimensionMismatchError("coordinate outside its component");
    index = index * components_[i].size() + coords[i];
  }
  return index;
}

FiniteUltrametricSpace ProductSpace::materialize() const {
  std::vector<std::string> names;
  std::vector<std::vector<ElementId>> coords;
  names.reserve(size_);
  coords.reserve(size_);
  for (ElementId i = 0; i < size_; ++i) {
    coords.push_back(decode(i));
    names.push_back(join_coords(coords.back(), components_));
  }
  return FiniteUltrametricSpace(
      std::move(names), scale(), [&](ElementId m, ElementId n) {
        return product_distance(*this, coords[m], coords[n]);
      });
}

Radius product_distance(const ProductSpace &product,
                        std::span<const ElementId> m,
                        std::span<const ElementId> n) {
  if (m.size() != product.dimension() || n.size() != product.dimension())
    throw DimensionMismatchError("vectors must have length " +
                                 std::to_string(product.dimension()));
  Radius d = kZeroRadius;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto &c = product.component(i);
    if (m[i] >= c.size() || n[i] >= c.size())
      throw DimensionMismatchError("coordinate " + std::to_string(i) +
                                   " outside its component");
    d = std::max(d, c.dist(m[i], n[i]));
  }
  return d;
}

bool check_ball_is_box(const ProductSpace &product, const Ball &ball) {
  if (ball.space->size() != product.size())
    throw PreconditionError("ball does not live in the product space");
  const auto members = ball_members(ball);
  const auto center = product.decode(ball.center);

  std::vector<std::vector<bool>> component_balls;
  for (std::size_t i = 0; i < product.dimension(); ++i) {
    const auto &c = product.component(i);
    std::vector<bool> in(c.size(), false);
    for (ElementId v : ball_members(Ball{&c, center[i], ball.radius}))
      in[v] = true;
    component_balls.push_back(std::move(in));
  }

  std::vector<ElementId> box;
  for (ElementId idx = 0; idx < product.size(); ++idx) {
    const auto coords = product.decode(idx);
    bool inside = true;
    for (std::size_t i = 0; i < coords.size() && inside; ++i)
      inside = component_balls[i][coords[i]];
    if (inside)
      box.push_back(idx);
  }
  return box == members;
}

// ---------------------------------------------------------------------------
// Contractions

std::string_view to_string(ContractionClass c) {
  switch (c) {
  case ContractionClass::not_contraction:
    return "not-contraction";
  case ContractionClass::contraction:
    return "contraction";
  case ContractionClass::contraction_strict_on_orbits:
    return "contraction-strict-on-orbits";
  case ContractionClass::strict_contraction:
    return "strict-contraction";
  }
  return "?";
}

ContractionReport classify_contraction(const FiniteUltrametricSpace &space,
                                       std::span<const ElementId> sigma) {
  const std::size_t n = space.size();
  if (sigma.size() != n)
    throw PreconditionError("sigma must be total on the space");
  for (ElementId s : sigma)
    if (s >= n)
      throw PreconditionError("sigma maps outside the space");

  for (ElementId m = 0; m < n; ++m)
    for (ElementId k = 0; k < n; ++k)
      if (space.dist(sigma[m], sigma[k]) > space.dist(m, k))
        return {ContractionClass::not_contraction, {m, k}};

  for (ElementId m = 0; m < n; ++m) {
    const ElementId s = sigma[m];
    if (s != m && !(space.dist(s, sigma[s]) < space.dist(m, s)))
      return {ContractionClass::contraction, {m}};
  }

  for (ElementId m = 0; m < n; ++m)
    for (ElementId k = m + 1; k < n; ++k)
      if (!(space.dist(sigma[m], sigma[k]) < space.dist(m, k)))
        return {ContractionClass::contraction_strict_on_orbits, {m, k}};

  return {ContractionClass::strict_contraction, {}};
}

// ---------------------------------------------------------------------------
// Space description files

FiniteUltrametricSpace parse_space(const nlohmann::json &doc) {
  try {
    auto elements = doc.at("elements").get<std::vector<std::string>>();
    auto scale =
        RadiusScale::from_labels(doc.at("scale").get<std::vector<std::string>>());

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < elements.size(); ++i)
      if (!index.emplace(elements[i], i).second)
        throw MalformedInputError("duplicate element \"" + elements[i] + "\"");

    const std::size_t n = elements.size();
    std::vector<std::optional<Radius>> table(n * n);
    auto lookup = [&](const std::string &name) {
      auto it = index.find(name);
      if (it == index.end())
        throw MalformedInputError("unknown element \"" + name + "\"");
      return it->second;
    };
    for (const auto &entry : doc.value("dist", nlohmann::json::array())) {
      if (!entry.is_array() || entry.size() != 3)
        throw MalformedInputError("dist entries must be [m, n, label]");
      const auto m = lookup(entry[0].get<std::string>());
      const auto k = lookup(entry[1].get<std::string>());
      const auto label = entry[2].get<std::string>();
      const auto r = scale.find(label);
      if (!r)
        throw MalformedInputError("unknown radius label \"" + label + "\"");
      auto &slot = table[m * n + k];
      if (slot && *slot != *r)
        throw MalformedInputError("conflicting entries for (" + elements[m] +
                                  ", " + elements[k] + ")");
      slot = r;
    }
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t k = 0; k < n; ++k) {
        auto &slot = table[m * n + k];
        if (slot)
          continue;
        if (m == k)
          slot = kZeroRadius;
        else
          slot = table[k * n + m];
      }
    return FiniteUltrametricSpace(std::move(elements), std::move(scale), table);
  } catch (const nlohmann::json::exception &e) {
    throw MalformedInputError(std::string("space description: ") + e.what());
  }
}

FiniteUltrametricSpace load_space(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw MalformedInputError("cannot open " + path);
  try {
    return parse_space(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error &e) {
    throw MalformedInputError(path + ": " + e.what());
  }
}

} // namespace ultraco::ultrametric
