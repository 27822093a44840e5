#include "ultraco/aco.hpp"

#include "detail/member_set.hpp"
#include "ultraco/errors.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>

namespace ultraco::aco {

using detail::MemberSet;
using ultrametric::ContractionClass;
using ultrametric::FiniteUltrametricSpace;
using ultrametric::Radius;

namespace {

std::vector<std::size_t> fixed_points_of(std::span<const std::size_t> table) {
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < table.size(); ++m)
    if (table[m] == m)
      out.push_back(m);
  return out;
}

void check_fits(const Box &box, const DecomposedOperator &op, std::size_t index) {
  const auto &comps = box.components();
  if (comps.size() != op.processor_count())
    throw MalformedInputError("box " + std::to_string(index) + " has " +
                              std::to_string(comps.size()) +
                              " components, operator has " +
                              std::to_string(op.processor_count()));
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (comps[i].empty())
      throw MalformedInputError("box " + std::to_string(index) +
                                " has an empty component " + std::to_string(i));
    if (comps[i].back() >= op.component_size(i))
      throw MalformedInputError("box " + std::to_string(index) +
                                " component " + std::to_string(i) +
                                " lies outside the domain");
  }
}

bool is_whole(const Box &box, const DecomposedOperator &op) {
  for (std::size_t i = 0; i < op.processor_count(); ++i)
    if (box.components()[i].size() != op.component_size(i))
      return false;
  return true;
}

// Conditions 1-3; returns the failing check or a passing result.
BoxCheck check_nesting(const DecomposedOperator &op, const BoxSequence &seq) {
  if (seq.boxes.empty())
    return {false, 1, "empty box sequence"};
  if (seq.boxes.front().cardinality() != 1 ||
      !seq.boxes.front().contains(seq.fixed_point))
    return {false, 1, "C_0 is not the singleton {m*}"};
  if (!is_whole(seq.boxes.back(), op))
    return {false, 2, "last box is not the whole space"};
  for (std::size_t r = 0; r < seq.boxes.size(); ++r)
    for (std::size_t s = r + 1; s < seq.boxes.size(); ++s)
      if (!seq.boxes[r].subset_of(seq.boxes[s]) || seq.boxes[r] == seq.boxes[s])
        return {false, 3,
                "C_" + std::to_string(r) + " is not strictly inside C_" +
                    std::to_string(s)};
  return {};
}

} // namespace

// ---------------------------------------------------------------------------
// Box

Box::Box(std::vector<std::vector<std::size_t>> components)
    : components_(std::move(components)) {
  for (auto &c : components_) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
}

Box Box::whole(std::span<const std::size_t> component_sizes) {
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t s : component_sizes) {
    std::vector<std::size_t> all(s);
    for (std::size_t v = 0; v < s; ++v)
      all[v] = v;
    comps.push_back(std::move(all));
  }
  return Box(std::move(comps));
}

Box Box::singleton(std::span<const std::size_t> state) {
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t v : state)
    comps.push_back({v});
  return Box(std::move(comps));
}

Box Box::from_members(const DecomposedOperator &op,
                      std::span<const std::size_t> encoded_members) {
  if (encoded_members.empty())
    throw MalformedInputError("empty member set is not a box");
  std::set<std::size_t> distinct(encoded_members.begin(), encoded_members.end());
  std::vector<std::set<std::size_t>> values(op.processor_count());
  for (std::size_t m : distinct) {
    const auto state = op.decode(m);
    for (std::size_t i = 0; i < state.size(); ++i)
      values[i].insert(state[i]);
  }
  std::vector<std::vector<std::size_t>> comps;
  for (const auto &v : values)
    comps.emplace_back(v.begin(), v.end());
  Box box(std::move(comps));
  if (box.cardinality() != distinct.size())
    throw MalformedInputError("member set of size " +
                              std::to_string(distinct.size()) +
                              " is not a product of per-component subsets");
  return box;
}

bool Box::contains(std::span<const std::size_t> state) const {
  if (state.size() != components_.size())
    return false;
  for (std::size_t i = 0; i < state.size(); ++i)
    if (!std::binary_search(components_[i].begin(), components_[i].end(),
                            state[i]))
      return false;
  return true;
}

std::size_t Box::cardinality() const {
  std::size_t n = 1;
  for (const auto &c : components_)
    n *= c.size();
  return components_.empty() ? 0 : n;
}

bool Box::subset_of(const Box &other) const {
  if (components_.size() != other.components_.size())
    return false;
  for (std::size_t i = 0; i < components_.size(); ++i)
    if (!std::includes(other.components_[i].begin(), other.components_[i].end(),
                       components_[i].begin(), components_[i].end()))
      return false;
  return true;
}

std::vector<StateVector> Box::members() const {
  std::vector<StateVector> out;
  if (cardinality() == 0)
    return out;
  std::vector<std::size_t> pos(components_.size(), 0);
  while (true) {
    StateVector s(components_.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      s[i] = components_[i][pos[i]];
    out.push_back(std::move(s));
    std::size_t i = components_.size();
    while (i-- > 0) {
      if (++pos[i] < components_[i].size())
        break;
      pos[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1))
      return out;
  }
}

// ---------------------------------------------------------------------------
// Box sequences

BoxCheck verify_box_sequence(const DecomposedOperator &op,
                             const BoxSequence &seq) {
  for (std::size_t r = 0; r < seq.boxes.size(); ++r)
    check_fits(seq.boxes[r], op, r);
  if (!op.in_domain(seq.fixed_point))
    throw MalformedInputError("fixed point lies outside the domain");

  if (auto nesting = check_nesting(op, seq); !nesting.pass)
    return nesting;

  if (op.apply(seq.fixed_point) != seq.fixed_point)
    return {false, 4, "sigma(m*) is not in C_0"};
  for (std::size_t r = 0; r + 1 < seq.boxes.size(); ++r)
    for (const auto &m : seq.boxes[r + 1].members())
      if (!seq.boxes[r].contains(op.apply(m)))
        return {false, 4,
                "sigma" + op.state_label(m) + " is not in C_" + std::to_string(r)};
  return {};
}

BoxSequence boxes_from_ultrametric(const FiniteUltrametricSpace &space,
                                   const DecomposedOperator &op) {
  const auto size = op.domain_size();
  if (!size || *size != space.size())
    throw PreconditionError("space and operator domain differ in size");
  const auto table = op.image_table(space.size());

  const auto report = ultrametric::classify_contraction(space, table);
  if (report.classification != ContractionClass::contraction_strict_on_orbits &&
      report.classification != ContractionClass::strict_contraction) {
    std::string witness;
    for (auto w : report.witness)
      witness += " " + space.element(w);
    throw PreconditionError("operator is " +
                            std::string(to_string(report.classification)) +
                            ", not strict on orbits; witness:" + witness);
  }

  const auto fixed = fixed_points_of(table);
  if (fixed.size() != 1)
    throw PreconditionError("operator has " + std::to_string(fixed.size()) +
                            " fixed points; a unique one is required");

  // Orbits strictly shrink, so |M| steps reach m* from anywhere.
  std::size_t m = 0;
  for (std::size_t step = 0; step < space.size() && table[m] != m; ++step)
    m = table[m];
  if (m != fixed.front())
    throw PreconditionError("iteration did not reach the fixed point");

  BoxSequence seq;
  seq.fixed_point = op.decode(m);
  std::vector<std::size_t> previous;
  for (std::uint32_t r = 0; r < space.scale().size(); ++r) {
    auto members =
        ultrametric::ball_members(ultrametric::Ball{&space, m, Radius{r}});
    if (members == previous)
      continue;
    try {
      seq.boxes.push_back(Box::from_members(op, members));
    } catch (const MalformedInputError &e) {
      throw PreconditionError("ball of radius " +
                              space.scale().label(Radius{r}) +
                              " about the fixed point is not a box: " + e.what());
    }
    if (members.size() == space.size())
      break;
    previous = std::move(members);
  }

  if (const auto check = verify_box_sequence(op, seq); !check.pass)
    throw PreconditionError("balls about the fixed point fail condition " +
                            std::to_string(check.condition) + ": " + check.detail);
  return seq;
}

FiniteUltrametricSpace ultrametric_from_boxes(const BoxSequence &seq,
                                              const DecomposedOperator &op) {
  for (std::size_t r = 0; r < seq.boxes.size(); ++r)
    check_fits(seq.boxes[r], op, r);
  if (const auto nesting = check_nesting(op, seq); !nesting.pass)
    throw PreconditionError("box sequence is not nested (condition " +
                            std::to_string(nesting.condition) +
                            "): " + nesting.detail);

  const std::size_t n = *op.domain_size();
  std::vector<std::uint32_t> level(n);
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t m = 0; m < n; ++m) {
    const auto state = op.decode(m);
    names.push_back(op.state_label(state));
    std::uint32_t c = 0;
    while (!seq.boxes[c].contains(state))
      ++c;
    level[m] = c;
  }
  const auto k = static_cast<std::uint32_t>(seq.boxes.size() - 1);
  return FiniteUltrametricSpace(
      std::move(names), ultrametric::RadiusScale::integers(k),
      [&](std::size_t a, std::size_t b) {
        return a == b ? ultrametric::kZeroRadius
                      : Radius{std::max(level[a], level[b])};
      });
}

// ---------------------------------------------------------------------------
// Searches

std::optional<BoxSequence> search_box_sequence(const DecomposedOperator &op,
                                               const SearchLimits &limits,
                                               BoxSearchTranscript *transcript) {
  const auto &sizes = op.component_sizes();
  std::size_t box_count = 1;
  for (std::size_t s : sizes) {
    if (s >= 32)
      throw SizeLimitError("component with " + std::to_string(s) +
                           " values is too large for box enumeration");
    const std::size_t subsets = (std::size_t{1} << s) - 1;
    if (box_count > limits.max_boxes / subsets)
      throw SizeLimitError("more than " + std::to_string(limits.max_boxes) +
                           " candidate boxes");
    box_count *= subsets;
  }
  const auto table = op.image_table(limits.max_states);
  const std::size_t n = table.size();

  // Enumerate every box as (Box, member bitset, image bitset).
  std::vector<Box> boxes;
  std::vector<MemberSet> members;
  std::vector<MemberSet> images;
  boxes.reserve(box_count);
  std::vector<std::uint64_t> mask(sizes.size(), 1);
  while (true) {
    std::vector<std::vector<std::size_t>> comps(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i)
      for (std::size_t v = 0; v < sizes[i]; ++v)
        if ((mask[i] >> v) & 1U)
          comps[i].push_back(v);
    Box box(std::move(comps));
    MemberSet in(n), img(n);
    for (const auto &state : box.members()) {
      const auto idx = op.encode(state);
      in.insert(idx);
      img.insert(table[idx]);
    }
    boxes.push_back(std::move(box));
    members.push_back(std::move(in));
    images.push_back(std::move(img));

    std::size_t i = sizes.size();
    while (i-- > 0) {
      if (++mask[i] < (std::uint64_t{1} << sizes[i]))
        break;
      mask[i] = 1;
    }
    if (i == static_cast<std::size_t>(-1))
      break;
  }

  // Larger boxes first so the whole space is tried before its sub-boxes.
  std::vector<std::size_t> order(boxes.size());
  for (std::size_t b = 0; b < order.size(); ++b)
    order[b] = b;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].cardinality() > boxes[b].cardinality();
  });

  BoxSearchTranscript local;
  BoxSearchTranscript &tr = transcript ? *transcript : local;
  tr = {};
  tr.candidate_boxes = boxes.size();

  // Whether a box can be extended to M depends only on the box itself.
  std::vector<bool> dead(boxes.size(), false);
  std::vector<std::size_t> chain;
  std::function<bool(std::size_t)> extend = [&](std::size_t c) {
    if (boxes[c].cardinality() == n)
      return true;
    if (dead[c])
      return false;
    ++tr.boxes_expanded;
    for (std::size_t b : order) {
      if (b == c || members[b] == members[c] ||
          !members[c].subset_of(members[b]) || !images[b].subset_of(members[c]))
        continue;
      chain.push_back(b);
      if (extend(b))
        return true;
      chain.pop_back();
    }
    dead[c] = true;
    return false;
  };

  for (std::size_t fp : fixed_points_of(table)) {
    const auto state = op.decode(fp);
    tr.fixed_points.push_back(state);
    const Box start = Box::singleton(state);
    const auto it = std::find(boxes.begin(), boxes.end(), start);
    const auto c = static_cast<std::size_t>(it - boxes.begin());
    chain = {c};
    if (extend(c)) {
      BoxSequence seq;
      seq.fixed_point = state;
      for (std::size_t b : chain)
        seq.boxes.push_back(boxes[b]);
      return seq;
    }
  }
  return std::nullopt;
}

std::optional<ultrametric::ProductSpace>
search_ultrametric(const DecomposedOperator &op, const SearchLimits &limits) {
  const auto &sizes = op.component_sizes();
  std::size_t values = 0;
  for (std::size_t s : sizes)
    values += s;
  if (values > limits.max_values)
    throw SizeLimitError("ultrametric search supports at most " +
                         std::to_string(limits.max_values) +
                         " component values in total");
  const auto table = op.image_table(limits.max_states);
  if (fixed_points_of(table).size() != 1)
    return std::nullopt;

  // Heights over all (component, value) pairs, surjective onto 1..s, so each
  // weak ordering of the values is tried once per scale size.
  std::vector<std::uint32_t> h(values, 1);
  while (true) {
    std::uint32_t top = 0;
    std::vector<bool> used(values + 1, false);
    for (auto v : h) {
      used[v] = true;
      top = std::max(top, v);
    }
    bool onto = true;
    for (std::uint32_t v = 1; v <= top; ++v)
      onto = onto && used[v];

    if (onto) {
      const auto scale = ultrametric::RadiusScale::integers(top);
      std::vector<FiniteUltrametricSpace> comps;
      std::size_t offset = 0;
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        std::vector<std::string> names;
        std::vector<Radius> heights;
        for (std::size_t v = 0; v < sizes[i]; ++v) {
          names.push_back(op.value_label(i, v));
          heights.push_back(Radius{h[offset + v]});
        }
        offset += sizes[i];
        comps.push_back(
            ultrametric::make_height_space(std::move(names), scale, heights));
      }
      ultrametric::ProductSpace product(std::move(comps));
      const auto space = product.materialize();
      const auto cls = ultrametric::classify_contraction(space, table).classification;
      if (cls == ContractionClass::contraction_strict_on_orbits ||
          cls == ContractionClass::strict_contraction)
        return product;
    }

    std::size_t i = values;
    while (i-- > 0) {
      if (++h[i] <= values)
        break;
      h[i] = 1;
    }
    if (i == static_cast<std::size_t>(-1))
      return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Certification

bool CampaignSummary::all_converged() const {
  return std::all_of(runs.begin(), runs.end(),
                     [](const CampaignRun &r) { return r.converged; });
}

CampaignSummary run_campaign(const DecomposedOperator &op,
                             const StateVector &fixed_point,
                             const CampaignParams &campaign) {
  const auto size = op.domain_size();
  if (!size)
    throw SizeLimitError("operator domain too large for a campaign");

  // Evenly spaced start states when the domain is too large to sweep.
  std::vector<StateVector> starts;
  const std::size_t count = std::min(*size, campaign.max_starts);
  for (std::size_t s = 0; s < count; ++s)
    starts.push_back(op.decode(s * *size / count));

  CampaignSummary summary;
  summary.params = campaign;
  summary.starts = starts.size();
  const iteration::AdmissibilityBounds bounds{campaign.sampling.fairness_window,
                                              campaign.sampling.max_staleness};
  for (std::size_t s = 0; s < campaign.schedules; ++s) {
    CampaignRun run;
    run.seed = campaign.seed + s;
    const auto schedule = iteration::sample_schedule(
        op.processor_count(), campaign.horizon, run.seed, campaign.sampling);
    for (const auto &start : starts) {
      const auto traj = iteration::run_async(op, start, schedule, bounds);
      if (traj.status != iteration::RunStatus::converged ||
          traj.final_state() != fixed_point) {
        run.converged = false;
        continue;
      }
      run.max_converged_at = std::max(run.max_converged_at, *traj.converged_at);
    }
    summary.runs.push_back(run);
  }
  return summary;
}

AcoCertificate certify_aco(const DecomposedOperator &op,
                           const CampaignParams &campaign,
                           const SearchLimits &limits) {
  AcoCertificate cert;
  BoxSearchTranscript transcript;
  auto seq = search_box_sequence(op, limits, &transcript);
  if (!seq) {
    cert.verdict = Verdict::refuted;
    Refutation ref;
    if (transcript.fixed_points.empty())
      ref.reason = "no-fixed-point";
    else if (transcript.fixed_points.size() > 1)
      ref.reason = "multiple-fixed-points";
    else
      ref.reason = "no-box-chain";
    ref.transcript = std::move(transcript);
    cert.refutation = std::move(ref);
    return cert;
  }
  if (const auto check = verify_box_sequence(op, *seq); !check.pass)
    throw Error("box search returned an invalid chain: " + check.detail);
  cert.verdict = Verdict::certified;
  if (campaign.schedules > 0)
    cert.sampling = run_campaign(op, seq->fixed_point, campaign);
  cert.boxes = std::move(seq);
  return cert;
}

nlohmann::json certificate_to_json(const AcoCertificate &cert,
                                   const DecomposedOperator &op) {
  using nlohmann::json;
  auto state_json = [&](const StateVector &s) {
    json out = json::array();
    for (std::size_t i = 0; i < s.size(); ++i)
      out.push_back(op.value_label(i, s[i]));
    return out;
  };

  json doc;
  doc["verdict"] = cert.verdict == Verdict::certified ? "certified" : "refuted";
  doc["processors"] = op.processor_count();
  if (cert.boxes) {
    doc["fixed_point"] = state_json(cert.boxes->fixed_point);
    json boxes = json::array();
    for (const auto &box : cert.boxes->boxes) {
      json comps = json::array();
      for (std::size_t i = 0; i < box.components().size(); ++i) {
        json vals = json::array();
        for (std::size_t v : box.components()[i])
          vals.push_back(op.value_label(i, v));
        comps.push_back(std::move(vals));
      }
      boxes.push_back(std::move(comps));
    }
    doc["boxes"] = std::move(boxes);
  }
  if (cert.refutation) {
    json fps = json::array();
    for (const auto &fp : cert.refutation->transcript.fixed_points)
      fps.push_back(state_json(fp));
    doc["refutation"] = {
        {"reason", cert.refutation->reason},
        {"fixed_points", std::move(fps)},
        {"candidate_boxes", cert.refutation->transcript.candidate_boxes},
        {"boxes_expanded", cert.refutation->transcript.boxes_expanded}};
  }
  if (cert.sampling) {
    const auto &s = *cert.sampling;
    json runs = json::array();
    for (const auto &r : s.runs)
      runs.push_back({{"seed", r.seed},
                      {"converged", r.converged},
                      {"max_converged_at", r.max_converged_at}});
    doc["sampling"] = {{"schedules", s.params.schedules},
                       {"seed", s.params.seed},
                       {"horizon", s.params.horizon},
                       {"activation_prob", s.params.sampling.activation_prob},
                       {"max_staleness", s.params.sampling.max_staleness},
                       {"fairness_window", s.params.sampling.fairness_window},
                       {"starts", s.starts},
                       {"all_converged", s.all_converged()},
                       {"runs", std::move(runs)}};
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Census

std::size_t CensusReport::agreements() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const CensusEntry &e) {
        return e.box_verdict == e.ultrametric_verdict;
      }));
}

std::size_t CensusReport::certified() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(),
      [](const CensusEntry &e) { return e.box_verdict; }));
}

DecomposedOperator binary_square_operator(std::span<const std::size_t> images) {
  if (images.size() != 4)
    throw PreconditionError("binary square operator needs 4 images");
  std::vector<StateVector> table;
  for (std::size_t img : images) {
    if (img >= 4)
      throw PreconditionError("image outside {0,1}^2");
    table.push_back({img / 2, img % 2});
  }
  return DecomposedOperator::from_table({2, 2}, std::move(table));
}

CensusReport run_census() {
  CensusReport report;
  for (std::size_t code = 0; code < 256; ++code) {
    CensusEntry entry;
    for (std::size_t m = 0; m < 4; ++m)
      entry.images.push_back((code >> (2 * m)) & 3U);
    const auto op = binary_square_operator(entry.images);
    entry.box_verdict = search_box_sequence(op).has_value();
    entry.ultrametric_verdict = search_ultrametric(op).has_value();
    report.entries.push_back(std::move(entry));
  }
  return report;
}

} // namespace ultraco::aco
