#include "ultraco/errors.hpp"
#include "ultraco/ultrametric.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace ultraco;
using namespace ultraco::ultrametric;

namespace {

FiniteUltrametricSpace three_point(std::uint32_t ab, std::uint32_t bc, std::uint32_t ac) {
  std::vector<std::optional<Radius>> t(9, kZeroRadius);
  t[0 * 3 + 1] = t[1 * 3 + 0] = Radius{ab};
  t[1 * 3 + 2] = t[2 * 3 + 1] = Radius{bc};
  t[0 * 3 + 2] = t[2 * 3 + 0] = Radius{ac};
  return FiniteUltrametricSpace({"a", "b", "c"}, RadiusScale::integers(2), t);
}

std::vector<std::vector<ElementId>> all_balls(const FiniteUltrametricSpace &s) {
  std::set<std::vector<ElementId>> out;
  for (ElementId c = 0; c < s.size(); ++c)
    for (std::uint32_t r = 0; r < s.scale().size(); ++r)
      out.insert(ball_members({&s, c, Radius{r}}));
  return {out.begin(), out.end()};
}

FiniteUltrametricSpace random_height_space(std::mt19937_64 &rng, std::size_t n,
                                           std::uint32_t max) {
  std::vector<std::string> names;
  std::vector<Radius> h;
  for (std::size_t i = 0; i < n; ++i) {
    names.push_back("e" + std::to_string(i));
    h.push_back(Radius{static_cast<std::uint32_t>(1 + rng() % max)});
  }
  return make_height_space(names, RadiusScale::integers(max), h);
}

} // namespace

TEST(RadiusScale, LabelsAndOrder) {
  const auto s = RadiusScale::from_labels({"0", "small", "big"});
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.label(s.max()), "big");
  EXPECT_EQ(s.find("small"), Radius{1});
  EXPECT_FALSE(s.find("huge"));
  EXPECT_THROW(RadiusScale::from_labels({"1", "0"}), MalformedInputError);
  EXPECT_THROW(RadiusScale::from_labels({"0", "a", "a"}), MalformedInputError);
}

TEST(RadiusScale, Dyadics) {
  const auto s = RadiusScale::from_dyadics(
      {Dyadic::inverse_power_of_two(2), Dyadic::inverse_power_of_two(0)});
  EXPECT_EQ(s.labels(), (std::vector<std::string>{"0", "2^-2", "1"}));
  EXPECT_EQ(s.radius_of(Dyadic::zero()), kZeroRadius);
  EXPECT_EQ(s.radius_of(Dyadic::inverse_power_of_two(0)), Radius{2});
}

TEST(CheckAxioms, SinglePointPasses) {
  FiniteUltrametricSpace s({"a"}, RadiusScale::integers(1), {kZeroRadius});
  EXPECT_TRUE(check_axioms(s).pass);
}

TEST(CheckAxioms, IdentityViolation) {
  FiniteUltrametricSpace s({"a", "b"}, RadiusScale::integers(1),
                           {kZeroRadius, kZeroRadius, kZeroRadius, kZeroRadius});
  const auto r = check_axioms(s);
  ASSERT_FALSE(r.pass);
  EXPECT_EQ(r.violations.front().axiom, Axiom::identity);
  EXPECT_EQ(r.violations.front().witness, (std::vector<ElementId>{0, 1}));
}

TEST(CheckAxioms, SymmetryViolation) {
  FiniteUltrametricSpace s({"a", "b"}, RadiusScale::integers(2),
                           {kZeroRadius, Radius{1}, Radius{2}, kZeroRadius});
  const auto r = check_axioms(s);
  ASSERT_FALSE(r.pass);
  EXPECT_TRUE(std::any_of(r.violations.begin(), r.violations.end(),
                          [](const auto &v) { return v.axiom == Axiom::symmetry; }));
}

TEST(CheckAxioms, StrongTriangleViolation) {
  const auto s = three_point(1, 1, 2);
  const auto r = check_axioms(s);
  ASSERT_FALSE(r.pass);
  const bool found = std::any_of(r.violations.begin(), r.violations.end(), [](const auto &v) {
    return v.axiom == Axiom::strong_triangle &&
           v.witness == std::vector<ElementId>{0, 1, 2};
  });
  EXPECT_TRUE(found);
  EXPECT_TRUE(find_isosceles_violation(s).has_value());
}

TEST(CheckAxioms, MissingEntryIsMalformed) {
  std::vector<std::optional<Radius>> t{kZeroRadius, std::nullopt, Radius{1}, kZeroRadius};
  EXPECT_THROW(FiniteUltrametricSpace({"a", "b"}, RadiusScale::integers(1), t),
               MalformedInputError);
}

TEST(CheckAxioms, TruncatesViolations) {
  std::vector<std::optional<Radius>> t(36, kZeroRadius);
  const FiniteUltrametricSpace s({"a", "b", "c", "d", "e", "f"}, RadiusScale::integers(1), t);
  const auto r = check_axioms(s, 3);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.violations.size(), 3u);
  EXPECT_TRUE(r.truncated);
}

TEST(StringDistance, Examples) {
  EXPECT_TRUE(string_distance("abc", "abc").is_zero());
  EXPECT_EQ(string_distance("abc", "abd"), Dyadic::inverse_power_of_two(2));
  EXPECT_DOUBLE_EQ(string_distance("abc", "abd").to_double(), 0.25);
  EXPECT_EQ(string_distance("x", "yx"), Dyadic::inverse_power_of_two(0));
  EXPECT_EQ(string_distance("ab", "abc"), Dyadic::inverse_power_of_two(2));
  EXPECT_EQ(string_distance("abc", "abd").to_string(), "2^-2");
}

TEST(StringDistance, SampleSpaceIsUltrametric) {
  const std::vector<std::string> words{"", "a", "ab", "abc", "abd", "b", "ba", "bab"};
  std::vector<Dyadic> values;
  for (const auto &x : words)
    for (const auto &y : words)
      if (x != y)
        values.push_back(string_distance(x, y));
  const auto scale = RadiusScale::from_dyadics(values);
  const FiniteUltrametricSpace s(words, scale, [&](ElementId m, ElementId n) {
    return scale.radius_of(string_distance(words[m], words[n]));
  });
  EXPECT_TRUE(check_axioms(s).pass);
  EXPECT_FALSE(find_isosceles_violation(s));
}

TEST(HeightDistance, Examples) {
  const std::vector<Radius> h{Radius{3}, Radius{5}, Radius{5}};
  auto hf = [&](ElementId e) { return h[e]; };
  EXPECT_EQ(height_distance(hf, 1, 1), kZeroRadius);
  EXPECT_EQ(height_distance(hf, 0, 1), Radius{5});
  const auto s = make_height_space({"a", "b", "c"}, RadiusScale::integers(5), h);
  EXPECT_TRUE(check_axioms(s).pass);
  EXPECT_TRUE(check_spherical_completeness(s).pass);
  EXPECT_THROW(height_distance([](ElementId) { return kZeroRadius; }, 0, 1),
               InvalidHeightError);
}

TEST(HeightDistance, RandomSpacesAreUltrametric) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_height_space(rng, 1 + rng() % 8, 4);
    EXPECT_TRUE(check_axioms(s).pass);
    EXPECT_FALSE(find_isosceles_violation(s));
  }
}

TEST(Balls, RadiusZeroAndMax) {
  const auto s = three_point(2, 1, 2);
  EXPECT_EQ(ball_members({&s, 1, kZeroRadius}), (std::vector<ElementId>{1}));
  EXPECT_EQ(ball_members({&s, 1, s.scale().max()}), (std::vector<ElementId>{0, 1, 2}));
  EXPECT_EQ(ball_members({&s, 1, Radius{1}}), (std::vector<ElementId>{1, 2}));
}

TEST(Balls, RecenteringAndNesting) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = random_height_space(rng, 2 + rng() % 7, 3);
    for (ElementId c = 0; c < s.size(); ++c)
      for (std::uint32_t r = 0; r < s.scale().size(); ++r) {
        const auto members = ball_members({&s, c, Radius{r}});
        for (ElementId n : members)
          EXPECT_EQ(ball_members({&s, n, Radius{r}}), members);
      }
    const auto balls = all_balls(s);
    for (const auto &a : balls)
      for (const auto &b : balls) {
        std::vector<ElementId> common;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                              std::back_inserter(common));
        const bool nested = common == a || common == b;
        EXPECT_TRUE(common.empty() || nested);
      }
  }
}

TEST(SphericalCompleteness, SmallSpaces) {
  FiniteUltrametricSpace one({"a"}, RadiusScale::integers(1), {kZeroRadius});
  EXPECT_TRUE(check_spherical_completeness(one).pass);
  FiniteUltrametricSpace two({"a", "b"}, RadiusScale::integers(1),
                             {kZeroRadius, Radius{1}, Radius{1}, kZeroRadius});
  const auto r = check_spherical_completeness(two);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.distinct_balls, 3u);
  EXPECT_EQ(r.chains_checked, 2u);
}

TEST(ProductSpace, DistanceExamples) {
  FiniteUltrametricSpace c1({"a", "a'"}, RadiusScale::integers(3),
                            {kZeroRadius, Radius{2}, Radius{2}, kZeroRadius});
  FiniteUltrametricSpace c2({"b", "b'"}, RadiusScale::integers(3),
                            {kZeroRadius, Radius{3}, Radius{3}, kZeroRadius});
  const ProductSpace p({c1, c2});
  const std::vector<ElementId> m{0, 0}, n{1, 0}, o{1, 1};
  EXPECT_EQ(product_distance(p, m, m), kZeroRadius);
  EXPECT_EQ(product_distance(p, m, n), Radius{2});
  EXPECT_EQ(product_distance(p, m, o), Radius{3});
  const std::vector<ElementId> short_vec{0};
  EXPECT_THROW(product_distance(p, m, short_vec), DimensionMismatchError);
  EXPECT_EQ(p.size(), 4u);
  EXPECT_EQ(p.encode(p.decode(3)), 3u);
  const auto flat = p.materialize();
  EXPECT_EQ(flat.element(1), "(a,b')");
  EXPECT_TRUE(check_axioms(flat).pass);
}

TEST(ProductSpace, RequiresSharedScale) {
  FiniteUltrametricSpace c1({"a"}, RadiusScale::integers(1), {kZeroRadius});
  FiniteUltrametricSpace c2({"b"}, RadiusScale::integers(2), {kZeroRadius});
  EXPECT_THROW(ProductSpace({c1, c2}), PreconditionError);
}

TEST(ProductSpace, EveryBallIsABox) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FiniteUltrametricSpace> comps;
    const std::size_t k = 1 + rng() % 3;
    for (std::size_t i = 0; i < k; ++i)
      comps.push_back(random_height_space(rng, 1 + rng() % 4, 3));
    const ProductSpace p(comps);
    const auto flat = p.materialize();
    EXPECT_TRUE(check_axioms(flat).pass);
    for (ElementId c = 0; c < flat.size(); ++c)
      for (std::uint32_t r = 0; r < flat.scale().size(); ++r)
        EXPECT_TRUE(check_ball_is_box(p, {&flat, c, Radius{r}}));
  }
}

TEST(ClassifyContraction, Examples) {
  FiniteUltrametricSpace two({"a", "b"}, RadiusScale::integers(1),
                             {kZeroRadius, Radius{1}, Radius{1}, kZeroRadius});
  const std::vector<ElementId> identity{0, 1}, constant{0, 0}, swap{1, 0};
  EXPECT_EQ(classify_contraction(two, identity).classification,
            ContractionClass::contraction_strict_on_orbits);
  EXPECT_EQ(classify_contraction(two, constant).classification,
            ContractionClass::strict_contraction);
  const auto r = classify_contraction(two, swap);
  EXPECT_EQ(r.classification, ContractionClass::contraction);
  EXPECT_EQ(r.witness, (std::vector<ElementId>{0}));
  EXPECT_EQ(to_string(ContractionClass::not_contraction), "not-contraction");
}

TEST(ClassifyContraction, NotContraction) {
  // a and b are close but their images are far apart.
  const auto s = three_point(2, 1, 2);
  const std::vector<ElementId> sigma{0, 0, 1};
  const auto r = classify_contraction(s, sigma);
  EXPECT_EQ(r.classification, ContractionClass::not_contraction);
  EXPECT_EQ(r.witness.size(), 2u);
}

TEST(SpaceFile, ParsesWithDefaults) {
  const auto doc = nlohmann::json::parse(R"({
    "elements": ["x", "y", "z"], "scale": ["0", "1", "2"],
    "dist": [["x", "y", "2"], ["x", "z", "2"], ["z", "y", "1"]]})");
  const auto s = parse_space(doc);
  EXPECT_EQ(s.dist(1, 2), Radius{1});
  EXPECT_EQ(s.dist(2, 1), Radius{1});
  EXPECT_EQ(s.dist(0, 0), kZeroRadius);
  EXPECT_TRUE(check_axioms(s).pass);
}

TEST(SpaceFile, RejectsBadInput) {
  EXPECT_THROW(parse_space(nlohmann::json::parse(
                   R"({"elements": ["x", "y"], "scale": ["0", "1"], "dist": []})")),
               MalformedInputError);
  EXPECT_THROW(parse_space(nlohmann::json::parse(
                   R"({"elements": ["x", "y"], "scale": ["0", "1"],
                       "dist": [["x", "y", "7"]]})")),
               MalformedInputError);
  EXPECT_THROW(parse_space(nlohmann::json::parse(
                   R"({"elements": ["x", "y"], "scale": ["0", "1", "2"],
                       "dist": [["x", "y", "1"], ["x", "y", "2"]]})")),
               MalformedInputError);
  EXPECT_THROW(load_space("/nonexistent/space.json"), MalformedInputError);
}

TEST(SpaceFile, Corpus) {
  EXPECT_TRUE(check_axioms(load_space(ULTRACO_CORPUS "/spaces/three_point.json")).pass);
  EXPECT_FALSE(check_axioms(load_space(ULTRACO_CORPUS "/spaces/not_ultrametric.json")).pass);
}
