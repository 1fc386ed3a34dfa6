#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "test_support.hpp"
#include "typomerge/error.hpp"
#include "typomerge/typology.hpp"

using namespace typomerge;
using typomerge::testing::fixture;

namespace {

TypologyTable parse(const std::string& text) {
  std::istringstream in(text);
  return parse_typology(in);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

TypologyTable vectors(std::vector<std::pair<std::string, FeatureValues>> rows, std::size_t width) {
  std::vector<Feature> features;
  for (std::size_t i = 0; i < width; ++i) features.push_back({"f" + std::to_string(i), FeatureCategory::Syntactic});
  std::map<LanguageId, FeatureValues> v;
  for (auto& [lang, values] : rows) v.emplace(LanguageId(lang), std::move(values));
  return TypologyTable(std::move(features), std::move(v));
}

}  // namespace

TEST(LoadTypology, ParsesFixture) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  ASSERT_EQ(table.vectors().size(), 3u);
  ASSERT_EQ(table.features().size(), 4u);
  for (const auto& [_, values] : table.vectors()) EXPECT_EQ(values.size(), 4u);
  EXPECT_EQ(table.features()[0], (Feature{"case_marking", FeatureCategory::Morphological}));
  EXPECT_EQ(table.features()[3], (Feature{"adpositions", FeatureCategory::Syntactic}));
}

TEST(LoadTypology, BlankCellIsMissing) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  const auto& tr = table.values(LanguageId("tr"));
  EXPECT_EQ(tr[0], 1.0);
  EXPECT_FALSE(tr[2].has_value());
}

TEST(LoadTypology, ValueOutOfRangeIsMalformed) {
  EXPECT_EQ(code_of([] { parse("lang,a\n#category,syntactic\nde,1.5\n"); }), ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([] { parse("lang,a\n#category,syntactic\nde,-0.1\n"); }), ErrorCode::MalformedFile);
}

TEST(LoadTypology, RejectsBadStructure) {
  EXPECT_EQ(code_of([] { parse(""); }), ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([] { parse("language,a\n#category,syntactic\nde,1\n"); }), ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([] { parse("lang,a\nde,1\n"); }), ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([] { parse("lang,a\n#category,genetic\nde,1\n"); }), ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([] { parse("lang,a\n#category,featural\nde,1\n"); }), ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([] { parse("lang,a,b\n#category,syntactic,syntactic\nde,1\n"); }), ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([] { parse("lang,a\n#category,syntactic\nde,x\n"); }), ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([] { parse("lang,a\n#category,syntactic\nde,1\nde,0\n"); }), ErrorCode::MalformedFile);
  EXPECT_EQ(code_of([] { parse("lang,a,a\n#category,syntactic,syntactic\nde,1,1\n"); }), ErrorCode::MalformedFile);
}

TEST(LoadTypology, HeaderOnlyIsEmptyTable) {
  EXPECT_EQ(code_of([] { parse("lang,a\n#category,syntactic\n"); }), ErrorCode::EmptyTable);
}

TEST(LoadTypology, ToleratesBomCrlfAndBlankLines) {
  const auto table = parse("\xEF\xBB\xBFlang,a\r\n#category,inventory\r\n\r\nde,0.25\r\n");
  EXPECT_EQ(table.values(LanguageId("de"))[0], 0.25);
}

TEST(LoadTypology, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { load_typology("/nonexistent/typology.csv"); }), ErrorCode::IoError);
}

TEST(FormatTypology, RoundTrips) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  EXPECT_EQ(parse(format_typology(table)), table);
  const auto odd = vectors({{"aa", {0.1, std::nullopt, 1.0 / 3.0}}}, 3);
  EXPECT_EQ(parse(format_typology(odd)), odd);
}

TEST(FeatureSubset, FeaturalIsIdentity) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  EXPECT_EQ(feature_subset(table, FeatureCategory::Featural), table);
}

TEST(FeatureSubset, FiltersByTag) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  const auto morph = feature_subset(table, FeatureCategory::Morphological);
  ASSERT_EQ(morph.features().size(), 2u);
  EXPECT_EQ(morph.features()[0].name, "case_marking");
  EXPECT_EQ(morph.features()[1].name, "gender");
  EXPECT_EQ(morph.values(LanguageId("fr")), (FeatureValues{0.0, 1.0}));
}

TEST(FeatureSubset, MissingCategoryIsEmptyCategory) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  EXPECT_EQ(code_of([&] { feature_subset(table, FeatureCategory::Phonological); }), ErrorCode::EmptyCategory);
}

TEST(FeatureSubset, DropsLanguagesWithoutValues) {
  const auto table = parse("lang,m,s\n#category,morphological,syntactic\nde,1,\nfr,,1\n");
  const auto morph = feature_subset(table, FeatureCategory::Morphological);
  EXPECT_TRUE(morph.contains(LanguageId("de")));
  EXPECT_FALSE(morph.contains(LanguageId("fr")));
}

TEST(Distance, IdenticalVectorsAreZero) {
  const auto t = vectors({{"aa", {1.0, 0.0, 1.0}}, {"bb", {1.0, 0.0, 1.0}}}, 3);
  EXPECT_EQ(distance(t, LanguageId("aa"), LanguageId("bb")), 0.0);
  EXPECT_EQ(distance(t, LanguageId("aa"), LanguageId("aa")), 0.0);
}

TEST(Distance, OrthogonalVectorsAreOne) {
  const auto t = vectors({{"aa", {1.0, 0.0}}, {"bb", {0.0, 1.0}}}, 2);
  EXPECT_EQ(distance(t, LanguageId("aa"), LanguageId("bb")), 1.0);
}

TEST(Distance, MatchesHighPrecisionOracle) {
  const auto t = vectors({{"aa", {1.0, 1.0, 0.0}}, {"bb", {1.0, 0.0, 0.0}}}, 3);
  EXPECT_NEAR(distance(t, LanguageId("aa"), LanguageId("bb")), 0.2928932188134524756, 1e-15);
}

TEST(Distance, UsesOnlyJointlyPresentCoordinates) {
  const auto t = vectors({{"aa", {1.0, std::nullopt, 0.0}}, {"bb", {1.0, 1.0, std::nullopt}}}, 3);
  EXPECT_EQ(distance(t, LanguageId("aa"), LanguageId("bb")), 0.0);
}

TEST(Distance, Errors) {
  const auto t = vectors({{"aa", {1.0, std::nullopt}}, {"bb", {std::nullopt, 1.0}}, {"cc", {0.0, 1.0}}}, 2);
  EXPECT_EQ(code_of([&] { distance(t, LanguageId("aa"), LanguageId("zz")); }), ErrorCode::UnknownLanguage);
  EXPECT_EQ(code_of([&] { distance(t, LanguageId("aa"), LanguageId("bb")); }), ErrorCode::InsufficientOverlap);
  EXPECT_EQ(code_of([&] { distance(t, LanguageId("aa"), LanguageId("cc")); }), ErrorCode::ZeroVector);
  EXPECT_EQ(code_of([&] { distance(t, LanguageId("bb"), LanguageId("cc"), DistanceOptions{2}); }),
            ErrorCode::InsufficientOverlap);
}

TEST(Distance, FixtureValues) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  EXPECT_NEAR(distance(table, LanguageId("de"), LanguageId("fr")), 1.0 / 3.0, 1e-15);
}

TEST(DistanceVector, SingletonPoolNormalizesToZero) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  const auto dv = distance_vector(table, LanguageId("de"), {LanguageId("fr")}, FeatureCategory::Featural);
  ASSERT_EQ(dv.entries.size(), 1u);
  EXPECT_EQ(dv.entries.at(LanguageId("fr")).normalized, 0.0);
  EXPECT_NEAR(dv.entries.at(LanguageId("fr")).raw, 1.0 / 3.0, 1e-15);
}

TEST(DistanceVector, MinMaxNormalization) {
  const auto dv = make_distance_vector(LanguageId("xx"), DistanceKind::Precomputed,
                                       {{LanguageId("aa"), 0.2}, {LanguageId("bb"), 0.4}, {LanguageId("cc"), 0.6}});
  EXPECT_EQ(dv.entries.at(LanguageId("aa")).normalized, 0.0);
  EXPECT_NEAR(dv.entries.at(LanguageId("bb")).normalized, 0.5, 1e-15);
  EXPECT_EQ(dv.entries.at(LanguageId("cc")).normalized, 1.0);
}

TEST(DistanceVector, AllEqualNormalizeToZero) {
  const auto dv = make_distance_vector(LanguageId("xx"), DistanceKind::Precomputed,
                                       {{LanguageId("aa"), 0.3}, {LanguageId("bb"), 0.3}});
  EXPECT_EQ(dv.entries.at(LanguageId("aa")).normalized, 0.0);
  EXPECT_EQ(dv.entries.at(LanguageId("bb")).normalized, 0.0);
}

TEST(DistanceVector, ExcludesTargetAndRejectsEmptyPool) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  const auto dv = distance_vector(table, LanguageId("de"), {LanguageId("de"), LanguageId("fr"), LanguageId("tr")},
                                  FeatureCategory::Featural);
  EXPECT_FALSE(dv.entries.contains(LanguageId("de")));
  EXPECT_EQ(dv.entries.size(), 2u);
  EXPECT_EQ(code_of([&] { distance_vector(table, LanguageId("de"), {LanguageId("de")}, FeatureCategory::Featural); }),
            ErrorCode::EmptyPool);
}

TEST(DistanceVector, AnnotatesFailingSource) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  try {
    distance_vector(table, LanguageId("de"), {LanguageId("fr"), LanguageId("tr")}, FeatureCategory::Syntactic);
    FAIL() << "expected ZeroVector";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
    EXPECT_NE(std::string(e.what()).find("'tr'"), std::string::npos);
  }
}

TEST(DistanceVector, UnknownTargetOrSource) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  EXPECT_EQ(code_of([&] {
              distance_vector(table, LanguageId("xx"), {LanguageId("fr")}, FeatureCategory::Featural);
            }),
            ErrorCode::UnknownLanguage);
  EXPECT_EQ(code_of([&] {
              distance_vector(table, LanguageId("de"), {LanguageId("zz")}, FeatureCategory::Featural);
            }),
            ErrorCode::UnknownLanguage);
}

TEST(DistanceVector, KindFollowsCategory) {
  const auto table = load_typology(fixture("typology_3x4.csv"));
  const auto dv = distance_vector(table, LanguageId("de"), {LanguageId("fr"), LanguageId("tr")},
                                  FeatureCategory::Morphological);
  EXPECT_EQ(dv.kind, DistanceKind::Morphological);
  // de=(1,1), fr=(0,1), tr=(1,0): both at 1 - 1/sqrt(2), so both normalize to 0.
  EXPECT_NEAR(dv.entries.at(LanguageId("fr")).raw, 0.2928932188134524756, 1e-15);
  EXPECT_EQ(dv.entries.at(LanguageId("fr")).normalized, 0.0);
  EXPECT_EQ(dv.entries.at(LanguageId("tr")).normalized, 0.0);
}
