#include <gtest/gtest.h>

#include <unordered_set>

#include "typomerge/error.hpp"
#include "typomerge/language.hpp"

using typomerge::Error;
using typomerge::ErrorCode;
using typomerge::LanguageId;

TEST(LanguageId, AcceptsIsoStyleCodes) {
  EXPECT_EQ(LanguageId("de").str(), "de");
  EXPECT_EQ(LanguageId("eng").str(), "eng");
  EXPECT_EQ(LanguageId("zh_min").str(), "zh_min");
  EXPECT_EQ(LanguageId("l01").str(), "l01");
}

TEST(LanguageId, RejectsInvalidCodes) {
  for (const char* bad : {"", "DE", "de-at", "toolongid", "é", " de"}) {
    try {
      LanguageId id{bad};
      ADD_FAILURE() << "accepted '" << bad << "'";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidArgument) << bad;
    }
  }
}

TEST(LanguageId, OrderingIsLexicographic) {
  EXPECT_LT(LanguageId("da"), LanguageId("de"));
  EXPECT_LT(LanguageId("de"), LanguageId("deu"));
  EXPECT_LT(LanguageId("en"), LanguageId("l01"));
  EXPECT_EQ(LanguageId("fr"), LanguageId("fr"));
}

TEST(LanguageId, Hashable) {
  std::unordered_set<LanguageId> set{LanguageId("de"), LanguageId("de"), LanguageId("fr")};
  EXPECT_EQ(set.size(), 2u);
}

TEST(ErrorCodeNames, AreStable) {
  EXPECT_EQ(to_string(ErrorCode::AllPruned), "AllPruned");
  EXPECT_EQ(to_string(ErrorCode::SchemaMismatch), "SchemaMismatch");
  EXPECT_EQ(to_string(ErrorCode::MalformedContainer), "MalformedContainer");
}

TEST(ErrorContext, PrependsContextAndKeepsCode) {
  Error e(ErrorCode::ZeroVector, "zero vector");
  auto wrapped = e.with_context("source 'fr'");
  EXPECT_EQ(wrapped.code(), ErrorCode::ZeroVector);
  EXPECT_NE(std::string(wrapped.what()).find("source 'fr'"), std::string::npos);
  EXPECT_NE(std::string(wrapped.what()).find("zero vector"), std::string::npos);
}
