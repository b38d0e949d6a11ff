#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"
#include "tutorbench/error.hpp"
#include "tutorbench/jsonl.hpp"

using namespace tutorbench;
using tutorbench::testing::TempDir;

TEST(Jsonl, AtomicWriteThenRead) {
  TempDir dir;
  const std::vector<json> rows = {{{"a", 1}}, {{"b", "two"}}};
  write_jsonl_atomic(dir / "x.jsonl", rows);
  EXPECT_EQ(read_jsonl(dir / "x.jsonl"), rows);
  EXPECT_FALSE(std::filesystem::exists(dir / "x.jsonl.tmp"));
}

TEST(Jsonl, MissingFileReadsEmpty) {
  TempDir dir;
  EXPECT_TRUE(read_jsonl(dir / "none.jsonl").empty());
}

TEST(Jsonl, UnterminatedFinalLineIsIgnored) {
  TempDir dir;
  write_text_atomic(dir / "x.jsonl", "{\"a\":1}\n{\"b\":");
  const auto rows = read_jsonl(dir / "x.jsonl");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0]["a"], 1);
}

TEST(Jsonl, MalformedCompleteLineThrows) {
  TempDir dir;
  write_text_atomic(dir / "x.jsonl", "{\"a\":1}\nnot json\n");
  EXPECT_THROW(read_jsonl(dir / "x.jsonl"), Error);
}

TEST(Jsonl, AppenderCutsPartialTailAndAppends) {
  TempDir dir;
  write_text_atomic(dir / "x.jsonl", "{\"a\":1}\n{\"half");
  {
    JsonlAppender app(dir / "x.jsonl");
    app.append({{"b", 2}});
  }
  EXPECT_EQ(read_text(dir / "x.jsonl"), "{\"a\":1}\n{\"b\":2}\n");
}

TEST(Jsonl, AppenderCreatesFile) {
  TempDir dir;
  {
    JsonlAppender app(dir / "sub" / "y.jsonl");
    app.append({{"k", 1}});
  }
  EXPECT_EQ(read_jsonl(dir / "sub" / "y.jsonl").size(), 1u);
}
