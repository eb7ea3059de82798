#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "reasonprobe/corpus.hpp"
#include "reasonprobe/io.hpp"

using namespace reasonprobe;

namespace {

std::string line(const std::string& q, const std::string& a) {
  return json{{"question", q}, {"answer", a}}.dump() + "\n";
}

std::vector<Problem> make_problems(std::size_t n) {
  std::string content;
  for (std::size_t i = 0; i < n; ++i) content += line("q" + std::to_string(i), "#### " + std::to_string(i));
  return parse_corpus(content);
}

}  // namespace

TEST_CASE("gold answer extraction") {
  CHECK(extract_gold_answer("She sells the remainder at the market.\n#### 18") == Decimal(18, 0));
  CHECK(extract_gold_answer("#### 72") == Decimal(72, 0));
  CHECK(extract_gold_answer("#### $5.50") == Decimal(55, 1));
  CHECK(extract_gold_answer("reasoning #### 3 more text #### 41") == Decimal(41, 0));
  CHECK(extract_gold_answer("#### -12") == Decimal(-12, 0));
  CHECK(extract_gold_answer("#### 25%") == Decimal(25, 0));
  CHECK_THROWS_AS(extract_gold_answer("no marker here"), CorpusError);
  CHECK_THROWS_AS(extract_gold_answer("#### twelve"), CorpusError);
  CHECK_THROWS_AS(extract_gold_answer("####"), CorpusError);
}

TEST_CASE("comma-grouped answers in GSM8K-format records") {
  const std::pair<const char*, std::int64_t> records[] = {
      {"The total is 18*70 = <<18*70=1260>>1260\n#### 1,260", 1260},
      {"He earns 2,500 a week so 52*2500 = <<52*2500=130000>>130000\n#### 130,000", 130000},
      {"So the house is worth 80,000+50,000=<<80000+50000=130000>>130,000\n#### 70,000", 70000},
      {"She saves 1200*12=<<1200*12=14400>>14,400 dollars\n#### 14,400", 14400},
      {"That is 3*1,000,000 = <<3*1000000=3000000>>3,000,000\n#### 3,000,000", 3000000},
      {"The cost is $1,234.50 in total\n#### $1,234.50", 0},
  };
  for (const auto& [text, value] : records) {
    if (value == 0) CHECK(extract_gold_answer(text) == Decimal(123450, 2));
    else CHECK(extract_gold_answer(text) == Decimal(value, 0));
  }
}

TEST_CASE("corpus parsing") {
  CHECK(parse_corpus("").empty());
  const auto ps = parse_corpus(line("a?", "x\n#### 1,260") + "\n" + line("b?", "#### 2"));
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].gold_answer == Decimal(1260, 0));
  CHECK(ps[0].id != ps[1].id);
  CHECK(ps[0].gold_answer_raw.find("####") != std::string::npos);

  try {
    parse_corpus(line("a", "#### 1") + "{not json\n");
    FAIL("expected an error");
  } catch (const CorpusError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  try {
    parse_corpus(line("a", "#### 1") + line("b", "no marker"));
    FAIL("expected an error");
  } catch (const CorpusError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_corpus(R"({"question": "x"})" "\n"), CorpusError);
}

TEST_CASE("sampling") {
  const auto ten = make_problems(10);
  const auto all = sample_corpus(ten, 10, 5);
  std::set<std::string> ids;
  for (const auto& p : all.problems) ids.insert(p.id);
  CHECK(ids.size() == 10);

  const auto big = make_problems(1319);
  const auto s1 = sample_corpus(big, 1000, 42);
  const auto s2 = sample_corpus(big, 1000, 42);
  REQUIRE(s1.problems.size() == 1000);
  for (std::size_t i = 0; i < 1000; ++i) CHECK(s1.problems[i].id == s2.problems[i].id);
  const auto s3 = sample_corpus(big, 1000, 43);
  bool differs = false;
  for (std::size_t i = 0; i < 1000; ++i) differs |= s1.problems[i].id != s3.problems[i].id;
  CHECK(differs);

  const auto five = make_problems(5);
  try {
    sample_corpus(five, 6, 1);
    FAIL("expected an error");
  } catch (const CorpusError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('5') != std::string::npos);
    CHECK(msg.find('6') != std::string::npos);
  }
  CHECK_THROWS_AS(sample_corpus(five, 0, 1), CorpusError);
}

TEST_CASE("sample round trip") {
  const auto ps = make_problems(20);
  const auto s = sample_corpus(ps, 7, 9);
  const auto dir = std::filesystem::temp_directory_path() / "rp_corpus_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "sample.jsonl", serialize_sample(s));
  const auto back = read_sample(dir / "sample.jsonl");
  REQUIRE(back.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(back[i].id == s.problems[i].id);
    CHECK(back[i].question == s.problems[i].question);
    CHECK(back[i].gold_answer == s.problems[i].gold_answer);
  }
  std::filesystem::remove_all(dir);
}
