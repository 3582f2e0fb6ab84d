// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "lineocr/eval.hpp"
#include "lineocr/recognize.hpp"
#include "lineocr/toy_assets.hpp"
#include "oracles.hpp"

using namespace lineocr;

TEST_CASE("levenshtein examples") {
  CHECK(levenshtein(U"abc", U"abc").distance == 0);
  const auto a = levenshtein(U"", U"abc");
  CHECK(a.distance == 3);
  for (const auto& op : a.script) CHECK(op.kind == EditKind::Insertion);
  CHECK(levenshtein(U"kitten", U"sitting").distance == 3);
  CHECK(testkit::edit_distance_recursive(U"kitten", U"sitting") == 3);
  CHECK(levenshtein(U"abc", U"").script.size() == 3);
  CHECK(levenshtein(U"abc", U"").script[0].kind == EditKind::Deletion);
}

TEST_CASE("tie order prefers substitution, then deletion") {
  // "ab" -> "ba": two substitutions or a deletion plus an insertion.
  const auto a = levenshtein(U"ab", U"ba");
  REQUIRE(a.script.size() == 2);
  CHECK(a.script[0].kind == EditKind::Substitution);
  CHECK(a.script[1].kind == EditKind::Substitution);
  const auto b = levenshtein(U"aa", U"a");
  REQUIRE(b.script.size() == 2);
  CHECK(b.script[0].kind == EditKind::Deletion);
  CHECK(b.script[1].kind == EditKind::Match);
}

TEST_CASE("levenshtein agrees with exhaustive recursion") {
  const auto r = testkit::levenshtein_exhaustive_suite(U"abc", 6);
  CHECK(r.cases == 1093 * 1093);
  CHECK_MESSAGE(r.mismatches == 0, r.first_mismatch);
}

TEST_CASE("levenshtein axioms") {
  const auto r = testkit::levenshtein_axiom_suite(10000, 17);
  CHECK_MESSAGE(r.mismatches == 0, r.first_mismatch);
}

TEST_CASE("cer accumulation") {
  CerAccumulator perfect;
  perfect.add(U"the red hat", U"the red hat");
  CHECK(perfect.cer() == 0.0);
  CHECK(perfect.error_table(10).empty());

  CerAccumulator empty;
  empty.add(U"the", U"");
  empty.add(U"red hat", U"");
  CHECK(empty.cer() == 1.0);
  for (const auto& row : empty.error_table(100)) CHECK(row.kind == EditKind::Deletion);

  // Corpus-level CER is the length-weighted mean of line CERs.
  CerAccumulator acc;
  const std::vector<std::pair<std::u32string, std::u32string>> pairs{
      {U"hello", U"helo"}, {U"at", U"a t"}, {U"shot", U"shoot"}, {U"no", U"on"}};
  double weighted = 0.0, total = 0.0;
  for (const auto& [ref, hyp] : pairs) {
    acc.add(ref, hyp);
    weighted += static_cast<double>(levenshtein(ref, hyp).distance);
    total += static_cast<double>(ref.size());
  }
  CHECK(acc.cer() == doctest::Approx(weighted / total));
  const auto rows = acc.error_table(10);
  double pct = 0.0;
  for (const auto& row : rows) {
    CHECK(row.count > 0);
    pct += row.percent;
  }
  CHECK(pct <= 100.0 + 1e-9);
  CHECK(ErrorRow{EditKind::Insertion, 0, U' ', 1, 0}.label() == "Insertion of ' '");
  CHECK(ErrorRow{EditKind::Substitution, U'l', U'i', 1, 0}.label() == "Substitution 'l' -> 'i'");
  CHECK(ErrorRow{EditKind::Deletion, U'.', 0, 1, 0}.label() == "Deletion of '.'");
}

TEST_CASE("whitespace collapsing is optional") {
  CHECK(collapse_whitespace(U"  a   b ") == U"a b");
  CerAccumulator literal, collapsed(true);
  literal.add(U"a b", U"a  b");
  collapsed.add(U"a b", U"a  b");
  CHECK(literal.total_edit_distance() == 1);
  CHECK(collapsed.total_edit_distance() == 0);
}

TEST_CASE("evaluation and recognition plumbing on an untrained model") {
  const auto charset = toy::charset();
  ModelSpec spec;
  spec.num_classes = charset.num_classes();
  spec.hidden_units = 16;
  Model model(spec, 3);
  const auto atlas = toy::stroke_atlas(toy::FontStyle::Plain);
  std::vector<TextLineSample> samples;
  for (auto text : {U"the hat", U"a red one", U"is"}) samples.push_back(render_line(text, atlas));
  const auto set = prepare_samples(samples, charset, NormalizationPolicy{}, 4);
  REQUIRE(set.lines.size() == 3);
  const auto r1 = evaluate(model, charset, set, "type2", 2, 5, nullptr);
  const auto r2 = evaluate(model, charset, set, "type2", 2, 5, nullptr);
  CHECK(r1.total_gt_length == 2 * (7 + 9 + 2));
  CHECK(r1.total_edit_distance == r2.total_edit_distance);
  CHECK(r1.cer == r2.cer);
  CHECK_THROWS_AS(evaluate(model, charset, set, "type3", 1, 5, nullptr), Error);

  Recognizer rec(model, charset.fingerprint(), charset, NormalizationPolicy{});
  const auto a = rec.recognize(samples[0]);
  const auto b = rec.recognize(samples[0]);
  CHECK(a.text == b.text);
  CHECK(a.trace.size() == static_cast<std::size_t>(spec.sequence_length(samples[0].image.width)));
  const auto other = Charset::build_utf8("xyzabcdefgh");
  CHECK_THROWS_AS(Recognizer(model, charset.fingerprint(), other, NormalizationPolicy{}), Error);
  CHECK_THROWS_AS(Recognizer(model, "0000", charset, NormalizationPolicy{}), Error);

  const auto t = benchmark(model, charset, set, "type1", 4, 2, 1, nullptr);
  CHECK(t.trial_seconds.size() == 2);
  CHECK(t.symbols == 18);
  CHECK(t.sec_per_page_mean > 0.0);
  const std::vector<Throughput> rows{t};
  const auto csv = benchmark_csv(rows);
  CHECK(csv.rfind("scenario,batch,trials,sec_per_page_mean,sec_per_page_std\ntype1,4,2,", 0) == 0);
}
