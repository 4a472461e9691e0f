#pragma once

#include <array>
#include <string>
#include <vector>

#include "maskgen/tensor.hpp"

namespace maskgen {

using Words = std::vector<std::string>;

struct EvalItem {
  Words candidate;
  std::vector<Words> references;
};

using EvalCorpus = std::vector<EvalItem>;

// Throws ValidationError if any item has no references.
void validate_corpus(const EvalCorpus& corpus);

inline constexpr Scalar kBleuEpsilon = 1e-9;

// Corpus-level BLEU-n: clipped n-gram precisions pooled over the corpus,
// geometric mean over orders 1..n, brevity penalty against the closest
// reference length (ties to the shorter). An order with no matches uses
// precision eps / max(total, eps); an order with no candidate n-grams at all
// contributes precision 1. An all-empty candidate side scores 0.
Scalar bleu(const EvalCorpus& corpus, int n);

// LCS F-measure with beta = 1.2, best reference per item, mean over items.
Scalar rouge_l_item(const Words& candidate, const std::vector<Words>& references);
Scalar rouge_l(const EvalCorpus& corpus);

// Suffix stripper for -s / -es / -ed / -ing with length guards and
// double-consonant undoubling ("running" -> "run").
std::string suffix_stem(const std::string& word);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Exact matches first, then stem matches among the leftovers; among all such
// maximal alignments the one with the fewest chunks. The search is exhaustive
// for short sentences and falls back to the best alignment found within a
// node budget for long, highly repetitive ones.
MeteorAlignment meteor_align(const Words& candidate, const Words& reference);
// F = P R / (alpha P + (1 - alpha) R), alpha = 0.9; penalty 0.5 (chunks/matches)^3.
Scalar meteor_item(const Words& candidate, const std::vector<Words>& references);
Scalar meteor_lite(const EvalCorpus& corpus);

// Plain CIDEr (no length penalty or clipping), orders 1..4, idf over the
// references of each item as one document, scaled by 10. Needs at least two
// items; throws ValidationError otherwise.
std::vector<Scalar> cider_items(const EvalCorpus& corpus);
Scalar cider(const EvalCorpus& corpus);

struct MetricReport {
  std::array<Scalar, 4> bleu{};
  Scalar rouge_l = 0;
  Scalar meteor = 0;
  Scalar cider = 0;
  std::size_t items = 0;
};

MetricReport evaluate_corpus(const EvalCorpus& corpus);

// Flat key=value text with 6-decimal fixed values. Header lines are written
// as '#' comments.
std::string format_report(const MetricReport& report, const std::vector<std::string>& header = {});

}  // namespace maskgen
