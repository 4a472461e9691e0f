#include "maskgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "maskgen/errors.hpp"

namespace maskgen {
namespace {

using NgramCounts = std::map<std::string, std::size_t>;

NgramCounts ngrams(const Words& words, std::size_t n) {
  NgramCounts out;
  if (words.size() < n) return out;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::string key = words[i];
    for (std::size_t k = 1; k < n; ++k) key += '\x1f' + words[i + k];
    ++out[key];
  }
  return out;
}

std::size_t lcs_length(const Words& a, const Words& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(const std::string& w, const std::string& suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string undouble(std::string base) {
  const std::size_t n = base.size();
  if (n >= 3 && base[n - 1] == base[n - 2] && !is_vowel(base[n - 1]) && base[n - 1] != 'l' &&
      base[n - 1] != 's' && base[n - 1] != 'z') {
    base.pop_back();
  }
  return base;
}

constexpr Scalar kMeteorAlpha = 0.9;
constexpr Scalar kMeteorPenaltyWeight = 0.5;
constexpr std::size_t kMeteorSearchBudget = 200000;

// Depth-first search over candidate positions for the fewest-chunk alignment
// with the required number of exact and total matches.
class ChunkSearch {
 public:
  ChunkSearch(const Words& cand, const Words& ref) : cand_(cand), ref_(ref), used_(ref.size(), false) {
    options_.resize(cand.size());
    std::vector<std::string> cand_stems, ref_stems;
    for (const auto& w : cand) cand_stems.push_back(suffix_stem(w));
    for (const auto& w : ref) ref_stems.push_back(suffix_stem(w));
    for (std::size_t i = 0; i < cand.size(); ++i) {
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (cand[i] == ref[j] || cand_stems[i] == ref_stems[j]) options_[i].push_back(j);
      }
    }

    std::map<std::string, std::size_t> cc, rc;
    for (const auto& w : cand) ++cc[w];
    for (const auto& w : ref) ++rc[w];
    std::map<std::string, std::size_t> left_c, left_r;
    for (const auto& [w, c] : cc) {
      const std::size_t r = rc.count(w) ? rc[w] : 0;
      exact_needed_ += std::min(c, r);
      if (c > r) left_c[suffix_stem(w)] += c - r;
    }
    for (const auto& [w, r] : rc) {
      const std::size_t c = cc.count(w) ? cc[w] : 0;
      if (r > c) left_r[suffix_stem(w)] += r - c;
    }
    std::size_t stem_matches = 0;
    for (const auto& [s, c] : left_c) {
      if (left_r.count(s)) stem_matches += std::min(c, left_r[s]);
    }
    total_needed_ = exact_needed_ + stem_matches;
  }

  MeteorAlignment run() {
    MeteorAlignment out;
    out.matches = total_needed_;
    if (total_needed_ == 0) return out;
    best_chunks_ = std::numeric_limits<std::size_t>::max();
    dfs(0, 0, 0, 0, kNone, kNone);
    out.chunks = best_chunks_;
    return out;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  void dfs(std::size_t i, std::size_t exact, std::size_t total, std::size_t chunks,
           std::size_t prev_i, std::size_t prev_j) {
    if (++nodes_ > kMeteorSearchBudget && best_chunks_ != std::numeric_limits<std::size_t>::max()) return;
    if (chunks >= best_chunks_) return;
    if (total + (cand_.size() - i) < total_needed_) return;
    if (exact > exact_needed_ || total > total_needed_) return;
    if (i == cand_.size()) {
      if (exact == exact_needed_ && total == total_needed_) best_chunks_ = chunks;
      return;
    }
    // Try continuing the current chunk first so good solutions come early.
    std::vector<std::size_t> order = options_[i];
    if (prev_i + 1 == i && prev_j != kNone) {
      auto it = std::find(order.begin(), order.end(), prev_j + 1);
      if (it != order.end()) std::rotate(order.begin(), it, it + 1);
    }
    for (std::size_t j : order) {
      if (used_[j]) continue;
      const bool continues = prev_i != kNone && prev_i + 1 == i && prev_j + 1 == j;
      used_[j] = true;
      dfs(i + 1, exact + (cand_[i] == ref_[j]), total + 1, chunks + (continues ? 0 : 1), i, j);
      used_[j] = false;
    }
    dfs(i + 1, exact, total, chunks, prev_i, prev_j);
  }

  const Words& cand_;
  const Words& ref_;
  std::vector<std::vector<std::size_t>> options_;
  std::vector<bool> used_;
  std::size_t exact_needed_ = 0;
  std::size_t total_needed_ = 0;
  std::size_t best_chunks_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace

void validate_corpus(const EvalCorpus& corpus) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].references.empty()) {
      throw ValidationError("evaluation item " + std::to_string(i) + " has no references");
    }
  }
}

Scalar bleu(const EvalCorpus& corpus, int n) {
  if (n < 1 || n > 4) throw ConfigError("BLEU order must lie in 1..4");
  validate_corpus(corpus);
  std::array<std::size_t, 4> matched{}, total{};
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
  for (const auto& item : corpus) {
    const std::size_t c = item.candidate.size();
    cand_len += c;
    std::size_t closest = item.references.front().size();
    for (const auto& r : item.references) {
      const auto diff = [c](std::size_t len) { return len > c ? len - c : c - len; };
      if (diff(r.size()) < diff(closest) || (diff(r.size()) == diff(closest) && r.size() < closest)) {
        closest = r.size();
      }
    }
    ref_len += closest;
    for (int k = 1; k <= n; ++k) {
      const NgramCounts cand = ngrams(item.candidate, static_cast<std::size_t>(k));
      std::map<std::string, std::size_t> max_ref;
      for (const auto& r : item.references) {
        for (const auto& [g, cnt] : ngrams(r, static_cast<std::size_t>(k))) {
          max_ref[g] = std::max(max_ref[g], cnt);
        }
      }
      for (const auto& [g, cnt] : cand) {
        total[k - 1] += cnt;
        auto it = max_ref.find(g);
        if (it != max_ref.end()) matched[k - 1] += std::min(cnt, it->second);
      }
    }
  }
  if (cand_len == 0) return 0.0;
  Scalar log_sum = 0;
  for (int k = 0; k < n; ++k) {
    const Scalar num = std::max(static_cast<Scalar>(matched[k]), kBleuEpsilon);
    const Scalar den = std::max(static_cast<Scalar>(total[k]), kBleuEpsilon);
    log_sum += std::log(num / den);
  }
  const Scalar brevity = cand_len > ref_len
                             ? 1.0
                             : std::exp(1.0 - static_cast<Scalar>(ref_len) / static_cast<Scalar>(cand_len));
  return brevity * std::exp(log_sum / n);
}

Scalar rouge_l_item(const Words& candidate, const std::vector<Words>& references) {
  constexpr Scalar kBetaSq = 1.2 * 1.2;
  Scalar best = 0;
  if (candidate.empty()) return 0.0;
  for (const auto& r : references) {
    if (r.empty()) continue;
    const auto lcs = static_cast<Scalar>(lcs_length(candidate, r));
    if (lcs == 0) continue;
    const Scalar p = lcs / static_cast<Scalar>(candidate.size());
    const Scalar rec = lcs / static_cast<Scalar>(r.size());
    best = std::max(best, (1 + kBetaSq) * p * rec / (rec + kBetaSq * p));
  }
  return best;
}

Scalar rouge_l(const EvalCorpus& corpus) {
  validate_corpus(corpus);
  if (corpus.empty()) return 0.0;
  Scalar total = 0;
  for (const auto& item : corpus) total += rouge_l_item(item.candidate, item.references);
  return total / static_cast<Scalar>(corpus.size());
}

std::string suffix_stem(const std::string& w) {
  const std::size_t n = w.size();
  if (n > 5 && ends_with(w, "ing")) return undouble(w.substr(0, n - 3));
  if (n > 4 && ends_with(w, "ed")) return undouble(w.substr(0, n - 2));
  if (n > 4 && ends_with(w, "es")) {
    const std::string base = w.substr(0, n - 2);
    if (ends_with(base, "s") || ends_with(base, "x") || ends_with(base, "z") || ends_with(base, "ch") ||
        ends_with(base, "sh")) {
      return base;
    }
  }
  if (n > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) {
    return w.substr(0, n - 1);
  }
  return w;
}

MeteorAlignment meteor_align(const Words& candidate, const Words& reference) {
  return ChunkSearch(candidate, reference).run();
}

Scalar meteor_item(const Words& candidate, const std::vector<Words>& references) {
  Scalar best = 0;
  for (const auto& r : references) {
    const MeteorAlignment a = meteor_align(candidate, r);
    if (a.matches == 0) continue;
    const auto m = static_cast<Scalar>(a.matches);
    const Scalar p = m / static_cast<Scalar>(candidate.size());
    const Scalar rec = m / static_cast<Scalar>(r.size());
    const Scalar fmean = p * rec / (kMeteorAlpha * p + (1 - kMeteorAlpha) * rec);
    const Scalar frag = static_cast<Scalar>(a.chunks) / m;
    const Scalar penalty = kMeteorPenaltyWeight * frag * frag * frag;
    best = std::max(best, fmean * (1 - penalty));
  }
  return best;
}

Scalar meteor_lite(const EvalCorpus& corpus) {
  validate_corpus(corpus);
  if (corpus.empty()) return 0.0;
  Scalar total = 0;
  for (const auto& item : corpus) total += meteor_item(item.candidate, item.references);
  return total / static_cast<Scalar>(corpus.size());
}

std::vector<Scalar> cider_items(const EvalCorpus& corpus) {
  validate_corpus(corpus);
  if (corpus.size() < 2) throw ValidationError("CIDEr needs at least two items to define idf");
  constexpr std::size_t kOrders = 4;
  const auto docs = static_cast<Scalar>(corpus.size());

  std::array<std::map<std::string, std::size_t>, kOrders> df;
  for (const auto& item : corpus) {
    for (std::size_t n = 1; n <= kOrders; ++n) {
      std::set<std::string> seen;
      for (const auto& r : item.references) {
        for (const auto& [g, c] : ngrams(r, n)) seen.insert(g);
      }
      for (const auto& g : seen) ++df[n - 1][g];
    }
  }

  auto weighted = [&](const Words& words, std::size_t n, Scalar& norm) {
    std::map<std::string, Scalar> vec;
    norm = 0;
    for (const auto& [g, c] : ngrams(words, n)) {
      auto it = df[n - 1].find(g);
      const Scalar freq = it == df[n - 1].end() ? 1.0 : static_cast<Scalar>(it->second);
      const Scalar w = static_cast<Scalar>(c) * (std::log(docs) - std::log(freq));
      vec[g] = w;
      norm += w * w;
    }
    norm = std::sqrt(norm);
    return vec;
  };

  std::vector<Scalar> scores;
  scores.reserve(corpus.size());
  for (const auto& item : corpus) {
    Scalar item_score = 0;
    for (std::size_t n = 1; n <= kOrders; ++n) {
      Scalar cand_norm = 0;
      const auto cand = weighted(item.candidate, n, cand_norm);
      Scalar order_score = 0;
      for (const auto& r : item.references) {
        Scalar ref_norm = 0;
        const auto ref = weighted(r, n, ref_norm);
        Scalar dot = 0;
        for (const auto& [g, w] : cand) {
          auto it = ref.find(g);
          if (it != ref.end()) dot += w * it->second;
        }
        if (cand_norm > 0 && ref_norm > 0) order_score += dot / (cand_norm * ref_norm);
      }
      item_score += order_score / static_cast<Scalar>(item.references.size());
    }
    scores.push_back(10.0 * item_score / static_cast<Scalar>(kOrders));
  }
  return scores;
}

Scalar cider(const EvalCorpus& corpus) {
  const auto scores = cider_items(corpus);
  Scalar total = 0;
  for (Scalar s : scores) total += s;
  return total / static_cast<Scalar>(scores.size());
}

MetricReport evaluate_corpus(const EvalCorpus& corpus) {
  validate_corpus(corpus);
  MetricReport report;
  for (int n = 1; n <= 4; ++n) report.bleu[n - 1] = bleu(corpus, n);
  report.rouge_l = rouge_l(corpus);
  report.meteor = meteor_lite(corpus);
  report.cider = cider(corpus);
  report.items = corpus.size();
  return report;
}

std::string format_report(const MetricReport& report, const std::vector<std::string>& header) {
  std::string out;
  for (const auto& h : header) out += "# " + h + "\n";
  auto line = [&out](const char* key, Scalar v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.6f\n", key, v);
    out += buf;
  };
  line("bleu_1", report.bleu[0]);
  line("bleu_2", report.bleu[1]);
  line("bleu_3", report.bleu[2]);
  line("bleu_4", report.bleu[3]);
  line("rouge_l", report.rouge_l);
  line("meteor", report.meteor);
  line("cider", report.cider);
  out += "items=" + std::to_string(report.items) + "\n";
  out += "bleu_smoothing=epsilon_1e-9\n";
  out += "meteor_variant=exact_and_suffix_stem_no_synonyms\n";
  out += "cider_variant=plain\n";
  return out;
}

}  // namespace maskgen
