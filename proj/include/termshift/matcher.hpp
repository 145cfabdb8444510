#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "termshift/strings.hpp"

namespace termshift {

/// One token of a source text, lowercased, with its character span.
struct TokenSpan {
    std::string token;
    size_t start = 0;  // inclusive byte offset
    size_t end = 0;    // exclusive byte offset
};

/// Tokens are maximal runs of ASCII alphanumerics. '-' and '\'' are
/// token-internal only when flanked by alphanumerics on both sides.
/// Everything else (including bytes >= 0x80) is a boundary.
inline std::vector<TokenSpan> tokenize(std::string_view text) {
    std::vector<TokenSpan> tokens;
    const size_t n = text.size();
    size_t i = 0;
    while (i < n) {
        if (!ascii_alnum(text[i])) {
            ++i;
            continue;
        }
        size_t start = i;
        std::string tok;
        tok.push_back(ascii_lower(text[i]));
        ++i;
        while (i < n) {
            char c = text[i];
            if (ascii_alnum(c)) {
                tok.push_back(ascii_lower(c));
                ++i;
            } else if ((c == '-' || c == '\'') && i + 1 < n && ascii_alnum(text[i + 1])) {
                // previous char is alnum by construction (we are inside a run)
                tok.push_back(c);
                i += 2;
                tok.push_back(ascii_lower(text[i - 1]));
            } else {
                break;
            }
        }
        tokens.push_back(TokenSpan{std::move(tok), start, i});
    }
    return tokens;
}

/// Occurrence counts for the matched subset of a term set.
/// per_term holds only terms with count >= 1.
struct TermCounts {
    std::map<std::string, int64_t> per_term;
    int64_t total = 0;

    int64_t unique() const { return static_cast<int64_t>(per_term.size()); }
    int64_t count(const std::string& term) const {
        auto it = per_term.find(term);
        return it == per_term.end() ? 0 : it->second;
    }
};

/// A single verified occurrence: term plus its character span in the text.
struct Occurrence {
    std::string term;
    size_t start = 0;
    size_t end = 0;
};

/// Picks the index key for a multi-word phrase: the token with the lowest
/// corpus frequency, ties broken by phrase position. Unknown tokens count
/// as frequency 0.
inline size_t rare_token_offset(const std::vector<std::string>& phrase_tokens,
                                const std::unordered_map<std::string, int64_t>& token_freq) {
    size_t best = 0;
    int64_t best_freq = -1;
    for (size_t i = 0; i < phrase_tokens.size(); ++i) {
        auto it = token_freq.find(phrase_tokens[i]);
        int64_t f = it == token_freq.end() ? 0 : it->second;
        if (best_freq < 0 || f < best_freq) {
            best_freq = f;
            best = i;
        }
    }
    return best;
}

/// Boundary-aware whole-word / whole-phrase matcher over one term set.
///
/// Single-token terms are matched by token equality. Multi-word terms go
/// through two stages: candidate positions are looked up via the rare-token
/// index, then the full token sequence is verified for consecutiveness.
/// Overlapping occurrences of the same term are counted leftmost
/// non-overlapping; distinct terms are counted independently of each other.
class TermMatcher {
  public:
    TermMatcher() = default;

    /// terms must already be normalized (lowercase, single-spaced).
    /// token_freq optionally supplies corpus token frequencies for
    /// rare-token key selection; without it ties select the first token.
    explicit TermMatcher(const std::set<std::string>& terms,
                         const std::unordered_map<std::string, int64_t>& token_freq = {}) {
        for (const auto& term : terms) add_term(term, token_freq);
    }

    void add_term(const std::string& term,
                  const std::unordered_map<std::string, int64_t>& token_freq = {}) {
        std::vector<std::string> toks;
        for (auto& ts : tokenize(term)) toks.push_back(std::move(ts.token));
        if (toks.empty()) throw std::invalid_argument("term has no tokens: '" + term + "'");
        if (toks.size() == 1) {
            // distinct term strings may share a token sequence (punctuation
            // differences); each is counted independently
            single_[toks[0]].push_back(term);
        } else {
            size_t id = phrases_.size();
            size_t anchor = rare_token_offset(toks, token_freq);
            anchors_[toks[anchor]].push_back(PhraseRef{id, anchor});
            phrases_.push_back(Phrase{term, std::move(toks)});
        }
    }

    size_t term_count() const {
        size_t n = phrases_.size();
        for (const auto& [_, terms] : single_) n += terms.size();
        return n;
    }

    /// Multi-word phrases reachable from each index key; used by the
    /// dictionary's rare_token_index and by tests of its invariant.
    std::map<std::string, std::vector<std::string>> anchor_index() const {
        std::map<std::string, std::vector<std::string>> out;
        for (const auto& [tok, refs] : anchors_) {
            auto& v = out[tok];
            for (const auto& r : refs) v.push_back(phrases_[r.id].term);
        }
        return out;
    }

    TermCounts count_occurrences(std::string_view text) const {
        TermCounts counts;
        scan(tokenize(text), [&](const std::string& term, size_t, size_t) {
            ++counts.per_term[term];
            ++counts.total;
        });
        return counts;
    }

    TermCounts count_tokens(const std::vector<TokenSpan>& tokens) const {
        TermCounts counts;
        scan(tokens, [&](const std::string& term, size_t, size_t) {
            ++counts.per_term[term];
            ++counts.total;
        });
        return counts;
    }

    std::set<std::string> term_presence(std::string_view text) const {
        std::set<std::string> present;
        scan(tokenize(text), [&](const std::string& term, size_t, size_t) { present.insert(term); });
        return present;
    }

    /// All counted occurrences with character spans, in text order.
    std::vector<Occurrence> find_occurrences(std::string_view text) const {
        std::vector<Occurrence> out;
        scan(tokenize(text), [&](const std::string& term, size_t start, size_t end) {
            out.push_back(Occurrence{term, start, end});
        });
        std::sort(out.begin(), out.end(), [](const Occurrence& a, const Occurrence& b) {
            if (a.start != b.start) return a.start < b.start;
            if (a.end != b.end) return a.end < b.end;
            return a.term < b.term;
        });
        return out;
    }

  private:
    struct Phrase {
        std::string term;
        std::vector<std::string> tokens;
    };
    struct PhraseRef {
        size_t id;
        size_t anchor;  // position of the index key within the phrase
    };

    template <typename Emit>
    void scan(const std::vector<TokenSpan>& tokens, Emit&& emit) const {
        const size_t n = tokens.size();
        // Single-token terms: consecutive occurrences cannot overlap.
        for (size_t i = 0; i < n; ++i) {
            auto it = single_.find(tokens[i].token);
            if (it == single_.end()) continue;
            for (const auto& term : it->second) emit(term, tokens[i].start, tokens[i].end);
        }
        if (anchors_.empty()) return;
        // Stage 1: candidate starts via the rare-token index.
        std::unordered_map<size_t, std::vector<size_t>> starts_by_phrase;
        for (size_t i = 0; i < n; ++i) {
            auto it = anchors_.find(tokens[i].token);
            if (it == anchors_.end()) continue;
            for (const PhraseRef& ref : it->second) {
                if (i < ref.anchor) continue;
                size_t start = i - ref.anchor;
                const Phrase& p = phrases_[ref.id];
                if (start + p.tokens.size() > n) continue;
                // Stage 2: verify the full consecutive token sequence.
                bool ok = true;
                for (size_t j = 0; j < p.tokens.size(); ++j) {
                    if (tokens[start + j].token != p.tokens[j]) {
                        ok = false;
                        break;
                    }
                }
                if (ok) starts_by_phrase[ref.id].push_back(start);
            }
        }
        // Leftmost non-overlapping per phrase. Starts arrive in ascending
        // order because each phrase has a single anchor offset.
        for (auto& [id, starts] : starts_by_phrase) {
            const Phrase& p = phrases_[id];
            size_t next_free = 0;
            for (size_t s : starts) {
                if (s >= next_free) {
                    emit(p.term, tokens[s].start, tokens[s + p.tokens.size() - 1].end);
                    next_free = s + p.tokens.size();
                }
            }
        }
    }

    std::unordered_map<std::string, std::vector<std::string>> single_;  // token -> term texts
    std::unordered_map<std::string, std::vector<PhraseRef>> anchors_;
    std::vector<Phrase> phrases_;
};

/// One-shot convenience wrappers.
inline TermCounts count_occurrences(std::string_view text, const std::set<std::string>& terms) {
    return TermMatcher(terms).count_occurrences(text);
}

inline std::set<std::string> term_presence(std::string_view text, const std::set<std::string>& terms) {
    return TermMatcher(terms).term_presence(text);
}

}  // namespace termshift
