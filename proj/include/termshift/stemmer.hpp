#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "termshift/strings.hpp"

namespace termshift {
namespace porter {

// Classic Porter suffix-stripping algorithm (1980 definition), operating
// on lowercase ASCII words. Words of length <= 2 are returned unchanged.

inline bool is_consonant(const std::string& w, size_t i) {
    switch (w[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !is_consonant(w, i - 1);
        default:
            return true;
    }
}

// Number of VC sequences in w[0..len).
inline int measure(const std::string& w, size_t len) {
    int m = 0;
    size_t i = 0;
    while (i < len && is_consonant(w, i)) ++i;
    while (i < len) {
        while (i < len && !is_consonant(w, i)) ++i;
        if (i == len) break;
        ++m;
        while (i < len && is_consonant(w, i)) ++i;
    }
    return m;
}

inline bool contains_vowel(const std::string& w, size_t len) {
    for (size_t i = 0; i < len; ++i)
        if (!is_consonant(w, i)) return true;
    return false;
}

inline bool double_consonant(const std::string& w, size_t len) {
    return len >= 2 && w[len - 1] == w[len - 2] && is_consonant(w, len - 1);
}

// consonant-vowel-consonant ending where the final consonant is not w, x, y.
inline bool cvc(const std::string& w, size_t len) {
    if (len < 3) return false;
    if (!is_consonant(w, len - 3) || is_consonant(w, len - 2) || !is_consonant(w, len - 1))
        return false;
    char c = w[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
}

inline bool ends_with(const std::string& w, std::string_view suffix) {
    return w.size() >= suffix.size() && std::string_view(w).substr(w.size() - suffix.size()) == suffix;
}

// If w ends in `suffix` and measure(stem) satisfies min_m, replace the
// suffix. Returns whether the suffix was present (even if m failed).
inline bool replace_suffix(std::string& w, std::string_view suffix, std::string_view repl, int min_m) {
    if (!ends_with(w, suffix)) return false;
    size_t stem_len = w.size() - suffix.size();
    if (measure(w, stem_len) > min_m) {
        w.resize(stem_len);
        w.append(repl);
    }
    return true;
}

inline void step1a(std::string& w) {
    if (ends_with(w, "sses")) w.resize(w.size() - 2);
    else if (ends_with(w, "ies")) w.resize(w.size() - 2);
    else if (ends_with(w, "ss")) { /* keep */ }
    else if (ends_with(w, "s")) w.resize(w.size() - 1);
}

inline void step1b(std::string& w) {
    if (ends_with(w, "eed")) {
        if (measure(w, w.size() - 3) > 0) w.resize(w.size() - 1);
        return;
    }
    size_t stem_len = 0;
    if (ends_with(w, "ed") && contains_vowel(w, w.size() - 2)) stem_len = w.size() - 2;
    else if (ends_with(w, "ing") && contains_vowel(w, w.size() - 3)) stem_len = w.size() - 3;
    else return;
    w.resize(stem_len);
    if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
        w.push_back('e');
    } else if (double_consonant(w, w.size())) {
        char c = w.back();
        if (c != 'l' && c != 's' && c != 'z') w.pop_back();
    } else if (measure(w, w.size()) == 1 && cvc(w, w.size())) {
        w.push_back('e');
    }
}

inline void step1c(std::string& w) {
    if (ends_with(w, "y") && contains_vowel(w, w.size() - 1)) w.back() = 'i';
}

inline void step2(std::string& w) {
    static const std::pair<std::string_view, std::string_view> rules[] = {
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
    };
    for (const auto& [suf, repl] : rules)
        if (replace_suffix(w, suf, repl, 0)) return;
}

inline void step3(std::string& w) {
    static const std::pair<std::string_view, std::string_view> rules[] = {
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    };
    for (const auto& [suf, repl] : rules)
        if (replace_suffix(w, suf, repl, 0)) return;
}

inline void step4(std::string& w) {
    static const std::string_view suffixes[] = {
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
        "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
    };
    for (std::string_view suf : suffixes) {
        if (!ends_with(w, suf)) continue;
        size_t stem_len = w.size() - suf.size();
        if (suf == "ion" && !(stem_len > 0 && (w[stem_len - 1] == 's' || w[stem_len - 1] == 't')))
            continue;
        if (measure(w, stem_len) > 1) w.resize(stem_len);
        return;
    }
}

inline void step5(std::string& w) {
    if (ends_with(w, "e")) {
        size_t stem_len = w.size() - 1;
        int m = measure(w, stem_len);
        if (m > 1 || (m == 1 && !cvc(w, stem_len))) w.resize(stem_len);
    }
    if (ends_with(w, "ll") && measure(w, w.size()) > 1) w.pop_back();
}

}  // namespace porter

/// Stems one lowercase token in place.
inline std::string porter_stem(std::string word) {
    if (word.size() <= 2) return word;
    porter::step1a(word);
    porter::step1b(word);
    porter::step1c(word);
    porter::step2(word);
    porter::step3(word);
    porter::step4(word);
    porter::step5(word);
    return word;
}

/// Stems each space-separated token of a normalized phrase.
inline std::string porter_stem_phrase(const std::string& phrase) {
    std::vector<std::string> out;
    for (auto& tok : split(phrase, ' ')) out.push_back(porter_stem(std::move(tok)));
    return join(out, " ");
}

}  // namespace termshift
