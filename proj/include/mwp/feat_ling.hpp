#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mwp/corpus.hpp"
#include "mwp/tree.hpp"

namespace mwp {

struct LinguisticFeatures {
    std::optional<double> token_length;
    std::optional<double> sentence_length;
    std::optional<double> word_length;
    std::optional<double> flesch_kincaid_grade;
    std::optional<double> mean_word_rank;
    std::optional<double> constituency_tree_depth;
    std::optional<double> np_count;
    std::optional<double> prp_count;
    std::optional<double> coref_count;
};

namespace detail {

inline const std::set<std::string>& abbreviations() {
    static const std::set<std::string> abbr = {"Mr",  "Mrs", "Ms",  "Dr", "Prof", "St",
                                              "Mt",  "etc", "vs",  "Jr", "Sr",   "no",
                                              "No",  "approx", "i.e", "e.g"};
    return abbr;
}

inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

}  // namespace detail

// Words = maximal non-whitespace runs.
inline std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) words.emplace_back(text.substr(start, i - start));
    }
    return words;
}

// Sentence boundary rule: terminal punctuation . ! ? followed by whitespace
// and a capital letter (or end of text), with guards for decimal numbers and
// common abbreviations.
inline int count_sentences(std::string_view text) {
    int sentences = 0;
    bool in_sentence = false;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (!std::isspace(static_cast<unsigned char>(c))) in_sentence = true;
        if (c != '.' && c != '!' && c != '?') continue;
        if (c == '.') {
            // decimal guard: digit.digit
            if (i > 0 && i + 1 < text.size() && detail::is_digit(text[i - 1]) &&
                detail::is_digit(text[i + 1]))
                continue;
            // abbreviation guard: word before the period is a known abbreviation
            size_t ws = i;
            while (ws > 0 && (std::isalpha(static_cast<unsigned char>(text[ws - 1])) || text[ws - 1] == '.'))
                --ws;
            std::string before(text.substr(ws, i - ws));
            if (detail::abbreviations().count(before)) continue;
        }
        // collapse runs of terminal punctuation ("?!" is one boundary)
        size_t j = i;
        while (j + 1 < text.size() && (text[j + 1] == '.' || text[j + 1] == '!' || text[j + 1] == '?' ||
                                       text[j + 1] == '"' || text[j + 1] == '\''))
            ++j;
        // boundary iff end of text or whitespace followed by a capital
        size_t k = j + 1;
        while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
        if (k == text.size()) {
            ++sentences;
            in_sentence = false;
            i = j;
        } else if (k > j + 1 && (detail::is_upper(text[k]) || detail::is_digit(text[k]) ||
                                 text[k] == '"' || text[k] == '$')) {
            ++sentences;
            in_sentence = false;
            i = j;
        }
    }
    if (in_sentence) ++sentences;  // trailing text without terminal punctuation
    return sentences == 0 ? 1 : sentences;
}

struct UnitCounts {
    int sentence_length = 0;
    int word_length = 0;
};

inline UnitCounts count_units(std::string_view question_text) {
    if (question_text.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw DataError("count_units: empty text");
    UnitCounts u;
    u.word_length = static_cast<int>(split_words(question_text).size());
    u.sentence_length = count_sentences(question_text);
    return u;
}

// Vowel-group heuristic: maximal groups of a/e/i/o/u/y, minus one for a
// terminal silent 'e' (kept for "-le" after a consonant), floor 1.
inline int count_syllables(std::string_view word) {
    auto is_vowel = [](char c) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
    };
    auto is_letter = [](char c) { return std::isalpha(static_cast<unsigned char>(c)); };

    std::string letters;
    for (char c : word)
        if (is_letter(c)) letters += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (letters.empty()) return 1;

    int groups = 0;
    bool prev_vowel = false;
    for (char c : letters) {
        bool v = is_vowel(c);
        if (v && !prev_vowel) ++groups;
        prev_vowel = v;
    }
    size_t n = letters.size();
    if (n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2])) {
        bool le_after_consonant = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if (!le_after_consonant) --groups;
    }
    return groups < 1 ? 1 : groups;
}

// FKGL: 0.39 * words/sentences + 11.8 * syllables/words - 15.59
inline std::optional<double> readability_grade(std::string_view question_text) {
    auto words = split_words(question_text);
    if (words.empty()) return std::nullopt;
    int sentences = count_sentences(question_text);
    long long syllables = 0;
    for (const auto& w : words) syllables += count_syllables(w);
    double wps = static_cast<double>(words.size()) / sentences;
    double spw = static_cast<double>(syllables) / words.size();
    return 0.39 * wps + 11.8 * spw - 15.59;
}

struct SyntacticStats {
    std::optional<double> tree_depth;
    std::optional<int> np_count;
    std::optional<int> prp_count;
};

// Depth = mean per-sentence tree depth; np_count = nodes labeled NP;
// prp_count = preterminals tagged IN (the preposition tag).
inline SyntacticStats syntactic_stats(const std::vector<std::string>& trees) {
    if (trees.empty()) return {};
    double depth_sum = 0;
    int np = 0, prp = 0;
    for (const auto& ts : trees) {
        ParseTree t = parse_bracketed_tree(ts);
        depth_sum += tree_depth(t);
        np += count_label(t, "NP");
        prp += count_preterminal_label(t, "IN");
    }
    return {depth_sum / trees.size(), np, prp};
}

// Whitespace+punctuation tokenization: letter runs and number runs (digits
// with internal '.' or ',' between digits) are tokens, every other
// non-space character is its own token.
inline std::vector<std::string> whitespace_tokenize(std::string_view text) {
    std::vector<std::string> toks;
    size_t i = 0;
    const size_t n = text.size();
    auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
    while (i < n) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        if (is_alpha(c)) {
            size_t start = i;
            while (i < n && (is_alpha(text[i]) || text[i] == '\'')) ++i;
            toks.emplace_back(text.substr(start, i - start));
        } else if (detail::is_digit(c)) {
            size_t start = i;
            while (i < n && (detail::is_digit(text[i]) ||
                             ((text[i] == '.' || text[i] == ',') && i + 1 < n &&
                              detail::is_digit(text[i + 1]) && i > start &&
                              detail::is_digit(text[i - 1]))))
                ++i;
            toks.emplace_back(text.substr(start, i - start));
        } else {
            toks.emplace_back(1, c);
            ++i;
        }
    }
    return toks;
}

// Greedy longest-match segmentation over the profile vocabulary; characters
// with no vocab match become single-char out-of-vocab tokens.
inline std::vector<std::string> greedy_subword_tokenize(std::string_view text,
                                                        const TokenizerProfile& profile) {
    std::vector<std::string> toks;
    size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) { ++i; continue; }
        size_t best = 0;
        size_t cap = std::min(profile.max_token_len, text.size() - i);
        for (size_t len = cap; len >= 1; --len) {
            if (profile.vocab_rank.count(std::string(text.substr(i, len)))) { best = len; break; }
        }
        if (best == 0) best = 1;
        toks.emplace_back(text.substr(i, best));
        i += best;
    }
    return toks;
}

inline std::vector<std::string> tokenize(std::string_view text, const TokenizerProfile& profile,
                                         const AnnotationSidecar* sidecar) {
    if (sidecar) {
        auto it = sidecar->tokenizations.find(profile.name);
        if (it != sidecar->tokenizations.end()) return it->second;
    }
    if (profile.mode == SegmentationMode::Whitespace) return whitespace_tokenize(text);
    return greedy_subword_tokenize(text, profile);
}

struct TokenStats {
    std::optional<int> token_length;
    std::optional<double> mean_word_rank;
};

inline TokenStats tokenize_and_rank(std::string_view text, const TokenizerProfile& profile,
                                    const AnnotationSidecar* sidecar) {
    auto toks = tokenize(text, profile, sidecar);
    if (toks.empty()) return {};
    double rank_sum = 0;
    for (const auto& t : toks) {
        auto it = profile.vocab_rank.find(t);
        rank_sum += it == profile.vocab_rank.end() ? profile.oov_rank() : it->second;
    }
    return {static_cast<int>(toks.size()), rank_sum / toks.size()};
}

// Fallback pronoun count: anaphoric pronouns appearing after the first
// non-pronoun token. Approximate; the sidecar value always wins.
inline int approximate_coref_count(std::string_view text) {
    static const std::set<std::string> pronouns = {"he",  "she", "it",   "they",  "him",  "her",
                                                   "them", "his", "hers", "its",   "their", "theirs"};
    auto lower_word = [](std::string w) {
        std::string out;
        for (char c : w)
            if (std::isalpha(static_cast<unsigned char>(c)))
                out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    };
    int count = 0;
    bool seen_non_pronoun = false;
    for (const auto& w : split_words(text)) {
        std::string lw = lower_word(w);
        if (lw.empty()) continue;
        if (pronouns.count(lw)) {
            if (seen_non_pronoun) ++count;
        } else {
            seen_non_pronoun = true;
        }
    }
    return count;
}

inline std::optional<int> coref_feature(const AnnotationSidecar* sidecar, std::string_view text,
                                        bool fallback_enabled) {
    if (sidecar && sidecar->coref_mention_count) return *sidecar->coref_mention_count;
    if (fallback_enabled) return approximate_coref_count(text);
    return std::nullopt;
}

inline LinguisticFeatures extract_linguistic(const MwpRecord& rec, const TokenizerProfile& profile,
                                             const AnnotationSidecar* sidecar,
                                             bool coref_fallback = false) {
    LinguisticFeatures f;
    UnitCounts u = count_units(rec.question_text);
    f.sentence_length = u.sentence_length;
    f.word_length = u.word_length;
    f.flesch_kincaid_grade = readability_grade(rec.question_text);
    TokenStats ts = tokenize_and_rank(rec.question_text, profile, sidecar);
    if (ts.token_length) f.token_length = *ts.token_length;
    f.mean_word_rank = ts.mean_word_rank;
    if (sidecar && !sidecar->sentence_trees.empty()) {
        SyntacticStats ss = syntactic_stats(sidecar->sentence_trees);
        f.constituency_tree_depth = ss.tree_depth;
        if (ss.np_count) f.np_count = *ss.np_count;
        if (ss.prp_count) f.prp_count = *ss.prp_count;
    }
    if (auto c = coref_feature(sidecar, rec.question_text, coref_fallback)) f.coref_count = *c;
    return f;
}

}  // namespace mwp
