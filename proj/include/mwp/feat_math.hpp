#pragma once

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mwp/corpus.hpp"
#include "mwp/feat_ling.hpp"
#include "mwp/numeric.hpp"

namespace mwp {

struct MathWorldFeatures {
    std::optional<double> q_arg_count;
    std::optional<double> q_word_arg_count;
    std::optional<double> q_mean_numerical_word_rank;
    std::optional<double> g_arg_count;
    std::optional<double> op_plus, op_minus, op_times, op_div, op_paren;
    std::optional<double> op_unique_count;
    std::optional<double> op_diversity;
    std::optional<double> g_mean_numerical_word_rank;
    std::optional<double> parameter_usage;
    std::optional<double> world_knowledge;
};

// Word-form quantity lexicon. Hyphenated compounds ("twenty-two") merge into
// a single quantity.
inline const std::set<std::string>& word_number_lexicon() {
    static const std::set<std::string> lex = {
        "one",     "two",     "three",    "four",    "five",    "six",     "seven",  "eight",
        "nine",    "ten",     "eleven",   "twelve",  "thirteen", "fourteen", "fifteen",
        "sixteen", "seventeen", "eighteen", "nineteen", "twenty", "thirty",  "forty",
        "fifty",   "sixty",   "seventy",  "eighty",  "ninety",  "hundred", "thousand",
        "million", "half",    "third",    "quarter", "dozen",   "twice",   "thrice"};
    return lex;
}

inline int extract_word_args(std::string_view text) {
    int count = 0;
    for (const auto& w : split_words(text)) {
        // split the word into hyphen-joined alpha parts
        std::vector<std::string> parts;
        std::string cur;
        for (char c : w) {
            if (std::isalpha(static_cast<unsigned char>(c))) {
                cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            } else if (c == '-' && !cur.empty()) {
                parts.push_back(cur);
                cur.clear();
            } else if (!cur.empty()) {
                parts.push_back(cur);
                cur.clear();
            }
        }
        if (!cur.empty()) parts.push_back(cur);
        // a run of adjacent lexicon parts inside one word counts once
        bool in_run = false;
        for (const auto& p : parts) {
            bool hit = word_number_lexicon().count(p) > 0;
            if (hit && !in_run) ++count;
            in_run = hit;
        }
    }
    return count;
}

struct OperatorCensus {
    OpCounts counts;
    int op_unique_count = 0;   // max multiplicity of a single operator type
    double op_diversity = 0.0;  // distinct types / total instances
};

inline OperatorCensus operator_census(const std::vector<Equation>& equations) {
    OperatorCensus c;
    for (const auto& eq : equations) c.counts += eq.operators;
    int total = c.counts.total();
    if (total > 0) {
        c.op_unique_count = c.counts.max_single();
        c.op_diversity = static_cast<double>(c.counts.distinct_types()) / total;
    }
    return c;
}

// Distinct solution-side argument values: plain solution text (annotation
// spans masked) plus every equation left-hand side.
inline std::set<Decimal> solution_args(const MwpRecord& rec, const std::vector<Equation>& equations) {
    std::set<Decimal> args = distinct_values(solution_plain_text(rec.solution_text));
    for (const auto& eq : equations)
        for (const auto& v : eq.lhs_args) args.insert(v);
    return args;
}

// Mean vocab rank over numerical tokens (tokens consisting of digits,
// optionally with '.') of a tokenized text.
inline std::optional<double> numerical_rank_stats(const std::vector<std::string>& tokens,
                                                  const TokenizerProfile& profile) {
    auto is_numerical = [](const std::string& t) {
        bool any_digit = false;
        for (char c : t) {
            if (detail::is_digit(c)) any_digit = true;
            else if (c != '.') return false;
        }
        return any_digit;
    };
    double sum = 0;
    int n = 0;
    for (const auto& t : tokens) {
        if (!is_numerical(t)) continue;
        auto it = profile.vocab_rank.find(t);
        sum += it == profile.vocab_rank.end() ? profile.oov_rank() : it->second;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

inline std::optional<double> parameter_usage(const std::set<Decimal>& question_args,
                                             const std::vector<Equation>& equations) {
    if (question_args.empty()) return std::nullopt;
    int used = 0;
    for (const auto& qa : question_args) {
        bool found = false;
        for (const auto& eq : equations) {
            for (const auto& v : eq.lhs_args)
                if (v == qa) { found = true; break; }
            if (found) break;
        }
        if (found) ++used;
    }
    return static_cast<double>(used) / static_cast<double>(question_args.size());
}

// Distinct LHS argument values neither stated in the question nor produced as
// the right-hand side of an earlier equation.
inline int world_knowledge_count(const std::set<Decimal>& question_args,
                                 const std::vector<Equation>& equations) {
    std::set<Decimal> foreign;
    std::set<Decimal> prior_results;
    for (const auto& eq : equations) {
        for (const auto& v : eq.lhs_args) {
            if (question_args.count(v)) continue;
            if (prior_results.count(v)) continue;
            foreign.insert(v);
        }
        prior_results.insert(eq.rhs_value);
    }
    return static_cast<int>(foreign.size());
}

inline MathWorldFeatures extract_math_world(const MwpRecord& rec,
                                            const std::vector<Equation>& equations,
                                            const TokenizerProfile& profile,
                                            const AnnotationSidecar* sidecar) {
    MathWorldFeatures f;
    std::set<Decimal> q_args = distinct_values(rec.question_text);
    f.q_arg_count = static_cast<double>(q_args.size());
    f.q_word_arg_count = extract_word_args(rec.question_text);

    auto q_tokens = tokenize(rec.question_text, profile, sidecar);
    f.q_mean_numerical_word_rank = numerical_rank_stats(q_tokens, profile);

    f.g_arg_count = static_cast<double>(solution_args(rec, equations).size());

    OperatorCensus census = operator_census(equations);
    f.op_plus = census.counts.plus;
    f.op_minus = census.counts.minus;
    f.op_times = census.counts.times;
    f.op_div = census.counts.divide;
    f.op_paren = census.counts.paren;
    f.op_unique_count = census.op_unique_count;
    f.op_diversity = census.op_diversity;

    // solution-side numerical ranks are restricted to equation LHS texts
    std::vector<std::string> lhs_tokens;
    for (const auto& eq : equations) {
        auto toks = tokenize(eq.lhs_text, profile, nullptr);
        lhs_tokens.insert(lhs_tokens.end(), toks.begin(), toks.end());
    }
    f.g_mean_numerical_word_rank = numerical_rank_stats(lhs_tokens, profile);

    f.parameter_usage = parameter_usage(q_args, equations);
    f.world_knowledge = world_knowledge_count(q_args, equations);
    return f;
}

}  // namespace mwp
