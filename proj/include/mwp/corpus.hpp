#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mwp/jsonl.hpp"
#include "mwp/numeric.hpp"

namespace mwp {

enum class Split { Train, Test };

inline const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

struct MwpRecord {
    std::string id;
    std::string question_text;
    std::string solution_text;
    Decimal gold_answer;
    Split split = Split::Train;
};

struct Equation {
    std::string lhs_text;
    std::vector<Decimal> lhs_args;
    OpCounts operators;
    Decimal rhs_value;
    int ordinal = 0;
};

struct AnnotationSidecar {
    std::string record_id;
    std::vector<std::string> sentence_trees;
    std::optional<int> coref_mention_count;
    std::map<std::string, std::vector<std::string>> tokenizations;  // profile -> tokens
};

enum class SegmentationMode { Sidecar, GreedySubword, Whitespace };

struct TokenizerProfile {
    std::string name;
    std::unordered_map<std::string, int> vocab_rank;  // token -> rank, 1 = most frequent
    SegmentationMode mode = SegmentationMode::GreedySubword;
    size_t max_token_len = 0;

    int oov_rank() const { return static_cast<int>(vocab_rank.size()) + 1; }
};

struct AttemptRecord {
    std::string record_id;
    std::string model_id;
    int seed = 0;
    std::string response_text;
};

class Corpus {
public:
    void add(MwpRecord rec) {
        index_[rec.id] = records_.size();
        records_.push_back(std::move(rec));
    }
    const std::vector<MwpRecord>& records() const { return records_; }
    const MwpRecord* find(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &records_[it->second];
    }
    bool contains(const std::string& id) const { return index_.count(id) > 0; }
    size_t size() const { return records_.size(); }

private:
    std::vector<MwpRecord> records_;
    std::unordered_map<std::string, size_t> index_;
};

// Locates the GSM8K-style final-answer marker "#### <number>" and parses the
// value with currency symbols and comma groups stripped.
inline std::optional<Decimal> parse_final_marker(std::string_view solution) {
    size_t pos = solution.rfind("####");
    if (pos == std::string_view::npos) return std::nullopt;
    std::string_view tail = solution.substr(pos + 4);
    auto nums = scan_numbers(tail);
    if (nums.empty()) return std::nullopt;
    return nums.front().value;
}

inline std::vector<MwpRecord> parse_corpus(const std::string& path, Split split) {
    std::vector<MwpRecord> out;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](size_t lineno, const nlohmann::json& j) {
        auto where = [&] { return path + ":" + std::to_string(lineno); };
        if (!j.contains("question") || !j.contains("answer"))
            throw DataError(where() + ": missing question/answer field");
        MwpRecord rec;
        rec.split = split;
        rec.question_text = j.at("question").get<std::string>();
        rec.solution_text = j.at("answer").get<std::string>();
        if (rec.question_text.empty() || rec.solution_text.empty())
            throw DataError(where() + ": empty question or answer");
        rec.id = j.contains("id") ? j.at("id").get<std::string>()
                                  : std::string(split_name(split)) + "-" + std::to_string(out.size());
        if (!seen.insert(rec.id).second)
            throw DataError(where() + ": duplicate record id '" + rec.id + "'");
        auto gold = parse_final_marker(rec.solution_text);
        if (!gold)
            throw DataError(where() + ": record '" + rec.id + "' has no final-answer marker '#### <number>'");
        rec.gold_answer = *gold;
        out.push_back(std::move(rec));
    });
    return out;
}

namespace detail {

struct EquationSpan {
    size_t begin, end;  // span in the original solution text
    std::string lhs_text;
    std::string rhs_text;
};

// Calculator-annotation spans "<<lhs=rhs>>".
inline std::vector<EquationSpan> annotated_spans(std::string_view text) {
    std::vector<EquationSpan> spans;
    size_t i = 0;
    while ((i = text.find("<<", i)) != std::string_view::npos) {
        size_t close = text.find(">>", i + 2);
        if (close == std::string_view::npos) break;
        std::string_view inner = text.substr(i + 2, close - i - 2);
        size_t eq = inner.rfind('=');
        if (eq != std::string_view::npos) {
            spans.push_back({i, close + 2, std::string(inner.substr(0, eq)),
                             std::string(inner.substr(eq + 1))});
        }
        i = close + 2;
    }
    return spans;
}

inline bool eq_expr_char(char c) {
    return is_digit(c) || c == '.' || c == ',' || c == '+' || c == '-' || c == '*' ||
           c == '/' || c == '(' || c == ')' || c == '%' || c == '$' || c == ' ';
}

}  // namespace detail

// Extracts gold-solution equations: calculator annotations "<<lhs=rhs>>" first,
// then bare "expr = number" spans in the text not covered by an annotation.
// An unparseable right-hand side skips the equation with a warning.
inline std::vector<Equation> extract_equations(std::string_view solution_text,
                                               std::vector<std::string>* warnings = nullptr) {
    struct Candidate {
        size_t begin;
        std::string lhs_text;
        std::string rhs_text;
    };
    std::vector<Candidate> cands;

    auto spans = detail::annotated_spans(solution_text);
    std::string masked(solution_text);
    for (const auto& s : spans) {
        cands.push_back({s.begin, s.lhs_text, s.rhs_text});
        for (size_t i = s.begin; i < s.end; ++i) masked[i] = '#';
    }

    // Fallback: bare "expr = number" with at least one operator and two
    // numbers on the left.
    for (size_t i = 0; i < masked.size(); ++i) {
        if (masked[i] != '=') continue;
        size_t lo = i;
        while (lo > 0 && detail::eq_expr_char(masked[lo - 1])) --lo;
        while (lo < i && masked[lo] == ' ') ++lo;
        std::string lhs = masked.substr(lo, i - lo);
        while (!lhs.empty() && lhs.back() == ' ') lhs.pop_back();
        size_t ro = i + 1;
        while (ro < masked.size() && masked[ro] == ' ') ++ro;
        size_t re = ro;
        while (re < masked.size() && (detail::is_digit(masked[re]) || masked[re] == '.' ||
                                      masked[re] == ',' || masked[re] == '$' ||
                                      (re == ro && masked[re] == '-')))
            ++re;
        std::string rhs = masked.substr(ro, re - ro);
        if (!rhs.empty() && rhs.back() == '.') rhs.pop_back();  // sentence period
        if (scan_operators(lhs).total() == 0) continue;
        if (scan_numbers(lhs).size() < 2) continue;
        if (rhs.empty()) continue;
        cands.push_back({lo, lhs, rhs});
        i = re;
    }

    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) { return a.begin < b.begin; });

    std::vector<Equation> out;
    for (const auto& c : cands) {
        auto rhs_nums = scan_numbers(c.rhs_text);
        std::optional<Decimal> rhs =
            rhs_nums.empty() ? std::nullopt : std::optional<Decimal>(rhs_nums.front().value);
        if (!rhs) {
            if (warnings)
                warnings->push_back("unparseable equation right-hand side: '" + c.rhs_text + "'");
            continue;
        }
        Equation eq;
        eq.lhs_text = c.lhs_text;
        eq.lhs_args = number_values(c.lhs_text);
        eq.operators = scan_operators(c.lhs_text);
        eq.rhs_value = *rhs;
        eq.ordinal = static_cast<int>(out.size());
        if (eq.lhs_args.empty()) {
            if (warnings) warnings->push_back("equation with empty argument list skipped: '" + c.lhs_text + "'");
            continue;
        }
        out.push_back(std::move(eq));
    }
    return out;
}

// Solution text with annotated equation spans blanked out; what remains is the
// "plain text" part of the solution.
inline std::string solution_plain_text(std::string_view solution_text) {
    std::string masked(solution_text);
    for (const auto& s : detail::annotated_spans(solution_text))
        for (size_t i = s.begin; i < s.end; ++i) masked[i] = ' ';
    // the final-answer marker value is part of the plain text per GSM8K layout
    return masked;
}

inline std::vector<AttemptRecord> load_attempts(const std::string& path, const Corpus& corpus) {
    std::vector<AttemptRecord> out;
    std::set<std::tuple<std::string, std::string, int>> keys;
    std::vector<std::string> unknown;
    for_each_jsonl(path, [&](size_t lineno, const nlohmann::json& j) {
        AttemptRecord a;
        a.record_id = j.at("record_id").get<std::string>();
        a.model_id = j.at("model_id").get<std::string>();
        a.seed = j.at("seed").get<int>();
        a.response_text = j.at("response").get<std::string>();
        if (!corpus.contains(a.record_id)) {
            unknown.push_back(a.record_id);
            return;
        }
        if (!keys.insert({a.record_id, a.model_id, a.seed}).second)
            throw DataError(path + ":" + std::to_string(lineno) + ": duplicate attempt key (" +
                            a.record_id + ", " + a.model_id + ", " + std::to_string(a.seed) + ")");
        out.push_back(std::move(a));
    });
    if (!unknown.empty()) {
        std::string msg = path + ": attempts reference unknown record ids:";
        for (const auto& id : unknown) msg += " " + id;
        throw DataError(msg);
    }
    return out;
}

namespace detail {
inline bool tree_balanced(std::string_view s, size_t* bad_offset) {
    int depth = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '(') ++depth;
        else if (s[i] == ')') {
            if (--depth < 0) { *bad_offset = i; return false; }
        }
    }
    if (depth != 0) { *bad_offset = s.size(); return false; }
    return true;
}
}  // namespace detail

inline std::map<std::string, AnnotationSidecar> load_sidecar(const std::string& path,
                                                             const Corpus& corpus) {
    std::map<std::string, AnnotationSidecar> out;
    for_each_jsonl(path, [&](size_t lineno, const nlohmann::json& j) {
        auto where = [&] { return path + ":" + std::to_string(lineno); };
        AnnotationSidecar sc;
        sc.record_id = j.at("record_id").get<std::string>();
        if (!corpus.contains(sc.record_id))
            throw DataError(where() + ": sidecar references unknown record id '" + sc.record_id + "'");
        if (j.contains("trees")) {
            size_t idx = 0;
            for (const auto& t : j.at("trees")) {
                std::string tree = t.get<std::string>();
                size_t off = 0;
                if (!detail::tree_balanced(tree, &off))
                    throw DataError(where() + ": unbalanced tree for record '" + sc.record_id +
                                    "' sentence " + std::to_string(idx));
                sc.sentence_trees.push_back(std::move(tree));
                ++idx;
            }
        }
        if (j.contains("coref_mention_count") && !j.at("coref_mention_count").is_null()) {
            int c = j.at("coref_mention_count").get<int>();
            if (c < 0)
                throw DataError(where() + ": negative coref count for record '" + sc.record_id + "'");
            sc.coref_mention_count = c;
        }
        if (j.contains("tokens")) {
            for (auto it = j.at("tokens").begin(); it != j.at("tokens").end(); ++it)
                sc.tokenizations[it.key()] = it.value().get<std::vector<std::string>>();
        }
        out[sc.record_id] = std::move(sc);
    });
    return out;
}

inline TokenizerProfile load_tokenizer_profile(const std::string& path, SegmentationMode mode) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open tokenizer profile: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError(path + ": malformed tokenizer profile JSON");
    TokenizerProfile p;
    p.name = j.at("name").get<std::string>();
    p.mode = mode;
    int rank = 1;
    for (const auto& tok : j.at("vocab")) {
        std::string t = tok.get<std::string>();
        if (!p.vocab_rank.emplace(t, rank).second)
            throw DataError(path + ": duplicate vocab token '" + t + "'");
        p.max_token_len = std::max(p.max_token_len, t.size());
        ++rank;
    }
    return p;
}

inline void save_corpus(const std::string& path, const std::vector<MwpRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    for (const auto& r : records) {
        nlohmann::json j{{"id", r.id}, {"question", r.question_text}, {"answer", r.solution_text}};
        out << j.dump() << "\n";
    }
}

}  // namespace mwp
