#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mwp/corpus.hpp"
#include "mwp/numeric.hpp"

namespace mwp {

enum class Label { Always, Never, Mixed };

inline const char* label_name(Label l) {
    switch (l) {
        case Label::Always: return "Always";
        case Label::Never: return "Never";
        default: return "Mixed";
    }
}

struct SuccessStats {
    std::string record_id;
    std::string model_id;
    int n_attempts = 0;
    int n_correct = 0;
    double success_rate = 0.0;
    Label label = Label::Mixed;
};

struct LabelSplit {
    std::string model_id;  // a model id or "intersection"
    // record id -> class (Always or Never; Mixed records are excluded)
    std::map<std::string, Label> train_classes;
    std::map<std::string, Label> test_classes;
};

// Final-answer extraction: the "#### <number>" marker wins if present,
// otherwise the last numeric quantity in the response.
inline std::optional<Decimal> extract_final_answer(std::string_view response_text) {
    if (auto marker = parse_final_marker(response_text)) return marker;
    auto nums = scan_numbers(response_text);
    if (nums.empty()) return std::nullopt;
    return nums.back().value;
}

inline std::vector<SuccessStats> score_model(const Corpus& corpus,
                                             const std::vector<AttemptRecord>& attempts,
                                             const std::string& model_id,
                                             std::vector<std::string>* warnings = nullptr) {
    std::map<std::string, std::pair<int, int>> per_record;  // id -> (attempts, correct)
    for (const auto& a : attempts) {
        if (a.model_id != model_id) continue;
        const MwpRecord* rec = corpus.find(a.record_id);
        if (!rec) continue;
        auto& [n, c] = per_record[a.record_id];
        ++n;
        auto ans = extract_final_answer(a.response_text);
        if (ans && answers_match(*ans, rec->gold_answer)) ++c;
    }
    std::vector<SuccessStats> out;
    for (const auto& rec : corpus.records()) {
        auto it = per_record.find(rec.id);
        if (it == per_record.end()) {
            if (warnings)
                warnings->push_back("record '" + rec.id + "' has no attempts for model '" +
                                    model_id + "'; skipped");
            continue;
        }
        SuccessStats s;
        s.record_id = rec.id;
        s.model_id = model_id;
        s.n_attempts = it->second.first;
        s.n_correct = it->second.second;
        s.success_rate = static_cast<double>(s.n_correct) / s.n_attempts;
        s.label = s.n_correct == s.n_attempts ? Label::Always
                  : s.n_correct == 0          ? Label::Never
                                              : Label::Mixed;
        out.push_back(std::move(s));
    }
    return out;
}

// Intersection split: a record is Always iff Always for every model, Never iff
// Never for every model; anything else is excluded.
inline std::map<std::string, Label> intersect_labels(
    const std::vector<std::vector<SuccessStats>>& stats_per_model) {
    std::map<std::string, std::vector<Label>> by_record;
    for (const auto& stats : stats_per_model)
        for (const auto& s : stats) by_record[s.record_id].push_back(s.label);
    std::map<std::string, Label> out;
    const size_t n_models = stats_per_model.size();
    for (const auto& [id, labels] : by_record) {
        if (labels.size() != n_models) continue;  // not scored by every model
        bool all_always = std::all_of(labels.begin(), labels.end(),
                                      [](Label l) { return l == Label::Always; });
        bool all_never = std::all_of(labels.begin(), labels.end(),
                                     [](Label l) { return l == Label::Never; });
        if (all_always) out[id] = Label::Always;
        else if (all_never) out[id] = Label::Never;
    }
    return out;
}

inline LabelSplit build_split(const Corpus& corpus, const std::map<std::string, Label>& classes,
                              const std::string& model_id) {
    LabelSplit split;
    split.model_id = model_id;
    for (const auto& [id, label] : classes) {
        const MwpRecord* rec = corpus.find(id);
        if (!rec) continue;
        (rec->split == Split::Train ? split.train_classes : split.test_classes)[id] = label;
    }
    return split;
}

inline std::map<std::string, Label> single_model_classes(const std::vector<SuccessStats>& stats) {
    std::map<std::string, Label> out;
    for (const auto& s : stats)
        if (s.label != Label::Mixed) out[s.record_id] = s.label;
    return out;
}

struct OverlapCounts {
    // subset of model ids (sorted) -> number of records whose Always (resp.
    // Never) model set is exactly that subset
    std::map<std::set<std::string>, int> always;
    std::map<std::set<std::string>, int> never;
    std::map<std::string, int> always_totals;  // per-model universe sizes
    std::map<std::string, int> never_totals;
};

inline OverlapCounts overlap_counts(const std::vector<std::vector<SuccessStats>>& stats_per_model) {
    OverlapCounts out;
    std::map<std::string, std::set<std::string>> always_sets, never_sets;  // record -> models
    for (const auto& stats : stats_per_model) {
        for (const auto& s : stats) {
            if (s.label == Label::Always) {
                always_sets[s.record_id].insert(s.model_id);
                ++out.always_totals[s.model_id];
            } else if (s.label == Label::Never) {
                never_sets[s.record_id].insert(s.model_id);
                ++out.never_totals[s.model_id];
            }
        }
    }
    for (const auto& [id, models] : always_sets) ++out.always[models];
    for (const auto& [id, models] : never_sets) ++out.never[models];
    return out;
}

}  // namespace mwp
