#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mwp/csv.hpp"
#include "mwp/feat_ling.hpp"
#include "mwp/feat_math.hpp"

namespace mwp {

enum class FeatureType { L, M, W };

struct FeatureDef {
    const char* name;
    FeatureType type;
    char source;  // 'Q', 'G' or 'B'
    bool integral;  // count feature (vs ratio/real)
};

// Canonical 23-feature schema; column order is fixed.
inline const std::array<FeatureDef, 23>& feature_schema() {
    static const std::array<FeatureDef, 23> defs = {{
        {"Qx_token_length", FeatureType::L, 'Q', true},
        {"Qx_sentence_length", FeatureType::L, 'Q', true},
        {"Qx_word_length", FeatureType::L, 'Q', true},
        {"Qx_flesch_kinkaid_grade", FeatureType::L, 'Q', false},
        {"Qx_mean_word_rank", FeatureType::L, 'Q', false},
        {"Qx_constituency_tree_depth", FeatureType::L, 'Q', false},
        {"Qx_np_count", FeatureType::L, 'Q', true},
        {"Qx_prp_count", FeatureType::L, 'Q', true},
        {"Qx_coref_count", FeatureType::L, 'Q', true},
        {"Qx_arg_count", FeatureType::M, 'Q', true},
        {"Qx_word_arg_count", FeatureType::M, 'Q', true},
        {"Qx_mean_numerical_word_rank", FeatureType::M, 'Q', false},
        {"Gx_arg_count", FeatureType::M, 'G', true},
        {"Gx_op'+'_count", FeatureType::M, 'G', true},
        {"Gx_op'-'_count", FeatureType::M, 'G', true},
        {"Gx_op'*'_count", FeatureType::M, 'G', true},
        {"Gx_op'/'_count", FeatureType::M, 'G', true},
        {"Gx_op'('_count", FeatureType::M, 'G', true},
        {"Gx_op_unique_count", FeatureType::M, 'G', true},
        {"Gx_op_diversity", FeatureType::M, 'G', false},
        {"Gx_mean_numerical_word_rank", FeatureType::M, 'G', false},
        {"Gx_parameter_usage", FeatureType::M, 'B', false},
        {"Gx_world_knowledge", FeatureType::W, 'B', true},
    }};
    return defs;
}

inline std::vector<std::string> feature_names() {
    std::vector<std::string> names;
    for (const auto& d : feature_schema()) names.push_back(d.name);
    return names;
}

inline FeatureType feature_type(const std::string& name) {
    for (const auto& d : feature_schema())
        if (name == d.name) return d.type;
    throw std::runtime_error("unknown feature: " + name);
}

// One row of the 23-feature table; NaN marks a missing value.
struct FeatureVector {
    std::string record_id;
    std::array<double, 23> values;

    FeatureVector() { values.fill(std::numeric_limits<double>::quiet_NaN()); }
};

inline FeatureVector extract_features(const MwpRecord& rec, const TokenizerProfile& profile,
                                      const AnnotationSidecar* sidecar,
                                      bool coref_fallback = false,
                                      std::vector<std::string>* warnings = nullptr) {
    FeatureVector fv;
    fv.record_id = rec.id;
    LinguisticFeatures lf = extract_linguistic(rec, profile, sidecar, coref_fallback);
    auto equations = extract_equations(rec.solution_text, warnings);
    MathWorldFeatures mf = extract_math_world(rec, equations, profile, sidecar);

    auto put = [&](int idx, const std::optional<double>& v) {
        if (v) fv.values[idx] = *v;
    };
    put(0, lf.token_length);
    put(1, lf.sentence_length);
    put(2, lf.word_length);
    put(3, lf.flesch_kincaid_grade);
    put(4, lf.mean_word_rank);
    put(5, lf.constituency_tree_depth);
    put(6, lf.np_count);
    put(7, lf.prp_count);
    put(8, lf.coref_count);
    put(9, mf.q_arg_count);
    put(10, mf.q_word_arg_count);
    put(11, mf.q_mean_numerical_word_rank);
    put(12, mf.g_arg_count);
    put(13, mf.op_plus);
    put(14, mf.op_minus);
    put(15, mf.op_times);
    put(16, mf.op_div);
    put(17, mf.op_paren);
    put(18, mf.op_unique_count);
    put(19, mf.op_diversity);
    put(20, mf.g_mean_numerical_word_rank);
    put(21, mf.parameter_usage);
    put(22, mf.world_knowledge);
    return fv;
}

inline void write_feature_csv(const std::string& path, const std::vector<FeatureVector>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << "record_id";
    for (const auto& d : feature_schema()) out << "," << csv_escape(d.name);
    out << "\n";
    for (const auto& r : rows) {
        out << csv_escape(r.record_id);
        for (double v : r.values) out << "," << format_double(v);
        out << "\n";
    }
}

inline std::vector<FeatureVector> read_feature_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    if (t.header.size() != 24 || t.header[0] != "record_id")
        throw DataError(path + ": not a feature table");
    std::vector<FeatureVector> rows;
    for (const auto& fields : t.rows) {
        FeatureVector fv;
        fv.record_id = fields.at(0);
        for (size_t i = 0; i < 23; ++i) {
            const std::string& s = fields.at(i + 1);
            fv.values[i] = s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
        }
        rows.push_back(std::move(fv));
    }
    return rows;
}

}  // namespace mwp
