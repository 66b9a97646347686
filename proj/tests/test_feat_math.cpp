#include <doctest.h>

#include <cmath>
#include <map>

#include "mwp/features.hpp"
#include "mwp/pipeline.hpp"

using namespace mwp;

namespace {

std::string mini(const char* name) { return std::string(TEST_DATA_DIR) + "/mini/" + name; }

}  // namespace

TEST_CASE("extract_word_args") {
    CHECK(extract_word_args("three times as many") == 1);
    CHECK(extract_word_args("half as much, then half again") == 2);
    CHECK(extract_word_args("twenty-two students") == 1);  // compound counts once
    CHECK(extract_word_args("a dozen eggs and twice the flour") == 2);
    CHECK(extract_word_args("one hundred and seven") == 3);  // merging is per hyphenated word
    CHECK(extract_word_args("nothing numeric here") == 0);
    CHECK(extract_word_args("oneself is not a number") == 0);  // word-boundary matched
}

TEST_CASE("operator_census over equations") {
    SUBCASE("plus-heavy expression") {
        auto eqs = extract_equations("total <<3+4.5+7+1-2.7=12.8>>12.8. #### 12.8");
        OperatorCensus c = operator_census(eqs);
        CHECK(c.counts.plus == 3);
        CHECK(c.counts.minus == 1);
        CHECK(c.op_unique_count == 3);  // max multiplicity of one type
        CHECK(c.op_diversity == doctest::Approx(2.0 / 4.0));
    }
    SUBCASE("single repeated operator") {
        auto eqs = extract_equations("crates (2*12)*3 = 72. #### 72");
        OperatorCensus c = operator_census(eqs);
        CHECK(c.counts.times == 2);
        CHECK(c.counts.paren == 1);  // tracked, but not an arithmetic op
        CHECK(c.op_unique_count == 2);
        CHECK(c.op_diversity == doctest::Approx(0.5));
    }
    SUBCASE("no equations -> all zeros") {
        OperatorCensus c = operator_census({});
        CHECK(c.counts.total() == 0);
        CHECK(c.op_unique_count == 0);
        CHECK(c.op_diversity == 0.0);
    }
}

TEST_CASE("numerical_rank_stats") {
    TokenizerProfile p;
    p.name = "toy";
    p.mode = SegmentationMode::Whitespace;
    p.vocab_rank = {{"7", 100}, {"15", 500}};
    p.max_token_len = 2;

    auto toks = whitespace_tokenize("Mark is 7, Amy is 15");
    CHECK(*numerical_rank_stats(toks, p) == doctest::Approx(300.0));
    CHECK(!numerical_rank_stats(whitespace_tokenize("no digits in text"), p));
    // out-of-vocab numerical token gets the sentinel rank
    CHECK(*numerical_rank_stats(whitespace_tokenize("just 42"), p) == doctest::Approx(3.0));
}

TEST_CASE("parameter_usage") {
    auto eqs = extract_equations("uses <<3+4=7>>7. #### 7");
    std::set<Decimal> q = {Decimal(3, 0), Decimal(4, 0), Decimal(10, 0)};
    CHECK(*parameter_usage(q, eqs) == doctest::Approx(2.0 / 3.0));
    std::set<Decimal> all_used = {Decimal(3, 0), Decimal(4, 0)};
    CHECK(*parameter_usage(all_used, eqs) == doctest::Approx(1.0));
    CHECK(!parameter_usage({}, eqs));  // no question args -> missing
}

TEST_CASE("world_knowledge_count") {
    SUBCASE("prior intermediate results are excluded") {
        auto eqs = extract_equations("mins <<2*60=120>>120 then <<120+5=125>>125. #### 125");
        std::set<Decimal> q = {Decimal(2, 0), Decimal(5, 0)};
        CHECK(world_knowledge_count(q, eqs) == 1);  // only the 60
    }
    SUBCASE("all arguments from the question") {
        auto eqs = extract_equations("<<3+4=7>>7. #### 7");
        std::set<Decimal> q = {Decimal(3, 0), Decimal(4, 0)};
        CHECK(world_knowledge_count(q, eqs) == 0);
    }
    SUBCASE("appending an equation over prior results changes nothing") {
        std::string base = "<<2*60=120>>120. #### 120";
        std::string more = "<<2*60=120>>120 and <<120-120=0>>0. #### 0";
        std::set<Decimal> q = {Decimal(2, 0)};
        CHECK(world_knowledge_count(q, extract_equations(base)) ==
              world_knowledge_count(q, extract_equations(more)));
    }
}

TEST_CASE("feature schema shape") {
    auto names = feature_names();
    REQUIRE(names.size() == 23);
    CHECK(names[0] == "Qx_token_length");
    CHECK(names[3] == "Qx_flesch_kinkaid_grade");
    CHECK(names[13] == "Gx_op'+'_count");
    CHECK(names[22] == "Gx_world_knowledge");
    CHECK(feature_type("Gx_world_knowledge") == FeatureType::W);
    CHECK(feature_type("Qx_np_count") == FeatureType::L);
    CHECK(feature_type("Gx_parameter_usage") == FeatureType::M);
    int w = 0;
    for (const auto& n : names)
        if (feature_type(n) == FeatureType::W) ++w;
    CHECK(w == 1);
}

// The shipped expected_features.csv is produced by an independent
// reimplementation of every feature definition; the extractor must agree
// exactly on counts and to 1e-9 on ratio features.
TEST_CASE("mini-corpus features match the frozen oracle table") {
    RunConfig cfg;
    cfg.train_corpus = mini("corpus_train.jsonl");
    cfg.test_corpus = mini("corpus_test.jsonl");
    cfg.sidecar = mini("sidecar.jsonl");
    cfg.tokenizer_profile = mini("profile.json");
    cfg.segmentation_mode = SegmentationMode::Whitespace;
    LoadedInputs in = load_inputs(cfg);

    auto expected_rows = read_feature_csv(mini("expected_features.csv"));
    std::map<std::string, FeatureVector> expected;
    for (auto& r : expected_rows) expected[r.record_id] = r;
    REQUIRE(expected.size() == 12);

    auto schema = feature_schema();
    for (const auto& rec : in.corpus.records()) {
        auto it = in.sidecars.find(rec.id);
        const AnnotationSidecar* sc = it == in.sidecars.end() ? nullptr : &it->second;
        FeatureVector got = extract_features(rec, in.profile, sc);
        REQUIRE(expected.count(rec.id) == 1);
        const FeatureVector& want = expected.at(rec.id);
        for (size_t i = 0; i < 23; ++i) {
            INFO("record ", rec.id, " feature ", schema[i].name);
            if (std::isnan(want.values[i])) {
                CHECK(std::isnan(got.values[i]));
            } else if (schema[i].integral) {
                CHECK(got.values[i] == want.values[i]);
            } else {
                CHECK(got.values[i] == doctest::Approx(want.values[i]).epsilon(1e-9));
            }
        }
    }
}
