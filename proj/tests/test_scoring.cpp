#include <doctest.h>

#include "mwp/corpus.hpp"
#include "mwp/scoring.hpp"

using namespace mwp;

namespace {

std::string mini(const char* name) { return std::string(TEST_DATA_DIR) + "/mini/" + name; }

Corpus mini_corpus() {
    Corpus c;
    for (auto& r : parse_corpus(mini("corpus_train.jsonl"), Split::Train)) c.add(std::move(r));
    for (auto& r : parse_corpus(mini("corpus_test.jsonl"), Split::Test)) c.add(std::move(r));
    return c;
}

const SuccessStats& stat_for(const std::vector<SuccessStats>& stats, const std::string& id) {
    for (const auto& s : stats)
        if (s.record_id == id) return s;
    REQUIRE(false);
    static SuccessStats dummy;
    return dummy;
}

}  // namespace

TEST_CASE("extract_final_answer precedence") {
    // marker beats any later/earlier bare number
    CHECK(*extract_final_answer("maybe 12, but #### 7 is final") == Decimal(7, 0));
    // no marker: last number wins
    CHECK(*extract_final_answer("first 3 then 9 at the end") == Decimal(9, 0));
    CHECK(*extract_final_answer("price $4.50 total") == Decimal(45, 1));
    // no number at all
    CHECK(!extract_final_answer("I do not know."));
}

TEST_CASE("score_model on the mini attempt dumps") {
    Corpus corpus = mini_corpus();
    auto attempts = load_attempts(mini("attempts_modelA.jsonl"), corpus);
    auto stats = score_model(corpus, attempts, "modelA");
    REQUIRE(stats.size() == 12);

    CHECK(stat_for(stats, "mini-0").n_attempts == 5);
    CHECK(stat_for(stats, "mini-0").n_correct == 5);
    CHECK(stat_for(stats, "mini-0").label == Label::Always);
    CHECK(stat_for(stats, "mini-0").success_rate == 1.0);

    CHECK(stat_for(stats, "mini-1").n_correct == 0);
    CHECK(stat_for(stats, "mini-1").label == Label::Never);

    CHECK(stat_for(stats, "mini-2").n_correct == 3);
    CHECK(stat_for(stats, "mini-2").label == Label::Mixed);
    CHECK(stat_for(stats, "mini-2").success_rate == doctest::Approx(0.6));

    // mini-3 seed 4 has no number at all in the response: still a failure
    CHECK(stat_for(stats, "mini-3").n_attempts == 5);
    CHECK(stat_for(stats, "mini-3").n_correct == 0);
}

TEST_CASE("score_model warns for records with no attempts") {
    Corpus corpus = mini_corpus();
    std::vector<AttemptRecord> one = {{"mini-0", "m", 0, "#### 7"}};
    std::vector<std::string> warnings;
    auto stats = score_model(corpus, one, "m", &warnings);
    REQUIRE(stats.size() == 1);
    CHECK(stats[0].record_id == "mini-0");
    CHECK(warnings.size() == 11);  // the other records are skipped with warnings
}

TEST_CASE("intersect_labels") {
    Corpus corpus = mini_corpus();
    auto a = score_model(corpus, load_attempts(mini("attempts_modelA.jsonl"), corpus), "modelA");
    auto b = score_model(corpus, load_attempts(mini("attempts_modelB.jsonl"), corpus), "modelB");
    auto inter = intersect_labels({a, b});

    // Always for both models: mini-0, mini-t0, mini-t3
    CHECK(inter.at("mini-0") == Label::Always);
    CHECK(inter.at("mini-t0") == Label::Always);
    CHECK(inter.at("mini-t3") == Label::Always);
    // Never for both: mini-3
    CHECK(inter.at("mini-3") == Label::Never);
    // disagreements and Mixed records are excluded
    CHECK(inter.count("mini-1") == 0);  // A Never, B Always
    CHECK(inter.count("mini-2") == 0);  // A Mixed
    CHECK(inter.size() == 4);
}

TEST_CASE("build_split separates train and test records") {
    Corpus corpus = mini_corpus();
    auto a = score_model(corpus, load_attempts(mini("attempts_modelA.jsonl"), corpus), "modelA");
    auto split = build_split(corpus, single_model_classes(a), "modelA");
    CHECK(split.model_id == "modelA");
    // modelA train: Always mini-0/4/6, Never mini-1/3; Mixed mini-2/5/7 excluded
    CHECK(split.train_classes.size() == 5);
    CHECK(split.train_classes.at("mini-0") == Label::Always);
    CHECK(split.train_classes.at("mini-3") == Label::Never);
    CHECK(split.train_classes.count("mini-2") == 0);
    // modelA test: Always mini-t0/t3, Never mini-t1; Mixed mini-t2 excluded
    CHECK(split.test_classes.size() == 3);
    CHECK(split.test_classes.at("mini-t1") == Label::Never);
}

TEST_CASE("overlap_counts") {
    Corpus corpus = mini_corpus();
    auto a = score_model(corpus, load_attempts(mini("attempts_modelA.jsonl"), corpus), "modelA");
    auto b = score_model(corpus, load_attempts(mini("attempts_modelB.jsonl"), corpus), "modelB");
    OverlapCounts oc = overlap_counts({a, b});

    // Always universes: A = {0,4,6,t0,t3}, B = {0,1,5,7,t0,t3}
    CHECK(oc.always_totals.at("modelA") == 5);
    CHECK(oc.always_totals.at("modelB") == 6);
    CHECK(oc.always.at({"modelA", "modelB"}) == 3);  // 0, t0, t3
    CHECK(oc.always.at({"modelA"}) == 2);            // 4, 6
    CHECK(oc.always.at({"modelB"}) == 3);            // 1, 5, 7

    // Never universes: A = {1,3,t1}, B = {2,3,6,t2}
    CHECK(oc.never_totals.at("modelA") == 3);
    CHECK(oc.never_totals.at("modelB") == 4);
    CHECK(oc.never.at({"modelA", "modelB"}) == 1);  // mini-3
    CHECK(oc.never.at({"modelA"}) == 2);            // 1, t1
    CHECK(oc.never.at({"modelB"}) == 3);            // 2, 6, t2
}
