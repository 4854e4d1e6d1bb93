#include "doctest.h"
#include "finedesign/error.hpp"
#include "finedesign/metrics.hpp"
#include "finedesign/rng.hpp"

using namespace finedesign;

namespace {

// Naive tally used as the oracle for confusion().
struct NaiveCounts {
    std::size_t cell[2][3] = {};
};

NaiveCounts naive(const std::vector<Polarity>& truth, const std::vector<ClassId>& pred) {
    NaiveCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        for (int r = 0; r < 2; ++r) {
            for (int k = 0; k < 3; ++k) {
                if (truth[i] == static_cast<Polarity>(r) && pred[i] == static_cast<ClassId>(k)) ++c.cell[r][k];
            }
        }
    }
    return c;
}

// Linear 2-class model: POSITIVE when x0 < 0.
TrainedModel sign_model() {
    TrainedModel m;
    m.params = MlpParams::zeros({1, 2});
    m.params.layers[0].weights = {-1.0, 1.0};
    m.class_names = {"POSITIVE", "NEGATIVE"};
    m.design_name = "Original";
    return m;
}

TrainedModel abstaining_model() {
    TrainedModel m;
    m.params = MlpParams::zeros({1, 3});
    m.params.layers[0].bias = {0.0, 0.0, 5.0};
    m.class_names = {"POSITIVE", "NEGATIVE", "UNCERTAIN"};
    return m;
}

Manifest test_manifest(const std::vector<double>& positives, const std::vector<double>& negatives) {
    Manifest m;
    m.taxonomy = mask_taxonomy();
    m.split = Split::Test;
    m.feature_dim = 1;
    std::size_t id = 0;
    for (double x : positives) m.samples.push_back({"t" + std::to_string(id++), {x}, "clear_positive", Polarity::Positive, {}});
    for (double x : negatives) m.samples.push_back({"t" + std::to_string(id++), {x}, "clear_negative", Polarity::Negative, {}});
    return m;
}

}  // namespace

TEST_CASE("perfect classifier") {
    const EvalReport r = evaluate(sign_model(), test_manifest({-1.0, -2.0, -0.5}, {1.0, 3.0}));
    CHECK(r.far == 0.0);
    CHECK(r.positive_recall == 1.0);
    REQUIRE(r.positive_precision.has_value());
    CHECK(*r.positive_precision == 1.0);
    CHECK(r.confusion.total() == 5);
    CHECK_FALSE(r.confusion.has_uncertain);
    CHECK(r.design_name == "Original");
}

TEST_CASE("total abstention") {
    const EvalReport r = evaluate(abstaining_model(), test_manifest({-1.0, -2.0}, {1.0, 3.0, 0.0}));
    CHECK(r.far == 0.0);
    CHECK(r.positive_recall == 0.0);
    CHECK_FALSE(r.positive_precision.has_value());
    CHECK(r.confusion.has_uncertain);
    CHECK(r.confusion.at(Polarity::Negative, ClassId::Uncertain) == 3);
}

TEST_CASE("false alarm rate over an explicit prediction list") {
    std::vector<Polarity> truth(500, Polarity::Negative);
    std::vector<ClassId> pred(500, ClassId::Negative);
    for (std::size_t i = 0; i < 20; ++i) pred[i * 25] = ClassId::Positive;
    const ConfusionMatrix m = confusion(truth, pred);
    CHECK(m.at(Polarity::Negative, ClassId::Positive) == 20);
    CHECK(m.far() == 0.04);
    CHECK(m.positive_recall() == 0.0);  // no true positives
    CHECK(*m.positive_precision() == 0.0);
}

TEST_CASE("evaluate reports a partial false alarm rate") {
    const EvalReport r = evaluate(sign_model(), test_manifest({-1.0, 0.5}, {-0.25, 1.0, 2.0, 3.0}));
    CHECK(r.far == 0.25);
    CHECK(r.positive_recall == 0.5);
    CHECK(*r.positive_precision == 0.5);
}

TEST_CASE("confusion edge cases") {
    const ConfusionMatrix empty = confusion(std::vector<Polarity>{}, std::vector<ClassId>{});
    CHECK(empty.total() == 0);
    CHECK(empty.far() == 0.0);
    CHECK_FALSE(empty.positive_precision().has_value());

    const ConfusionMatrix one =
        confusion(std::vector<Polarity>{Polarity::Negative}, std::vector<ClassId>{ClassId::Positive});
    CHECK(one.total() == 1);
    CHECK(one.at(Polarity::Negative, ClassId::Positive) == 1);

    CHECK_THROWS_AS(confusion(std::vector<Polarity>{Polarity::Negative}, std::vector<ClassId>{}), ValidationError);
}

TEST_CASE("confusion matches a naive tally on random predictions") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Polarity> truth(1000);
        std::vector<ClassId> pred(1000);
        for (std::size_t i = 0; i < 1000; ++i) {
            truth[i] = static_cast<Polarity>(rng.below(2));
            pred[i] = static_cast<ClassId>(rng.below(3));
        }
        const ConfusionMatrix m = confusion(truth, pred);
        const NaiveCounts oracle = naive(truth, pred);
        for (int r = 0; r < 2; ++r) {
            for (int k = 0; k < 3; ++k) REQUIRE(m.counts[r][k] == oracle.cell[r][k]);
        }
        CHECK(m.total() == 1000);
    }
}

TEST_CASE("property: abstaining never increases false alarms or recall") {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(60);
        std::vector<Polarity> truth(n);
        std::vector<ClassId> pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = static_cast<Polarity>(rng.below(2));
            pred[i] = static_cast<ClassId>(rng.below(3));
        }
        const ConfusionMatrix before = confusion(truth, pred);
        pred[rng.below(n)] = ClassId::Uncertain;
        const ConfusionMatrix after = confusion(truth, pred);
        CHECK(after.at(Polarity::Negative, ClassId::Positive) <= before.at(Polarity::Negative, ClassId::Positive));
        CHECK(after.far() <= before.far());
        CHECK(after.positive_recall() <= before.positive_recall());
        CHECK(after.far() >= 0.0);
        CHECK(after.far() <= 1.0);
    }
}

TEST_CASE("evaluate preconditions") {
    CHECK_THROWS_AS(evaluate(sign_model(), test_manifest({}, {})), ValidationError);

    Manifest train = test_manifest({-1.0}, {1.0});
    train.split = Split::Train;
    CHECK_THROWS_AS(evaluate(sign_model(), train), ValidationError);

    Manifest ambiguous = test_manifest({-1.0}, {1.0});
    ambiguous.samples.push_back({"lq", {0.0}, "low_quality", Polarity::Positive, {}});
    CHECK_THROWS_AS(evaluate(sign_model(), ambiguous), ValidationError);

    Manifest wide = test_manifest({}, {});
    wide.feature_dim = 2;
    wide.samples.push_back({"w", {0.0, 1.0}, "clear_negative", Polarity::Negative, {}});
    CHECK_THROWS_AS(evaluate(sign_model(), wide), ValidationError);
}

TEST_CASE("percent formatting") {
    CHECK(format_percent(0.089) == "8.9%");
    CHECK(format_percent(0.008) == "0.8%");
    CHECK(format_percent(0.0) == "0.0%");
    CHECK(format_percent(1.0) == "100.0%");
}

TEST_CASE("eval report JSON keeps raw ratios and null precision") {
    const EvalReport r = evaluate(abstaining_model(), test_manifest({-1.0}, {1.0}));
    const std::string text = eval_report_to_json(r);
    CHECK(text.find("\"positive_precision\": null") != std::string::npos);
    CHECK(text.find("\"far\": 0.0") != std::string::npos);
    CHECK(text.find("UNCERTAIN") != std::string::npos);
}
