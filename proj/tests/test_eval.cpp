#include "avifind/corpus.hpp"
#include "avifind/eval.hpp"

#include "support/test_util.hpp"

#include "doctest.h"

#include <cmath>

using namespace avifind;
using namespace avifind::test;

TEST_CASE("precision_at counts relevant hits in the prefix") {
    const std::vector<std::string> labels = {"a", "a", "b", "a", "a", "b",
                                             "a", "a", "a", "b"};
    CHECK(precision_at(labels, "a", 10) == doctest::Approx(0.7));
    CHECK(precision_at(std::vector<std::string>(10, "a"), "a", 10) == 1.0);
    CHECK(precision_at(std::vector<std::string>(10, "b"), "a", 10) == 0.0);
    // clamp: divisor is the actual retrieved count
    CHECK(precision_at({"a", "b"}, "a", 10) == doctest::Approx(0.5));
    CHECK_THROWS_AS(precision_at({}, "a", 1), std::invalid_argument);
    CHECK_THROWS_AS(precision_at({"a"}, "a", 0), std::invalid_argument);
}

TEST_CASE("recall_at divides by the database-wide relevant count") {
    std::vector<std::string> labels(40, "b");
    labels[0] = labels[3] = labels[7] = "a";
    CHECK(recall_at(labels, "a", 30, 10) == doctest::Approx(0.1));
    // whole-database cutoff reaches full recall when all relevant are indexed
    CHECK(recall_at(labels, "a", 3, 40) == doctest::Approx(1.0));
    CHECK(recall_at({"b", "a"}, "a", 3, 1) == 0.0);
    CHECK_THROWS_AS(recall_at(labels, "a", 0, 10), std::invalid_argument);

    // recall is non-decreasing in the cutoff
    double prev = 0.0;
    for (int m = 1; m <= 40; ++m) {
        const double r = recall_at(labels, "a", 3, m);
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("pr_curve enumerates every cutoff") {
    SUBCASE("perfect ranking") {
        std::vector<std::string> labels = {"a", "a", "a", "a", "a", "b", "b"};
        const auto curve = pr_curve(labels, "a", 5);
        REQUIRE(curve.size() == 7);
        for (int i = 0; i < 5; ++i) CHECK(curve[i].precision == 1.0);
        CHECK(curve.back().recall == 1.0);
    }
    SUBCASE("all irrelevant") {
        const auto curve = pr_curve({"b", "b", "b"}, "a", 2);
        for (const PRPoint& p : curve) {
            CHECK(p.precision == 0.0);
            CHECK(p.recall == 0.0);
        }
    }
    SUBCASE("interleaved R,I,R") {
        const auto curve = pr_curve({"a", "b", "a"}, "a", 2);
        REQUIRE(curve.size() == 3);
        CHECK(curve[0].precision == 1.0);
        CHECK(curve[0].recall == doctest::Approx(0.5));
        CHECK(curve[1].precision == doctest::Approx(0.5));
        CHECK(curve[1].recall == doctest::Approx(0.5));
        CHECK(curve[2].precision == doctest::Approx(2.0 / 3.0));
        CHECK(curve[2].recall == doctest::Approx(1.0));
        // final recall equals retrieved-relevant / total
        CHECK(curve.back().recall ==
              doctest::Approx(recall_at({"a", "b", "a"}, "a", 2, 3)));
    }
    SUBCASE("recall non-decreasing on a long mixed list") {
        std::vector<std::string> labels;
        for (int i = 0; i < 30; ++i) labels.push_back(i % 3 == 0 ? "a" : "b");
        const auto curve = pr_curve(labels, "a", 10);
        for (std::size_t i = 1; i < curve.size(); ++i)
            CHECK(curve[i].recall >= curve[i - 1].recall);
        for (const PRPoint& p : curve) {
            CHECK(p.precision >= 0.0);
            CHECK(p.precision <= 1.0);
            CHECK(p.recall >= 0.0);
            CHECK(p.recall <= 1.0);
        }
    }
}

TEST_CASE("run_grid produces one cell per (k, n, variant)") {
    TempDir tmp("grid_struct");
    CorpusSpec spec;
    spec.shape_classes = 2;
    spec.color_classes = 1;
    spec.images_per_class = 3;
    spec.image_size = 72;
    generate_synthetic_corpus(tmp.path(), spec);
    const CorpusManifest corpus = scan_corpus(tmp.path(), std::nullopt, 0);
    REQUIRE(corpus.entries.size() == 6);

    PipelineConfig cfg;
    cfg.seed = 1;
    cfg.jobs = 2;
    const EvalReport report = run_grid(corpus, {2}, {50}, {"fused", "shape"}, cfg);
    REQUIRE(report.cells.size() == 2);
    CHECK(report.cells[0].variant == "fused");
    CHECK(report.cells[1].variant == "shape");
    for (const GridCell& c : report.cells) {
        CHECK(c.k == 2);
        CHECK(c.n == 50);
        CHECK(c.error.empty());
        CHECK(c.queries + c.failures == 6);
        if (!std::isnan(c.mean_precision)) {
            CHECK(c.mean_precision >= 0.0);
            CHECK(c.mean_precision <= 1.0);
        }
    }
    // curves: 10 levels per (variant, k)
    CHECK(report.curves.size() == 20);
    for (const CurvePoint& p : report.curves) {
        CHECK(p.precision >= 0.0);
        CHECK(p.precision <= 1.0);
    }

    const std::string csv = report_csv(report);
    CHECK(csv.rfind("k,n,variant,mean_precision_at_10,queries,failures\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows

    const std::string curves = curves_csv(report);
    CHECK(curves.rfind("variant,k,recall,precision\n", 0) == 0);
    CHECK(std::count(curves.begin(), curves.end(), '\n') == 21);
}

TEST_CASE("run_grid: duplicate-image classes give mean precision 1.0") {
    TempDir tmp("grid_dup");
    // two classes, each one image repeated 11 times so P@10 can reach 1.0
    RasterImage a(72, 72, Rgb{12, 12, 12});
    RasterImage b(72, 72, Rgb{12, 12, 12});
    for (int y = 0; y < 72; ++y)
        for (int x = 0; x < 72; ++x) {
            if ((x - 36) * (x - 36) + (y - 36) * (y - 36) <= 15 * 15)
                a.at(x, y) = Rgb{220, 80, 60};
            if (std::abs(x - 36) <= 8 && std::abs(y - 36) <= 20)
                b.at(x, y) = Rgb{70, 90, 230};
        }
    std::filesystem::create_directories(tmp.path() / "one");
    std::filesystem::create_directories(tmp.path() / "two");
    for (int i = 0; i < 11; ++i) {
        write_png(tmp.path() / "one" / ("a" + std::to_string(i) + ".png"), a);
        write_png(tmp.path() / "two" / ("b" + std::to_string(i) + ".png"), b);
    }
    const CorpusManifest corpus = scan_corpus(tmp.path(), std::nullopt, 0);
    REQUIRE(corpus.entries.size() == 22);

    PipelineConfig cfg;
    cfg.seed = 3;
    cfg.jobs = 2;
    const EvalReport report = run_grid(corpus, {3}, {60}, {"fused"}, cfg);
    REQUIRE(report.cells.size() == 1);
    CHECK(report.cells[0].error.empty());
    CHECK(report.cells[0].mean_precision == doctest::Approx(1.0));
}

TEST_CASE("run_grid validates its inputs") {
    CorpusManifest empty;
    PipelineConfig cfg;
    CHECK_THROWS_AS(run_grid(empty, {2}, {50}, {"fused"}, cfg), std::invalid_argument);

    CorpusManifest one_class;
    one_class.entries = {{"a/1", "a", "x.png"}, {"a/2", "a", "y.png"}};
    CHECK_THROWS_AS(run_grid(one_class, {2}, {50}, {"fused"}, cfg),
                    std::invalid_argument);

    CorpusManifest ok;
    ok.entries = {{"a/1", "a", "x.png"}, {"a/2", "a", "y.png"},
                  {"b/1", "b", "z.png"}, {"b/2", "b", "w.png"}};
    CHECK_THROWS_AS(run_grid(ok, {2}, {50}, {"bogus"}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(run_grid(ok, {}, {50}, {"fused"}, cfg), std::invalid_argument);
}

TEST_CASE("run_grid records per-cell failures without aborting the grid") {
    TempDir tmp("grid_fail");
    CorpusSpec spec;
    spec.shape_classes = 2;
    spec.color_classes = 1;
    spec.images_per_class = 2;
    spec.image_size = 72;
    generate_synthetic_corpus(tmp.path(), spec);
    const CorpusManifest corpus = scan_corpus(tmp.path(), std::nullopt, 0);

    PipelineConfig cfg;
    cfg.seed = 2;
    cfg.jobs = 2;
    // absurd k forces the k-means precondition failure in one cell
    const EvalReport report = run_grid(corpus, {100000}, {40}, {"fused"}, cfg);
    REQUIRE(report.cells.size() == 1);
    CHECK(!report.cells[0].error.empty());
    CHECK(std::isnan(report.cells[0].mean_precision));
    const std::string csv = report_csv(report);
    CHECK(csv.find("nan") != std::string::npos);
}
