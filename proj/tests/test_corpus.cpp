#include "avifind/corpus.hpp"
#include "avifind/error.hpp"

#include "support/test_util.hpp"

#include "doctest.h"

#include <fstream>
#include <set>

using namespace avifind;
using namespace avifind::test;

namespace {

void touch_png(const std::filesystem::path& p) {
    RasterImage img(4, 4, Rgb{1, 2, 3});
    write_png(p, img);
}

}  // namespace

TEST_CASE("scan_corpus walks class directories lexicographically") {
    TempDir tmp("corpus");
    std::filesystem::create_directories(tmp.path() / "sparrow");
    std::filesystem::create_directories(tmp.path() / "crow");
    touch_png(tmp.path() / "crow" / "b.png");
    touch_png(tmp.path() / "crow" / "a.png");
    touch_png(tmp.path() / "crow" / "c.jpg");
    touch_png(tmp.path() / "sparrow" / "1.png");
    touch_png(tmp.path() / "sparrow" / "2.png");
    touch_png(tmp.path() / "sparrow" / "3.png");
    // non-image files are ignored
    std::ofstream(tmp.path() / "crow" / "notes.txt") << "x";

    const CorpusManifest m = scan_corpus(tmp.path(), std::nullopt, 0);
    REQUIRE(m.entries.size() == 6);
    CHECK(m.entries[0].image_id == "crow/a.png");
    CHECK(m.entries[1].image_id == "crow/b.png");
    CHECK(m.entries[2].image_id == "crow/c.jpg");
    CHECK(m.entries[3].image_id == "sparrow/1.png");
    CHECK(m.entries[0].label == "crow");
    CHECK(m.entries[3].label == "sparrow");
}

TEST_CASE("scan_corpus honors the CUB images/ layout and flat names") {
    TempDir tmp("corpus_cub");
    std::filesystem::create_directories(tmp.path() / "images" / "001.Black_footed_Albatross");
    touch_png(tmp.path() / "images" / "001.Black_footed_Albatross" / "img1.jpg");
    touch_png(tmp.path() / "images" / "001.Black_footed_Albatross" / "img2.jpg");
    const CorpusManifest m = scan_corpus(tmp.path(), std::nullopt, 0);
    REQUIRE(m.entries.size() == 2);
    CHECK(m.entries[0].label == "001.Black_footed_Albatross");

    TempDir flat("corpus_flat");
    touch_png(flat.path() / "finch__x.png");
    touch_png(flat.path() / "finch__y.png");
    touch_png(flat.path() / "wren__z.png");
    const CorpusManifest fm = scan_corpus(flat.path(), std::nullopt, 0);
    REQUIRE(fm.entries.size() == 3);
    CHECK(fm.entries[0].image_id == "finch/x.png");
    CHECK(fm.entries[2].label == "wren");
}

TEST_CASE("scan_corpus per-class limit selects a seeded subset") {
    TempDir tmp("corpus_limit");
    std::filesystem::create_directories(tmp.path() / "gull");
    std::filesystem::create_directories(tmp.path() / "tern");
    for (int i = 0; i < 60; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "f%02d.png", i);
        touch_png(tmp.path() / "gull" / name);
    }
    touch_png(tmp.path() / "tern" / "only.png");

    const CorpusManifest m = scan_corpus(tmp.path(), 30, 9);
    int gulls = 0, terns = 0;
    for (const auto& e : m.entries) {
        if (e.label == "gull") ++gulls;
        if (e.label == "tern") ++terns;
    }
    CHECK(gulls == 30);
    CHECK(terns == 1);  // below the limit: kept as-is

    // deterministic for a fixed seed, different for another
    const CorpusManifest m2 = scan_corpus(tmp.path(), 30, 9);
    REQUIRE(m.entries.size() == m2.entries.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i)
        CHECK(m.entries[i].image_id == m2.entries[i].image_id);

    const CorpusManifest m3 = scan_corpus(tmp.path(), 30, 10);
    std::set<std::string> a, b;
    for (const auto& e : m.entries) a.insert(e.image_id);
    for (const auto& e : m3.entries) b.insert(e.image_id);
    CHECK(a != b);
}

TEST_CASE("scan_corpus error and warning paths") {
    CHECK_THROWS_AS(scan_corpus("/nonexistent/path/xyz", std::nullopt, 0), IoError);
    try {
        scan_corpus("/nonexistent/path/xyz", std::nullopt, 0);
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/path/xyz") != std::string::npos);
    }

    TempDir tmp("corpus_warn");
    std::filesystem::create_directories(tmp.path() / "empty_class");
    std::filesystem::create_directories(tmp.path() / "full_class");
    touch_png(tmp.path() / "full_class" / "a.png");
    const CorpusManifest m = scan_corpus(tmp.path(), std::nullopt, 0);
    CHECK(m.entries.size() == 1);
    REQUIRE(m.warnings.size() == 1);
    CHECK(m.warnings[0].find("empty_class") != std::string::npos);

    TempDir none("corpus_none");
    std::filesystem::create_directories(none.path() / "still_empty");
    CHECK_THROWS_AS(scan_corpus(none.path(), std::nullopt, 0), IoError);
    CHECK_THROWS_AS(scan_corpus(tmp.path(), 0, 0), std::invalid_argument);
}
