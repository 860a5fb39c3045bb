#include "avifind/error.hpp"
#include "avifind/index.hpp"

#include "support/oracles.hpp"
#include "support/test_util.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

using namespace avifind;
using namespace avifind::test;

namespace {

Vocabulary grid_vocab(int k, int dim) {
    Vocabulary v;
    v.centroids.assign(k, std::vector<double>(dim, 0.0));
    for (int c = 0; c < k; ++c) v.centroids[c][0] = static_cast<double>(c);
    return v;
}

DescriptorSet synthetic_set(const std::vector<std::vector<double>>& vectors,
                            const std::string& id = "img") {
    DescriptorSet ds;
    ds.image_id = id;
    for (const auto& v : vectors) {
        FusedDescriptor d;
        d.vector = v;
        ds.descriptors.push_back(std::move(d));
    }
    return ds;
}

BowHistogram hist_of(std::vector<double> w, std::int64_t raw = 1) {
    BowHistogram h;
    h.weights = std::move(w);
    h.raw_count = raw;
    return h;
}

RasterImage blob_image(int size, int radius, Rgb color, int jitter) {
    RasterImage img(size, size, Rgb{10, 10, 10});
    const int c = size / 2 + jitter;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if ((x - c) * (x - c) + (y - c) * (y - c) <= radius * radius)
                img.at(x, y) = color;
    return img;
}

}  // namespace

TEST_CASE("quantize counts nearest words and normalizes") {
    const Vocabulary v = grid_vocab(6, 3);
    std::vector<std::vector<double>> vecs(10, std::vector<double>{4.1, 0.0, 0.0});
    const BowHistogram h = quantize(synthetic_set(vecs), v);
    CHECK(h.raw_count == 10);
    CHECK(h.weights[4] == 1.0);
    for (int i = 0; i < 6; ++i)
        if (i != 4) CHECK(h.weights[i] == 0.0);

    const BowHistogram empty = quantize(synthetic_set({}), v);
    CHECK(empty.raw_count == 0);
    for (double w : empty.weights) CHECK(w == 0.0);
}

TEST_CASE("quantize matches per-word brute counts and ignores order") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    const Vocabulary v = grid_vocab(20, 4);
    std::vector<std::vector<double>> vecs(60, std::vector<double>(4));
    for (auto& d : vecs)
        for (double& x : d) x = u(gen);

    const BowHistogram h = quantize(synthetic_set(vecs), v);
    std::vector<int> counts(20, 0);
    for (const auto& d : vecs) ++counts[brute_nearest(d, v.centroids)];
    for (int i = 0; i < 20; ++i)
        CHECK(h.weights[i] == doctest::Approx(counts[i] / 60.0).epsilon(1e-12));

    auto shuffled = vecs;
    std::reverse(shuffled.begin(), shuffled.end());
    const BowHistogram h2 = quantize(synthetic_set(shuffled), v);
    CHECK(h.weights == h2.weights);
}

TEST_CASE("bow_distance is the L1 metric on histograms") {
    CHECK(bow_distance(hist_of({0.5, 0.5, 0.0}), hist_of({0.5, 0.5, 0.0})) == 0.0);
    CHECK(bow_distance(hist_of({1.0, 0.0}), hist_of({0.0, 1.0})) == 2.0);
    CHECK(bow_distance(hist_of({0.5, 0.5, 0.0}), hist_of({0.25, 0.25, 0.5})) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(bow_distance(hist_of({1.0}), hist_of({0.5, 0.5})),
                    std::invalid_argument);

    // metric properties on random normalized triples
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto mk = [&] {
            std::vector<double> w(8);
            double total = 0.0;
            for (double& x : w) {
                x = u(gen);
                total += x;
            }
            for (double& x : w) x /= total;
            return hist_of(std::move(w));
        };
        const BowHistogram a = mk(), b = mk(), c = mk();
        const double ab = bow_distance(a, b);
        const double ba = bow_distance(b, a);
        const double ac = bow_distance(a, c);
        const double cb = bow_distance(c, b);
        CHECK(ab == ba);
        CHECK(ab >= 0.0);
        CHECK(ab <= 2.0 + 1e-12);
        CHECK(ab <= ac + cb + 1e-12);
        CHECK(bow_distance(a, a) == 0.0);
    }
}

TEST_CASE("query ranks by distance with image_id tie-break") {
    BowIndex index;
    index.vocab_fingerprint = "00";
    index.entries = {
        {"b", "x", hist_of({1.0, 0.0})},
        {"a", "x", hist_of({1.0, 0.0})},
        {"c", "y", hist_of({0.0, 1.0})},
    };
    const RetrievalResult r = query(hist_of({1.0, 0.0}), index, 10, "q");
    REQUIRE(r.ranked.size() == 3);
    CHECK(r.ranked[0].image_id == "a");  // tie at distance 0 resolved by id
    CHECK(r.ranked[1].image_id == "b");
    CHECK(r.ranked[2].image_id == "c");
    CHECK(r.ranked[0].distance == 0.0);
    CHECK(r.ranked[2].distance == 2.0);

    const RetrievalResult top1 = query(hist_of({1.0, 0.0}), index, 1);
    CHECK(top1.ranked.size() == 1);

    BowIndex empty;
    CHECK_THROWS_AS(query(hist_of({1.0}), empty, 1), std::invalid_argument);

    // invariance under entry order
    BowIndex reversed = index;
    std::reverse(reversed.entries.begin(), reversed.entries.end());
    const RetrievalResult r2 = query(hist_of({1.0, 0.0}), reversed, 10);
    for (std::size_t i = 0; i < r.ranked.size(); ++i)
        CHECK(r.ranked[i].image_id == r2.ranked[i].image_id);
}

TEST_CASE("query agrees with the brute-force re-sort oracle") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int k = 12, n_entries = 100;

    BowIndex index;
    index.vocab_fingerprint = "ab";
    std::vector<BruteHit> entries;
    std::vector<std::vector<double>> hists;
    for (int i = 0; i < n_entries; ++i) {
        std::vector<double> w(k);
        double total = 0.0;
        for (double& x : w) {
            x = u(gen);
            total += x;
        }
        for (double& x : w) x /= total;
        const std::string id = "img_" + std::to_string(i);
        index.entries.push_back({id, "c" + std::to_string(i % 5), hist_of(w)});
        entries.push_back({id, "c" + std::to_string(i % 5), 0.0});
        hists.push_back(w);
    }

    for (int q = 0; q < 20; ++q) {
        std::vector<double> w(k);
        double total = 0.0;
        for (double& x : w) {
            x = u(gen);
            total += x;
        }
        for (double& x : w) x /= total;
        const RetrievalResult mine = query(hist_of(w), index, n_entries);
        const std::vector<BruteHit> oracle = brute_rank(w, entries, hists);
        REQUIRE(mine.ranked.size() == oracle.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(mine.ranked[i].image_id == oracle[i].image_id);
            CHECK(mine.ranked[i].distance == doctest::Approx(oracle[i].distance).epsilon(1e-12));
        }
    }
}

TEST_CASE("build_index composes the pipeline deterministically") {
    PipelineConfig cfg;
    cfg.n = 60;
    cfg.k = 4;
    cfg.jobs = 2;

    std::vector<LabeledImage> images;
    images.push_back({"a/1", "a", blob_image(72, 16, Rgb{220, 60, 60}, 0)});
    images.push_back({"a/2", "a", blob_image(72, 16, Rgb{210, 70, 60}, 2)});
    images.push_back({"b/1", "b", blob_image(72, 16, Rgb{60, 220, 60}, -3)});
    images.push_back({"b/2", "b", blob_image(72, 16, Rgb{70, 210, 70}, 3)});

    // vocabulary from the images' own descriptors
    std::vector<std::vector<double>> train;
    for (const auto& im : images) {
        const DescriptorSet ds = describe(im.image, cfg, im.image_id);
        REQUIRE(!ds.flagged_empty);
        for (const auto& d : ds.descriptors) train.push_back(d.vector);
    }
    const Vocabulary vocab = train_kmeans(train, cfg.k, cfg.kmeans_seed());

    const BowIndex index = build_index(images, vocab, cfg);
    REQUIRE(index.entries.size() == 4);
    CHECK(index.vocab_fingerprint == vocabulary_fingerprint(vocab));
    for (const auto& e : index.entries) {
        CHECK(e.bow.weights.size() == static_cast<std::size_t>(cfg.k));
        CHECK(e.bow.raw_count > 0);
    }

    // self-retrieval at rank 1 with distance 0
    for (const auto& e : index.entries) {
        const RetrievalResult r = query(e.bow, index, 4, e.image_id);
        CHECK(r.ranked[0].image_id == e.image_id);
        CHECK(r.ranked[0].distance == 0.0);
    }

    // duplicate ids rejected
    auto dup = images;
    dup[1].image_id = "a/1";
    CHECK_THROWS_AS(build_index(dup, vocab, cfg), std::invalid_argument);

    // dimension mismatch rejected
    PipelineConfig wrong = cfg;
    wrong.shape.radial_bins = 4;
    CHECK_THROWS_AS(build_index(images, vocab, wrong), std::invalid_argument);

    // deterministic: indexing twice gives byte-identical files
    TempDir tmp("idx_det");
    const BowIndex again = build_index(images, vocab, cfg);
    save_index(index, tmp.path() / "i1.txt");
    save_index(again, tmp.path() / "i2.txt");
    std::ifstream f1(tmp.path() / "i1.txt", std::ios::binary);
    std::ifstream f2(tmp.path() / "i2.txt", std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), {});
    const std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
    CHECK(!b1.empty());
}

TEST_CASE("index save/load round-trip preserves rankings") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int k = 9;
    BowIndex index;
    index.vocab_fingerprint = "0123456789abcdef";
    for (int i = 0; i < 40; ++i) {
        std::vector<double> w(k);
        double total = 0.0;
        for (double& x : w) {
            x = u(gen);
            total += x;
        }
        for (double& x : w) x /= total;
        index.entries.push_back({"img_" + std::to_string(i),
                                 "class_" + std::to_string(i % 4),
                                 hist_of(std::move(w), 5 + i)});
    }

    TempDir tmp("idx_rt");
    const auto path = tmp.path() / "index.txt";
    save_index(index, path);
    const BowIndex loaded = load_index(path);
    REQUIRE(loaded.entries.size() == index.entries.size());
    CHECK(loaded.vocab_fingerprint == index.vocab_fingerprint);
    CHECK(loaded.k() == k);
    for (std::size_t i = 0; i < index.entries.size(); ++i) {
        CHECK(loaded.entries[i].image_id == index.entries[i].image_id);
        CHECK(loaded.entries[i].label == index.entries[i].label);
        CHECK(loaded.entries[i].bow.raw_count == index.entries[i].bow.raw_count);
    }

    for (int q = 0; q < 20; ++q) {
        std::vector<double> w(k);
        double total = 0.0;
        for (double& x : w) {
            x = u(gen);
            total += x;
        }
        for (double& x : w) x /= total;
        const RetrievalResult a = query(hist_of(w), index, 40);
        const RetrievalResult b = query(hist_of(w), loaded, 40);
        REQUIRE(a.ranked.size() == b.ranked.size());
        for (std::size_t i = 0; i < a.ranked.size(); ++i)
            CHECK(a.ranked[i].image_id == b.ranked[i].image_id);
    }
}

TEST_CASE("load_index rejects tampered and malformed files") {
    TempDir tmp("idx_bad");
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream f(tmp.path() / name, std::ios::binary);
        f << body;
        return tmp.path() / name;
    };

    CHECK_THROWS_AS(load_index(write("h.txt", "AVIIDX 9\n1 1 ab\nx\ty\t1\t1\n")),
                    FormatError);
    CHECK_THROWS_AS(load_index(write("fp.txt", "AVIIDX 1\n1 1 XYZ\nx\ty\t1\t1\n")),
                    FormatError);

    // entry with k-1 weights names the offending line
    try {
        load_index(write("short.txt",
                         "AVIIDX 1\n3 1 ab\nimg\tlbl\t2\t0.5 0.5\n"));
        CHECK(false);
    } catch (const FormatError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    CHECK_THROWS_AS(load_index(write("dup.txt",
                                     "AVIIDX 1\n1 2 ab\nimg\tl\t1\t1\nimg\tl\t1\t1\n")),
                    std::invalid_argument);
    CHECK_THROWS_AS(load_index(write("fields.txt", "AVIIDX 1\n1 1 ab\nimg only\n")),
                    FormatError);
    CHECK_THROWS_AS(load_index(tmp.path() / "missing.txt"), IoError);
}

TEST_CASE("zero-histogram entries rank last against non-degenerate queries") {
    BowIndex index;
    index.vocab_fingerprint = "ff";
    index.entries = {
        {"real", "x", hist_of({0.5, 0.5})},
        {"flagged", "x", {std::vector<double>{0.0, 0.0}, 0}},
    };
    const RetrievalResult r = query(hist_of({0.6, 0.4}), index, 2);
    CHECK(r.ranked[0].image_id == "real");
    CHECK(r.ranked[1].image_id == "flagged");
    CHECK(r.ranked[1].distance == doctest::Approx(1.0));  // L1 to the zero vector
}
