#include "avifind/vocabulary.hpp"

#include "avifind/error.hpp"
#include "avifind/rng.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace avifind {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::size_t count_distinct(const std::vector<std::vector<double>>& x) {
    std::vector<const std::vector<double>*> ptrs;
    ptrs.reserve(x.size());
    for (const auto& v : x) ptrs.push_back(&v);
    std::sort(ptrs.begin(), ptrs.end(),
              [](const auto* a, const auto* b) { return *a < *b; });
    std::size_t distinct = ptrs.empty() ? 0 : 1;
    for (std::size_t i = 1; i < ptrs.size(); ++i)
        if (*ptrs[i] != *ptrs[i - 1]) ++distinct;
    return distinct;
}

int nearest_centroid(std::span<const double> p,
                     const std::vector<std::vector<double>>& centroids) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < static_cast<int>(centroids.size()); ++c) {
        const double d = squared_distance(p, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

}  // namespace

std::string format_sig9(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                   std::chars_format::general, 9);
    return std::string(buf, res.ptr);
}

Vocabulary train_kmeans(const std::vector<std::vector<double>>& descriptors, int k,
                        std::uint64_t seed, int max_iter, double tol) {
    if (descriptors.empty())
        throw std::invalid_argument("train_kmeans: empty descriptor set");
    if (k < 1) throw std::invalid_argument("train_kmeans: k must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("train_kmeans: max_iter must be >= 1");
    if (tol < 0.0) throw std::invalid_argument("train_kmeans: tol must be >= 0");
    const std::size_t n = descriptors.size();
    const std::size_t d = descriptors[0].size();
    for (const auto& v : descriptors)
        if (v.size() != d)
            throw std::invalid_argument("train_kmeans: descriptor dimension mismatch");
    if (static_cast<std::size_t>(k) > count_distinct(descriptors))
        throw std::invalid_argument(
            "train_kmeans: k exceeds the number of distinct descriptors");

    std::mt19937_64 gen(seed);
    std::vector<std::vector<double>> centroids;
    centroids.reserve(k);

    // k-means++ seeding: first pick uniform, then proportional to the squared
    // distance to the nearest chosen centroid.
    centroids.push_back(descriptors[uniform_below(gen, n)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i)
        d2[i] = squared_distance(descriptors[i], centroids[0]);
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = n;
        if (total > 0.0) {
            const double r = uniform_unit(gen) * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum > r && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {  // numerical tail: take the last positive-mass point
                for (std::size_t i = n; i-- > 0;)
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
            }
        }
        if (pick == n)
            throw std::invalid_argument(
                "train_kmeans: k exceeds the number of distinct descriptors");
        centroids.push_back(descriptors[pick]);
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], squared_distance(descriptors[i], centroids.back()));
    }

    Vocabulary vocab;
    vocab.train_meta.seed = seed;
    vocab.train_meta.descriptor_count = n;

    std::vector<int> assign(n, -1);
    std::vector<int> prev_assign;
    int iterations = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
        // Assignment pass.
        for (std::size_t i = 0; i < n; ++i)
            assign[i] = nearest_centroid(descriptors[i], centroids);

        // Re-seed empty clusters from the farthest point of any multi-point
        // cluster, lowest index on ties.
        std::vector<int> sizes(k, 0);
        for (int a : assign) ++sizes[a];
        for (int c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[assign[i]] < 2) continue;
                const double dist = squared_distance(descriptors[i], centroids[assign[i]]);
                if (dist > far_d) {
                    far_d = dist;
                    far = i;
                }
            }
            if (far == n) continue;  // nothing movable; cluster stays empty
            --sizes[assign[far]];
            assign[far] = c;
            sizes[c] = 1;
            centroids[c] = descriptors[far];
        }

        double distortion = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            distortion += squared_distance(descriptors[i], centroids[assign[i]]);
        distortion /= static_cast<double>(n);
        vocab.train_meta.distortion_history.push_back(distortion);
        iterations = iter + 1;

        const bool assignment_stable = assign == prev_assign;
        prev_assign = assign;

        // Update pass.
        std::vector<std::vector<double>> means(k, std::vector<double>(d, 0.0));
        std::vector<int> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j)
                means[assign[i]][j] += descriptors[i][j];
            ++counts[assign[i]];
        }
        double move = 0.0, scale = 0.0;
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            double shift = 0.0, norm = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                means[c][j] /= static_cast<double>(counts[c]);
                const double dj = means[c][j] - centroids[c][j];
                shift += dj * dj;
                norm += means[c][j] * means[c][j];
            }
            move = std::max(move, std::sqrt(shift));
            scale = std::max(scale, std::sqrt(norm));
            centroids[c] = std::move(means[c]);
        }

        if (assignment_stable || move <= tol * std::max(scale, 1e-12)) break;
    }

    // Final consistent state: optimal assignment against the final centroids.
    double final_distortion = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        final_distortion +=
            squared_distance(descriptors[i], centroids[nearest_centroid(descriptors[i], centroids)]);
    final_distortion /= static_cast<double>(n);

    vocab.centroids = std::move(centroids);
    vocab.train_meta.iterations = iterations;
    vocab.train_meta.final_distortion = final_distortion;
    return vocab;
}

int assign_nearest(std::span<const double> desc, const Vocabulary& vocab) {
    if (vocab.k() < 1) throw std::invalid_argument("assign_nearest: empty vocabulary");
    if (static_cast<int>(desc.size()) != vocab.dim())
        throw std::invalid_argument("assign_nearest: descriptor dimension " +
                                    std::to_string(desc.size()) +
                                    " != vocabulary dimension " +
                                    std::to_string(vocab.dim()));
    return nearest_centroid(desc, vocab.centroids);
}

std::string serialize_vocabulary(const Vocabulary& vocab) {
    std::string out = "AVIVOCAB 1\n";
    out += std::to_string(vocab.k());
    out += ' ';
    out += std::to_string(vocab.dim());
    out += ' ';
    out += std::to_string(vocab.train_meta.seed);
    out += '\n';
    for (const auto& c : vocab.centroids) {
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (j > 0) out += ' ';
            out += format_sig9(c[j]);
        }
        out += '\n';
    }
    return out;
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
    for (const auto& c : vocab.centroids)
        for (double v : c)
            if (!std::isfinite(v))
                throw std::invalid_argument("vocabulary contains a non-finite value");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << serialize_vocabulary(vocab);
    if (!f) throw IoError("write failed: " + path.string());
}

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_double(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() ||
        !std::isfinite(v))
        throw FormatError("malformed numeric value '" + std::string(tok) + "'", line);
    return v;
}

std::uint64_t parse_u64(std::string_view tok, std::size_t line) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw FormatError("malformed integer '" + std::string(tok) + "'", line);
    return v;
}

}  // namespace

Vocabulary load_vocabulary(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());

    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(f, line)) throw FormatError("empty vocabulary file", lineno);
    if (line != "AVIVOCAB 1")
        throw FormatError("bad header or version (expected 'AVIVOCAB 1', got '" +
                          line + "')", lineno);

    ++lineno;
    if (!std::getline(f, line)) throw FormatError("missing size line", lineno);
    const auto head = split_ws(line);
    if (head.size() != 3) throw FormatError("expected 'k d seed'", lineno);
    const std::uint64_t k = parse_u64(head[0], lineno);
    const std::uint64_t dim = parse_u64(head[1], lineno);
    const std::uint64_t seed = parse_u64(head[2], lineno);
    if (k < 1 || dim < 1) throw FormatError("k and d must be >= 1", lineno);

    Vocabulary vocab;
    vocab.train_meta.seed = seed;
    vocab.centroids.reserve(k);
    for (std::uint64_t i = 0; i < k; ++i) {
        ++lineno;
        if (!std::getline(f, line))
            throw FormatError("expected " + std::to_string(k) + " centroid rows, got " +
                              std::to_string(i), lineno);
        const auto toks = split_ws(line);
        if (toks.size() != dim)
            throw FormatError("centroid row has " + std::to_string(toks.size()) +
                              " values, expected " + std::to_string(dim), lineno);
        std::vector<double> c(dim);
        for (std::uint64_t j = 0; j < dim; ++j) c[j] = parse_double(toks[j], lineno);
        vocab.centroids.push_back(std::move(c));
    }
    return vocab;
}

std::string vocabulary_fingerprint(const Vocabulary& vocab) {
    const std::string bytes = serialize_vocabulary(vocab);
    const std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace avifind
