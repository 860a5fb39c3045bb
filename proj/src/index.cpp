#include "avifind/index.hpp"

#include "avifind/error.hpp"
#include "avifind/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace avifind {

BowHistogram quantize(const DescriptorSet& ds, const Vocabulary& vocab) {
    BowHistogram h;
    h.weights.assign(vocab.k(), 0.0);
    for (const FusedDescriptor& d : ds.descriptors) {
        ++h.weights[assign_nearest(d.vector, vocab)];
        ++h.raw_count;
    }
    if (h.raw_count > 0) {
        const double total = static_cast<double>(h.raw_count);
        for (double& w : h.weights) w /= total;
    }
    return h;
}

double bow_distance(const BowHistogram& a, const BowHistogram& b) {
    if (a.weights.size() != b.weights.size())
        throw std::invalid_argument("bow_distance: histogram length mismatch (" +
                                    std::to_string(a.weights.size()) + " vs " +
                                    std::to_string(b.weights.size()) + ")");
    double s = 0.0;
    for (std::size_t i = 0; i < a.weights.size(); ++i)
        s += std::abs(a.weights[i] - b.weights[i]);
    return s;
}

namespace {

void check_unique_ids(const std::vector<IndexEntry>& entries) {
    std::set<std::string> seen;
    for (const IndexEntry& e : entries)
        if (!seen.insert(e.image_id).second)
            throw std::invalid_argument("duplicate image_id in index: " + e.image_id);
}

void check_dim(const Vocabulary& vocab, const PipelineConfig& cfg) {
    if (vocab.dim() != cfg.descriptor_dim())
        throw std::invalid_argument(
            "vocabulary dimension " + std::to_string(vocab.dim()) +
            " does not match descriptor dimension " +
            std::to_string(cfg.descriptor_dim()) + " implied by the shape params");
}

}  // namespace

BowIndex build_index(const std::vector<LabeledImage>& images, const Vocabulary& vocab,
                     const PipelineConfig& cfg) {
    if (images.empty()) throw std::invalid_argument("build_index: empty image list");
    cfg.validate();
    check_dim(vocab, cfg);

    BowIndex index;
    index.vocab_fingerprint = vocabulary_fingerprint(vocab);
    index.k_hint = vocab.k();
    index.entries.resize(images.size());
    parallel_for(images.size(), cfg.jobs, [&](std::size_t i) {
        const DescriptorSet ds = describe(images[i].image, cfg, images[i].image_id);
        index.entries[i] = {images[i].image_id, images[i].label, quantize(ds, vocab)};
    });
    check_unique_ids(index.entries);
    return index;
}

BowIndex build_index(const CorpusManifest& manifest, const Vocabulary& vocab,
                     const PipelineConfig& cfg) {
    if (manifest.entries.empty())
        throw std::invalid_argument("build_index: empty corpus manifest");
    cfg.validate();
    check_dim(vocab, cfg);

    BowIndex index;
    index.vocab_fingerprint = vocabulary_fingerprint(vocab);
    index.k_hint = vocab.k();
    index.entries.resize(manifest.entries.size());
    parallel_for(manifest.entries.size(), cfg.jobs, [&](std::size_t i) {
        const ManifestEntry& m = manifest.entries[i];
        const RasterImage img = load_image(m.path);
        const DescriptorSet ds = describe(img, cfg, m.image_id);
        index.entries[i] = {m.image_id, m.label, quantize(ds, vocab)};
    });
    check_unique_ids(index.entries);
    return index;
}

RetrievalResult query(const BowHistogram& q_bow, const BowIndex& index, int top_m,
                      std::string query_id) {
    if (index.entries.empty()) throw std::invalid_argument("query: empty index");
    if (top_m < 1) throw std::invalid_argument("query: top_m must be >= 1");

    RetrievalResult res;
    res.query_id = std::move(query_id);
    res.ranked.reserve(index.entries.size());
    for (const IndexEntry& e : index.entries)
        res.ranked.push_back({e.image_id, e.label, bow_distance(q_bow, e.bow)});
    std::sort(res.ranked.begin(), res.ranked.end(),
              [](const RetrievalHit& a, const RetrievalHit& b) {
                  return a.distance != b.distance ? a.distance < b.distance
                                                  : a.image_id < b.image_id;
              });
    if (res.ranked.size() > static_cast<std::size_t>(top_m))
        res.ranked.resize(top_m);
    return res;
}

void save_index(const BowIndex& index, const std::filesystem::path& path) {
    std::string out = "AVIIDX 1\n";
    out += std::to_string(index.k());
    out += ' ';
    out += std::to_string(index.entries.size());
    out += ' ';
    out += index.vocab_fingerprint;
    out += '\n';
    for (const IndexEntry& e : index.entries) {
        if (e.image_id.find_first_of("\t\n") != std::string::npos)
            throw std::invalid_argument("image_id contains TAB or newline: " + e.image_id);
        if (e.label.find_first_of("\t\n") != std::string::npos)
            throw std::invalid_argument("label contains TAB or newline: " + e.label);
        if (static_cast<int>(e.bow.weights.size()) != index.k())
            throw std::invalid_argument("entry " + e.image_id +
                                        " has inconsistent histogram length");
        out += e.image_id;
        out += '\t';
        out += e.label;
        out += '\t';
        out += std::to_string(e.bow.raw_count);
        out += '\t';
        for (std::size_t i = 0; i < e.bow.weights.size(); ++i) {
            if (i > 0) out += ' ';
            out += format_sig9(e.bow.weights[i]);
        }
        out += '\n';
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << out;
    if (!f) throw IoError("write failed: " + path.string());
}

BowIndex load_index(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());

    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(f, line)) throw FormatError("empty index file", lineno);
    if (line != "AVIIDX 1")
        throw FormatError("bad header or version (expected 'AVIIDX 1', got '" + line +
                          "')", lineno);

    ++lineno;
    if (!std::getline(f, line)) throw FormatError("missing size line", lineno);

    std::uint64_t k = 0, n_entries = 0;
    std::string fingerprint;
    {
        std::size_t p1 = line.find(' ');
        std::size_t p2 = p1 == std::string::npos ? std::string::npos : line.find(' ', p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos)
            throw FormatError("expected 'k n_entries vocab_fingerprint_hex'", lineno);
        const auto parse = [&](std::string_view tok) {
            std::uint64_t v = 0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
                throw FormatError("malformed integer '" + std::string(tok) + "'", lineno);
            return v;
        };
        k = parse(std::string_view(line).substr(0, p1));
        n_entries = parse(std::string_view(line).substr(p1 + 1, p2 - p1 - 1));
        fingerprint = line.substr(p2 + 1);
        if (k < 1) throw FormatError("k must be >= 1", lineno);
        if (fingerprint.empty() ||
            fingerprint.find_first_not_of("0123456789abcdef") != std::string::npos)
            throw FormatError("malformed fingerprint '" + fingerprint + "'", lineno);
    }

    BowIndex index;
    index.vocab_fingerprint = fingerprint;
    index.k_hint = static_cast<int>(k);
    index.entries.reserve(n_entries);
    for (std::uint64_t i = 0; i < n_entries; ++i) {
        ++lineno;
        if (!std::getline(f, line))
            throw FormatError("expected " + std::to_string(n_entries) +
                              " entries, got " + std::to_string(i), lineno);
        const std::size_t t1 = line.find('\t');
        const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        const std::size_t t3 = t2 == std::string::npos ? std::string::npos : line.find('\t', t2 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos || t3 == std::string::npos)
            throw FormatError("entry needs 4 TAB-separated fields", lineno);

        IndexEntry e;
        e.image_id = line.substr(0, t1);
        e.label = line.substr(t1 + 1, t2 - t1 - 1);
        if (e.image_id.empty()) throw FormatError("empty image_id", lineno);

        {
            const std::string_view tok = std::string_view(line).substr(t2 + 1, t3 - t2 - 1);
            std::int64_t rc = 0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), rc);
            if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || rc < 0)
                throw FormatError("malformed raw_count '" + std::string(tok) + "'", lineno);
            e.bow.raw_count = rc;
        }

        const std::string_view wtoks = std::string_view(line).substr(t3 + 1);
        e.bow.weights.reserve(k);
        std::size_t pos = 0;
        while (pos < wtoks.size()) {
            while (pos < wtoks.size() && wtoks[pos] == ' ') ++pos;
            std::size_t end = pos;
            while (end < wtoks.size() && wtoks[end] != ' ') ++end;
            if (end > pos) {
                double v = 0.0;
                const auto res = std::from_chars(wtoks.data() + pos, wtoks.data() + end, v);
                if (res.ec != std::errc{} || res.ptr != wtoks.data() + end ||
                    !std::isfinite(v) || v < 0.0)
                    throw FormatError("malformed weight '" +
                                      std::string(wtoks.substr(pos, end - pos)) + "'",
                                      lineno);
                e.bow.weights.push_back(v);
            }
            pos = end;
        }
        if (e.bow.weights.size() != k)
            throw FormatError("entry has " + std::to_string(e.bow.weights.size()) +
                              " weights, expected " + std::to_string(k), lineno);
        index.entries.push_back(std::move(e));
    }
    check_unique_ids(index.entries);
    return index;
}

}  // namespace avifind
