#include "avifind/eval.hpp"

#include "avifind/error.hpp"
#include "avifind/index.hpp"
#include "avifind/parallel.hpp"
#include "avifind/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace avifind {

double precision_at(const std::vector<std::string>& retrieved_labels,
                    const std::string& relevant_label, int m) {
    if (retrieved_labels.empty())
        throw std::invalid_argument("precision_at: empty retrieval list");
    if (m < 1) throw std::invalid_argument("precision_at: m must be >= 1");
    const int cut = std::min<int>(m, static_cast<int>(retrieved_labels.size()));
    int hits = 0;
    for (int i = 0; i < cut; ++i)
        if (retrieved_labels[i] == relevant_label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(cut);
}

double recall_at(const std::vector<std::string>& retrieved_labels,
                 const std::string& relevant_label, int total_relevant, int m) {
    if (total_relevant < 1)
        throw std::invalid_argument("recall_at: total_relevant must be >= 1");
    if (m < 1) throw std::invalid_argument("recall_at: m must be >= 1");
    const int cut = std::min<int>(m, static_cast<int>(retrieved_labels.size()));
    int hits = 0;
    for (int i = 0; i < cut; ++i)
        if (retrieved_labels[i] == relevant_label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(total_relevant);
}

std::vector<PRPoint> pr_curve(const std::vector<std::string>& retrieved_labels,
                              const std::string& relevant_label, int total_relevant) {
    if (retrieved_labels.empty())
        throw std::invalid_argument("pr_curve: empty retrieval list");
    if (total_relevant < 1)
        throw std::invalid_argument("pr_curve: total_relevant must be >= 1");
    std::vector<PRPoint> curve;
    curve.reserve(retrieved_labels.size());
    int hits = 0;
    for (std::size_t i = 0; i < retrieved_labels.size(); ++i) {
        if (retrieved_labels[i] == relevant_label) ++hits;
        curve.push_back({static_cast<double>(hits) / total_relevant,
                         static_cast<double>(hits) / static_cast<double>(i + 1),
                         static_cast<int>(i + 1)});
    }
    return curve;
}

namespace {

// Standard interpolated precision: max precision at recall >= level.
double interpolated_precision(const std::vector<PRPoint>& curve, double level) {
    double best = 0.0;
    for (const PRPoint& p : curve)
        if (p.recall >= level) best = std::max(best, p.precision);
    return best;
}

struct CellOutput {
    double mean_precision = std::numeric_limits<double>::quiet_NaN();
    int queries = 0;
    int failures = 0;
    std::string error;
    std::vector<double> per_query;
    // per-class 10-level interpolated curves, only filled when requested
    std::vector<double> mean_curve;
};

CellOutput run_cell(const std::vector<DescriptorSet>& descriptor_sets,
                    const CorpusManifest& corpus, int k, const PipelineConfig& cfg,
                    int m, bool want_curves);

}  // namespace

EvalReport run_grid(const CorpusManifest& corpus, std::vector<int> k_values,
                    std::vector<int> n_values, std::vector<std::string> variants,
                    const PipelineConfig& base_cfg, int m) {
    if (corpus.entries.empty()) throw std::invalid_argument("run_grid: empty corpus");
    if (k_values.empty() || n_values.empty() || variants.empty())
        throw std::invalid_argument("run_grid: k_values, n_values and variants must be non-empty");
    if (m < 1) throw std::invalid_argument("run_grid: m must be >= 1");
    {
        std::set<std::string> labels;
        std::map<std::string, int> by_label;
        for (const auto& e : corpus.entries) {
            labels.insert(e.label);
            ++by_label[e.label];
        }
        if (labels.size() < 2)
            throw std::invalid_argument("run_grid: corpus needs >= 2 classes");
        for (const auto& [label, count] : by_label)
            if (count < 2)
                throw std::invalid_argument("run_grid: class '" + label +
                                            "' needs >= 2 images");
    }
    for (const std::string& v : variants)
        if (v != "fused" && v != "shape")
            throw std::invalid_argument("run_grid: unknown variant '" + v +
                                        "' (expected 'fused' or 'shape')");

    std::sort(k_values.begin(), k_values.end());
    k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());
    std::sort(n_values.begin(), n_values.end());
    n_values.erase(std::unique(n_values.begin(), n_values.end()), n_values.end());
    // Canonical variant order: fused before shape.
    std::vector<std::string> ordered_variants;
    for (const char* v : {"fused", "shape"})
        if (std::find(variants.begin(), variants.end(), v) != variants.end())
            ordered_variants.push_back(v);

    const int max_n = n_values.back();

    EvalReport report;
    {
        std::ostringstream echo;
        echo << "corpus=" << corpus.root.string() << " images=" << corpus.entries.size()
             << " seed=" << base_cfg.seed << " m=" << m << " w=" << base_cfg.color_weight
             << " R=" << base_cfg.shape.radial_bins << " A=" << base_cfg.shape.angular_bins
             << " r_min=" << base_cfg.shape.r_min << " r_max=" << base_cfg.shape.r_max
             << " rotation_invariant=" << (base_cfg.shape.rotation_invariant ? 1 : 0);
        report.config_echo = echo.str();
    }

    // Descriptors depend on (n, variant) only; cache them across k values.
    std::map<std::pair<int, std::string>, std::vector<DescriptorSet>> cache;
    for (int n : n_values) {
        for (const std::string& variant : ordered_variants) {
            PipelineConfig cfg = base_cfg;
            cfg.n = n;
            cfg.color_weight = variant == "shape" ? 0.0 : base_cfg.color_weight;
            cfg.validate();
            std::vector<DescriptorSet> sets(corpus.entries.size());
            parallel_for(corpus.entries.size(), cfg.jobs, [&](std::size_t i) {
                const RasterImage img = load_image(corpus.entries[i].path);
                sets[i] = describe(img, cfg, corpus.entries[i].image_id);
            });
            cache.emplace(std::make_pair(n, variant), std::move(sets));
        }
    }

    for (int k : k_values) {
        for (int n : n_values) {
            for (const std::string& variant : ordered_variants) {
                PipelineConfig cfg = base_cfg;
                cfg.n = n;
                cfg.k = k;
                cfg.color_weight = variant == "shape" ? 0.0 : base_cfg.color_weight;
                const auto& sets = cache.at({n, variant});
                const CellOutput out =
                    run_cell(sets, corpus, k, cfg, m, n == max_n);

                GridCell cell;
                cell.k = k;
                cell.n = n;
                cell.variant = variant;
                cell.mean_precision = out.mean_precision;
                cell.queries = out.queries;
                cell.failures = out.failures;
                cell.error = out.error;
                cell.per_query_precision = out.per_query;
                report.cells.push_back(std::move(cell));

                if (n == max_n && out.error.empty()) {
                    for (int level = 1; level <= 10; ++level)
                        report.curves.push_back({variant, k, level / 10.0,
                                                 out.mean_curve[level - 1]});
                }
            }
        }
    }
    return report;
}

namespace {

CellOutput run_cell(const std::vector<DescriptorSet>& descriptor_sets,
                    const CorpusManifest& corpus, int k, const PipelineConfig& cfg,
                    int m, bool want_curves) {
    CellOutput out;
    try {
        std::vector<std::vector<double>> train_vectors;
        for (const DescriptorSet& ds : descriptor_sets)
            for (const FusedDescriptor& d : ds.descriptors)
                train_vectors.push_back(d.vector);
        const Vocabulary vocab =
            train_kmeans(train_vectors, k, cfg.kmeans_seed(), cfg.max_iter, cfg.tol);

        BowIndex index;
        index.vocab_fingerprint = vocabulary_fingerprint(vocab);
        index.k_hint = vocab.k();
        index.entries.resize(descriptor_sets.size());
        for (std::size_t i = 0; i < descriptor_sets.size(); ++i)
            index.entries[i] = {corpus.entries[i].image_id, corpus.entries[i].label,
                                quantize(descriptor_sets[i], vocab)};

        std::map<std::string, int> class_sizes;
        for (const auto& e : index.entries) ++class_sizes[e.label];

        // Leave-one-out: each non-flagged image queries the index minus itself.
        std::map<std::string, std::vector<std::vector<double>>> class_curves;
        for (std::size_t q = 0; q < index.entries.size(); ++q) {
            if (descriptor_sets[q].flagged_empty) {
                ++out.failures;
                continue;
            }
            const IndexEntry& qe = index.entries[q];
            std::vector<std::pair<double, std::size_t>> order;
            order.reserve(index.entries.size() - 1);
            for (std::size_t i = 0; i < index.entries.size(); ++i) {
                if (i == q) continue;
                order.emplace_back(bow_distance(qe.bow, index.entries[i].bow), i);
            }
            std::sort(order.begin(), order.end(),
                      [&](const auto& a, const auto& b) {
                          return a.first != b.first
                                     ? a.first < b.first
                                     : index.entries[a.second].image_id <
                                           index.entries[b.second].image_id;
                      });
            std::vector<std::string> labels;
            labels.reserve(order.size());
            for (const auto& [dist, i] : order)
                labels.push_back(index.entries[i].label);

            out.per_query.push_back(precision_at(labels, qe.label, m));
            if (want_curves) {
                const int total_relevant = class_sizes[qe.label] - 1;
                if (total_relevant >= 1) {
                    const auto curve = pr_curve(labels, qe.label, total_relevant);
                    std::vector<double> levels(10);
                    for (int l = 1; l <= 10; ++l)
                        levels[l - 1] = interpolated_precision(curve, l / 10.0);
                    class_curves[qe.label].push_back(std::move(levels));
                }
            }
        }
        if (out.per_query.empty()) {
            out.error = "no usable queries: every image was flagged empty";
            return out;
        }

        double total = 0.0;
        for (double p : out.per_query) total += p;
        out.mean_precision = total / static_cast<double>(out.per_query.size());
        out.queries = static_cast<int>(out.per_query.size());

        if (want_curves) {
            // Mean within each class, then across classes.
            out.mean_curve.assign(10, 0.0);
            for (const auto& [label, curves] : class_curves) {
                for (int l = 0; l < 10; ++l) {
                    double s = 0.0;
                    for (const auto& c : curves) s += c[l];
                    out.mean_curve[l] += s / static_cast<double>(curves.size());
                }
            }
            for (double& v : out.mean_curve)
                v /= static_cast<double>(class_curves.size());
        }
    } catch (const std::exception& e) {
        out.error = e.what();
        out.mean_precision = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

}  // namespace

std::string report_csv(const EvalReport& report) {
    std::string out = "k,n,variant,mean_precision_at_10,queries,failures\n";
    for (const GridCell& c : report.cells) {
        out += std::to_string(c.k);
        out += ',';
        out += std::to_string(c.n);
        out += ',';
        out += c.variant;
        out += ',';
        out += std::isnan(c.mean_precision) ? "nan" : format_sig9(c.mean_precision);
        out += ',';
        out += std::to_string(c.queries);
        out += ',';
        out += std::to_string(c.failures);
        out += '\n';
    }
    return out;
}

std::string curves_csv(const EvalReport& report) {
    std::string out = "variant,k,recall,precision\n";
    for (const CurvePoint& p : report.curves) {
        out += p.variant;
        out += ',';
        out += std::to_string(p.k);
        out += ',';
        out += format_sig9(p.recall);
        out += ',';
        out += format_sig9(p.precision);
        out += '\n';
    }
    return out;
}

}  // namespace avifind
