#include "avifind/corpus.hpp"
#include "avifind/descriptors.hpp"
#include "avifind/error.hpp"
#include "avifind/eval.hpp"
#include "avifind/index.hpp"
#include "avifind/parallel.hpp"
#include "avifind/pipeline.hpp"
#include "avifind/vocabulary.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace avifind;

struct CommonOpts {
    PipelineConfig cfg;
    std::optional<int> per_class;
    std::string corpus;
};

void add_pipeline_flags(CLI::App* cmd, PipelineConfig& cfg, bool with_n = true) {
    // eval owns a grid-valued --n, so the scalar flag is skipped there
    if (with_n)
        cmd->add_option("--n", cfg.n, "Contour samples per image")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "Base seed; sampling, k-means and shuffling derive from it")
        ->capture_default_str();
    cmd->add_option("--color-weight", cfg.color_weight,
                    "Weight of the 6 color-moment entries")->capture_default_str();
    cmd->add_option("--radial-bins", cfg.shape.radial_bins, "Shape-context radial bins R")
        ->capture_default_str();
    cmd->add_option("--angular-bins", cfg.shape.angular_bins, "Shape-context angular bins A")
        ->capture_default_str();
    cmd->add_option("--r-min", cfg.shape.r_min, "Inner radius (multiple of the mean pair distance)")
        ->capture_default_str();
    cmd->add_option("--r-max", cfg.shape.r_max, "Outer radius (multiple of the mean pair distance)")
        ->capture_default_str();
    cmd->add_flag("--rotation-invariant", cfg.shape.rotation_invariant,
                  "Measure angles against the local contour tangent");
    cmd->add_option("--octaves", cfg.scale_space.octaves, "DoG octaves")->capture_default_str();
    cmd->add_option("--scales-per-octave", cfg.scale_space.scales_per_octave, "DoG scales per octave")
        ->capture_default_str();
    cmd->add_option("--sigma0", cfg.scale_space.sigma0, "Base blur of the scale space")
        ->capture_default_str();
    cmd->add_option("--contrast-thresh", cfg.scale_space.contrast_thresh,
                    "Minimum |DoG| response")->capture_default_str();
    cmd->add_option("--edge-thresh", cfg.scale_space.edge_thresh,
                    "Principal-curvature ratio limit")->capture_default_str();
    cmd->add_option("--edge-sigma", cfg.edges.sigma, "Canny smoothing sigma")->capture_default_str();
    cmd->add_option("--edge-low", cfg.edges.low, "Canny low threshold (fraction of max gradient)")
        ->capture_default_str();
    cmd->add_option("--edge-high", cfg.edges.high, "Canny high threshold (fraction of max gradient)")
        ->capture_default_str();
    cmd->add_option("--max-iter", cfg.max_iter, "k-means iteration cap")->capture_default_str();
    cmd->add_option("--tol", cfg.tol, "k-means relative movement tolerance")->capture_default_str();
    cmd->add_option("--jobs", cfg.jobs, "Worker threads (0 = auto)")
        ->envname("AVIFIND_JOBS")->capture_default_str();
    cmd->set_config("--config", "", "Config file with `key = value` lines; flags win");
}

void add_corpus_flags(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--corpus", opts.corpus, "Corpus root: <class>/<file> or images/<class>/<file>")
        ->required();
    cmd->add_option("--per-class", opts.per_class,
                    "Keep this many images per class (seeded subset)");
}

CorpusManifest scan_with_warnings(const CommonOpts& opts) {
    CorpusManifest m = scan_corpus(opts.corpus, opts.per_class, opts.cfg.shuffle_seed());
    for (const std::string& w : m.warnings) std::cerr << "avifind: warning: " << w << "\n";
    return m;
}

// Descriptor extraction across a manifest; flagged images reported on stderr.
std::vector<DescriptorSet> describe_corpus(const CorpusManifest& manifest,
                                           const PipelineConfig& cfg) {
    std::vector<DescriptorSet> sets(manifest.entries.size());
    parallel_for(manifest.entries.size(), cfg.jobs, [&](std::size_t i) {
        const RasterImage img = load_image(manifest.entries[i].path);
        sets[i] = describe(img, cfg, manifest.entries[i].image_id);
    });
    for (const DescriptorSet& ds : sets)
        if (ds.flagged_empty)
            std::cerr << "avifind: warning: " << ds.image_id
                      << " produced no descriptors (" << ds.flag_reason << ")\n";
    return sets;
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << body;
    if (!f) throw IoError("write failed: " + path.string());
}

int cmd_vocab(const CommonOpts& opts, const std::string& out) {
    opts.cfg.validate();
    const CorpusManifest manifest = scan_with_warnings(opts);
    const std::vector<DescriptorSet> sets = describe_corpus(manifest, opts.cfg);

    std::vector<std::vector<double>> vectors;
    for (const DescriptorSet& ds : sets)
        for (const FusedDescriptor& d : ds.descriptors) vectors.push_back(d.vector);
    if (vectors.empty()) throw Error("no descriptors extracted from the corpus");

    const Vocabulary vocab = train_kmeans(vectors, opts.cfg.k, opts.cfg.kmeans_seed(),
                                          opts.cfg.max_iter, opts.cfg.tol);
    save_vocabulary(vocab, out);
    std::cerr << "avifind: trained k=" << vocab.k() << " d=" << vocab.dim() << " on "
              << vectors.size() << " descriptors from " << manifest.entries.size()
              << " images (" << vocab.train_meta.iterations << " iterations, distortion "
              << vocab.train_meta.final_distortion << ")\n";
    return 0;
}

int cmd_index(const CommonOpts& opts, const std::string& vocab_path,
              const std::string& out) {
    opts.cfg.validate();
    const Vocabulary vocab = load_vocabulary(vocab_path);
    const CorpusManifest manifest = scan_with_warnings(opts);
    const BowIndex index = build_index(manifest, vocab, opts.cfg);
    for (const IndexEntry& e : index.entries)
        if (e.bow.raw_count == 0)
            std::cerr << "avifind: warning: " << e.image_id
                      << " indexed with an empty histogram\n";
    save_index(index, out);
    std::cerr << "avifind: indexed " << index.entries.size() << " images against "
              << index.vocab_fingerprint << "\n";
    return 0;
}

int cmd_query(const PipelineConfig& cfg, const std::string& index_path,
              const std::string& vocab_path, const std::string& image_path, int top,
              bool allow_mismatch) {
    cfg.validate();
    const Vocabulary vocab = load_vocabulary(vocab_path);
    const BowIndex index = load_index(index_path);
    if (vocab.dim() != cfg.descriptor_dim())
        throw Error("vocabulary dimension " + std::to_string(vocab.dim()) +
                    " does not match the shape parameters (expect " +
                    std::to_string(cfg.descriptor_dim()) + ")");
    if (index.k() != vocab.k())
        throw Error("index has k=" + std::to_string(index.k()) +
                    " but the vocabulary has k=" + std::to_string(vocab.k()));

    const std::string fp = vocabulary_fingerprint(vocab);
    if (fp != index.vocab_fingerprint) {
        std::cerr << "avifind: warning: vocabulary fingerprint " << fp
                  << " does not match the index (" << index.vocab_fingerprint << ")\n";
        if (!allow_mismatch)
            throw Error("vocabulary/index fingerprint mismatch; rerun with "
                        "--allow-vocab-mismatch to query anyway");
    }

    const RasterImage img = load_image(image_path);
    const std::string id = std::filesystem::path(image_path).filename().string();
    const DescriptorSet ds = describe(img, cfg, id);
    if (ds.flagged_empty)
        std::cerr << "avifind: warning: query image produced no descriptors ("
                  << ds.flag_reason << ")\n";
    const BowHistogram bow = quantize(ds, vocab);
    const RetrievalResult res = query(bow, index, top, id);

    std::string out;
    for (std::size_t i = 0; i < res.ranked.size(); ++i) {
        out += std::to_string(i + 1);
        out += '\t';
        out += res.ranked[i].image_id;
        out += '\t';
        out += res.ranked[i].label;
        out += '\t';
        out += format_sig9(res.ranked[i].distance);
        out += '\n';
    }
    std::cout << out;
    return 0;
}

int cmd_eval(const CommonOpts& opts, std::vector<int> ks, std::vector<int> ns,
             std::vector<std::string> variants, const std::string& out,
             const std::string& curves_out) {
    opts.cfg.validate();
    const CorpusManifest manifest = scan_with_warnings(opts);
    const EvalReport report = run_grid(manifest, ks, ns, variants, opts.cfg);
    write_text_file(out, report_csv(report));
    if (!curves_out.empty()) write_text_file(curves_out, curves_csv(report));

    std::cerr << "avifind: " << report.config_echo << "\n";
    for (const GridCell& c : report.cells) {
        std::cerr << "avifind: k=" << c.k << " n=" << c.n << " " << c.variant << ": ";
        if (c.error.empty())
            std::cerr << "P@10 " << c.mean_precision << " over " << c.queries
                      << " queries (" << c.failures << " flagged)\n";
        else
            std::cerr << "failed: " << c.error << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Content-based bird image retrieval: shape contexts fused with "
                 "color moments, quantized into bag-of-features histograms"};
    app.require_subcommand(1);

    CommonOpts vocab_opts, index_opts, eval_opts;
    PipelineConfig query_cfg;

    auto* vocab = app.add_subcommand("vocab", "Train a visual vocabulary from a corpus");
    add_corpus_flags(vocab, vocab_opts);
    std::string vocab_out;
    bool shape_only = false;
    vocab->add_option("--k", vocab_opts.cfg.k, "Vocabulary size")->required();
    vocab->add_option("--out", vocab_out, "Output vocabulary file")->required();
    auto* so = vocab->add_flag("--shape-only", shape_only,
                               "Drop the color block (same as --color-weight 0)");
    add_pipeline_flags(vocab, vocab_opts.cfg);
    so->excludes("--color-weight");

    auto* index = app.add_subcommand("index", "Quantize a corpus into a BoW index");
    add_corpus_flags(index, index_opts);
    std::string index_vocab, index_out;
    index->add_option("--vocab", index_vocab, "Vocabulary file")->required();
    index->add_option("--out", index_out, "Output index file")->required();
    add_pipeline_flags(index, index_opts.cfg);

    auto* query = app.add_subcommand("query", "Rank indexed images against a query image");
    std::string query_index, query_vocab, query_image;
    int query_top = 10;
    bool allow_mismatch = false;
    query->add_option("--index", query_index, "Index file")->required();
    query->add_option("--vocab", query_vocab, "Vocabulary file")->required();
    query->add_option("--image", query_image, "Query image (PNG or JPEG)")->required();
    query->add_option("--top", query_top, "Results to print")->capture_default_str();
    query->add_flag("--allow-vocab-mismatch", allow_mismatch,
                    "Query even when the vocabulary fingerprint differs from the index");
    add_pipeline_flags(query, query_cfg);

    auto* eval = app.add_subcommand("eval", "Precision grid over (k, n, variant)");
    add_corpus_flags(eval, eval_opts);
    std::vector<int> eval_k, eval_n;
    std::vector<std::string> eval_variants = {"fused", "shape"};
    std::string eval_out, eval_curves;
    eval->add_option("--k", eval_k, "Vocabulary sizes, comma-separated")
        ->required()->delimiter(',');
    eval->add_option("--n", eval_n, "Contour sample counts, comma-separated")
        ->required()->delimiter(',');
    eval->add_option("--variants", eval_variants, "Descriptor variants: fused,shape")
        ->delimiter(',')->capture_default_str();
    eval->add_option("--out", eval_out, "Report CSV path")->required();
    eval->add_option("--curves", eval_curves, "Optional precision-recall curves CSV");
    add_pipeline_flags(eval, eval_opts.cfg, /*with_n=*/false);

    try {
        app.parse(argc, argv);
        if (shape_only) vocab_opts.cfg.color_weight = 0.0;
        if (vocab->parsed()) return cmd_vocab(vocab_opts, vocab_out);
        if (index->parsed()) return cmd_index(index_opts, index_vocab, index_out);
        if (query->parsed())
            return cmd_query(query_cfg, query_index, query_vocab, query_image,
                             query_top, allow_mismatch);
        if (eval->parsed())
            return cmd_eval(eval_opts, eval_k, eval_n, eval_variants, eval_out,
                            eval_curves);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "avifind: " << e.what() << "\n";
        return 1;
    }
}
