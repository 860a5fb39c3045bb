#pragma once

#include "avifind/corpus.hpp"
#include "avifind/pipeline.hpp"

#include <string>
#include <vector>

namespace avifind {

struct PRPoint {
    double recall = 0.0;
    double precision = 0.0;
    int cutoff = 0;
};

// Fraction of the first min(m, retrieved) ranked labels matching
// relevant_label; divisor is the actual count when m exceeds the list.
double precision_at(const std::vector<std::string>& retrieved_labels,
                    const std::string& relevant_label, int m);

// Matches within the first m, divided by total_relevant.
double recall_at(const std::vector<std::string>& retrieved_labels,
                 const std::string& relevant_label, int total_relevant, int m);

// One PRPoint per cutoff 1..len(retrieved); recall is non-decreasing.
std::vector<PRPoint> pr_curve(const std::vector<std::string>& retrieved_labels,
                              const std::string& relevant_label, int total_relevant);

struct GridCell {
    int k = 0;
    int n = 0;
    std::string variant;  // "fused" or "shape"
    double mean_precision = 0.0;  // NaN when the cell failed
    int queries = 0;
    int failures = 0;  // images excluded for empty descriptor sets
    std::string error;  // non-empty when the whole cell failed
    std::vector<double> per_query_precision;
};

struct CurvePoint {
    std::string variant;
    int k = 0;
    double recall = 0.0;
    double precision = 0.0;
};

struct EvalReport {
    std::vector<GridCell> cells;  // ordered by (k, n, variant)
    // Mean interpolated PR curves per (variant, k), computed at the largest n
    // of the grid; recall levels 0.1 .. 1.0.
    std::vector<CurvePoint> curves;
    std::string config_echo;
};

// Trains a vocabulary, indexes the corpus and runs leave-one-out queries for
// every (k, n, variant) cell, recording mean precision at m. The shape
// variant is the fused pipeline with color weight 0. Per-cell failures are
// recorded in-report and the grid continues.
EvalReport run_grid(const CorpusManifest& corpus, std::vector<int> k_values,
                    std::vector<int> n_values, std::vector<std::string> variants,
                    const PipelineConfig& base_cfg, int m = 10);

// CSV renderings; byte-identical for identical reports.
std::string report_csv(const EvalReport& report);
std::string curves_csv(const EvalReport& report);

}  // namespace avifind
