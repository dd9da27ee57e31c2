#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "weaklabel/generative_model.hpp"
#include "weaklabel/label_matrix.hpp"

namespace weaklabel {

// Parameters freed in one source's pseudolikelihood solve. corr has length m;
// corr[source] is always 0.
struct SourceModel {
    double lab = 0.0;
    double acc = 0.0;
    std::vector<double> corr;
};

// Mean over rows of log p(lambda_ij | lambda_i,-j), with y marginalized and the
// other sources' accuracy weights held at fixed_acc. When grad is non-null it
// receives the gradient in layout [lab, acc, corr_0..corr_{m-1}].
double source_pseudolikelihood(const LabelMatrix& matrix, std::size_t source, const SourceModel& model,
                               std::span<const double> fixed_acc, std::vector<double>* grad = nullptr);

// Per-source l1-regularized pseudolikelihood fits at one penalty level.
struct StructureFit {
    double epsilon = 0.0;
    std::vector<SourceModel> sources;

    // Pairs whose weight in either source's solve has magnitude >= threshold.
    CorrelationSet select(double threshold) const;
    // The larger-magnitude of the two per-source estimates for (j, k).
    double pair_weight(std::size_t j, std::size_t k) const;
};

// Solves every source at penalty epsilon. Other sources' accuracies are fixed
// to `independent.acc`; `warm` (same m) seeds the solves.
StructureFit fit_structure(const LabelMatrix& matrix, double epsilon, const FitConfig& config,
                           const GenerativeParams& independent, const StructureFit* warm = nullptr);

// Fits the independent model, then selects pairs at threshold epsilon.
CorrelationSet learn_structure(const LabelMatrix& matrix, double epsilon, const FitConfig& config);

struct SweepPoint {
    double epsilon = 0.0;
    std::size_t num_correlations = 0;
    CorrelationSet selected;
    std::vector<double> weights;  // aligned with selected.pairs()
};

struct SweepResult {
    std::vector<SweepPoint> points;  // descending epsilon
    double chosen_epsilon = 0.0;

    const SweepPoint& chosen() const;
};

struct SweepOptions {
    // Stop ascending the grid once a point selects no pairs.
    bool early_stop = false;
};

// epsilon = i * delta for i = 1 .. floor(1 / (2 delta)).
std::vector<double> epsilon_grid(double delta);

SweepResult sweep(const LabelMatrix& matrix, double delta, const FitConfig& config, const SweepOptions& options = {});

// Points ordered by descending epsilon. Returns the interior epsilon_i that
// maximizes c_{i+1} - c_{i-1}; ties go to the larger epsilon.
double select_elbow(std::span<const SweepPoint> points);

// "epsilon,num_correlations" rows in descending epsilon order.
void write_sweep_table(std::ostream& out, const SweepResult& result);
// "j,k,weight" rows for one point.
void write_pair_list(std::ostream& out, const SweepPoint& point);

}  // namespace weaklabel
