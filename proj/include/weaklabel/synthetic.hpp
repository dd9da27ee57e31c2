#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "weaklabel/generative_model.hpp"
#include "weaklabel/label_matrix.hpp"
#include "weaklabel/noise_aware.hpp"

namespace weaklabel {

struct SynthConfig {
    std::size_t n = 1000;
    std::size_t m = 10;
    double propensity = 0.1;
    std::vector<double> accuracies;  // length m
    double class_balance = 0.5;      // P(y = +1)
    // Each group's members all copy the first member's draw.
    std::vector<std::vector<std::size_t>> duplicate_groups;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthData {
    LabelMatrix matrix;
    GoldLabels gold;
    GenerativeParams true_params;
};

// Independent sources: abstain w.p. 1 - propensity, otherwise emit y_i w.p.
// accuracy and -y_i otherwise.
SynthData generate(const SynthConfig& config);

// Propensity weight that makes P(lambda != 0) equal `propensity` given the
// accuracy weight, clamped to [-cap, cap].
double propensity_weight(double propensity, double acc_weight, double cap = 6.0);

// Class-balanced sources voting w.p. 0.1 with accuracies drawn uniformly from
// [0.6, 0.9] (mean 0.75).
SynthConfig footnote7_config(std::size_t m, std::size_t n, std::uint64_t seed);

// 5 sources copying one draw at accuracy 0.5 plus 5 independent sources at
// 0.99, all with propensity 1.
SynthConfig example4_config(std::size_t n, std::uint64_t seed);

// m sources, accuracies in [0.6, 0.9]; sources (0,1), (2,3), ... for the
// first `planted_pairs` pairs are exact duplicates.
SynthConfig planted_pairs_config(std::size_t m, std::size_t planted_pairs, std::size_t n, double propensity,
                                 std::uint64_t seed);

void write_truth(std::ostream& out, const SynthConfig& config, const GenerativeParams& true_params);

// Advantage curve over the number of sources, with Monte Carlo summaries.
struct Fig3Config {
    std::vector<std::size_t> m_values;
    std::size_t trials = 100;
    std::size_t n = 1000;
    double propensity = 0.1;
    double accuracy_low = 0.6;
    double accuracy_high = 0.9;
    std::uint64_t seed = 0;
    bool fit_learned = true;  // also fit the independent model to report A_w
    FitConfig fit;
    unsigned threads = 1;
};

struct MonteCarlo {
    double mean = 0.0;
    double standard_error = 0.0;
};

struct Fig3Row {
    std::size_t m = 0;
    double expected_density = 0.0;      // m * p_l
    MonteCarlo optimal_advantage;       // A* with true weights
    MonteCarlo learned_advantage;       // A_w with fitted weights
    MonteCarlo bound;                   // A~*
    MonteCarlo low_density_bound;       // d^2 alpha (1 - alpha), alpha = trial mean accuracy
    MonteCarlo high_density_bound;      // exp(-2 p_l (alpha - 1/2)^2 d)
};

// Per-trial seeds are derive_seed(seed, m, trial), so rows do not depend on
// thread scheduling.
std::vector<Fig3Row> fig3_grid(const Fig3Config& config);

std::vector<std::size_t> default_fig3_m_values();

// Two-class Gaussian features where every source abstains on an uncovered
// region of feature space. Feature 0 carries the class signal (mean +/-
// separation); feature 1 is class-independent noise that decides coverage
// (x_1 > coverage_threshold is uncovered); further features are noise.
struct CoverageScenarioConfig {
    std::size_t n = 2000;
    std::size_t m = 10;
    std::size_t d = 3;
    double separation = 1.0;
    double propensity = 0.5;
    double accuracy_low = 0.6;
    double accuracy_high = 0.9;
    double coverage_threshold = 0.5;
    std::uint64_t seed = 0;
};

struct CoverageScenario {
    LabelMatrix matrix;
    GoldLabels gold;
    FeatureSet features;
    std::vector<std::size_t> uncovered;  // rows outside every source's coverage
};

CoverageScenario generate_coverage_scenario(const CoverageScenarioConfig& config);

}  // namespace weaklabel
