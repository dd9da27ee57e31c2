#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "weaklabel/label_matrix.hpp"

namespace weaklabel {

// Unordered source pairs (j, k), stored with j < k in sorted order.
class CorrelationSet {
public:
    using Pair = std::pair<std::uint32_t, std::uint32_t>;

    CorrelationSet() = default;
    // Normalizes each pair to j < k. Throws DomainError for (j, j) or an index
    // >= m, DuplicateError for a repeated unordered pair.
    CorrelationSet(std::vector<Pair> pairs, std::size_t m);

    static CorrelationSet all_pairs(std::size_t m);

    std::size_t size() const noexcept { return pairs_.size(); }
    bool empty() const noexcept { return pairs_.empty(); }
    const std::vector<Pair>& pairs() const noexcept { return pairs_; }
    std::optional<std::size_t> index_of(std::size_t j, std::size_t k) const;
    bool contains(std::size_t j, std::size_t k) const { return index_of(j, k).has_value(); }

    friend bool operator==(const CorrelationSet&, const CorrelationSet&) = default;

private:
    std::vector<Pair> pairs_;
};

// Weights of the factor graph p_w(Lambda, Y).
//
// Per source j the energy of a (row, y) configuration is
//     lab[j] * 1{lambda_j != 0} + 2 * acc[j] * 1{lambda_j = y}
// and each modeled pair adds corr[p] * 1{lambda_j = lambda_k}. The factor 2
// on the accuracy term fixes the convention accuracy = sigmoid(2 * acc[j]).
struct GenerativeParams {
    std::vector<double> lab;
    std::vector<double> acc;
    std::vector<double> corr;  // aligned with correlations.pairs()
    CorrelationSet correlations;

    static GenerativeParams zeros(std::size_t m, CorrelationSet correlations = {});
    static GenerativeParams initial(std::size_t m, CorrelationSet correlations, double init_acc_weight);

    std::size_t num_sources() const noexcept { return acc.size(); }
    std::size_t size() const noexcept { return lab.size() + acc.size() + corr.size(); }

    // Layout [lab..., acc..., corr...], the same order as factor_values().
    std::vector<double> flatten() const;
    void assign_flat(std::span<const double> flat);

    friend bool operator==(const GenerativeParams&, const GenerativeParams&) = default;
};

struct ProbLabels {
    std::vector<double> probs;  // p(y_i = +1 | Lambda_i)
};

struct FitConfig {
    int epochs = 100;
    double step_size = 0.01;
    bool decay = false;          // step_size / sqrt(epoch + 1)
    int gibbs_steps = 1;         // CD-k sweeps per negative sample
    std::size_t batch_size = 64; // rows per stochastic update
    double l2_reg = 1e-4;
    std::uint64_t seed = 0;
    double init_acc_weight = 0.4236489301936017;  // accuracy_to_weight(0.7)
    double weight_cap = 6.0;
    double tolerance = 1e-6;     // exact path: stop when the projected gradient is below this
    unsigned threads = 1;

    void validate() const;
};

struct GibbsOptions {
    std::size_t samples = 20000;
    std::size_t burn_in = 200;
    std::uint64_t seed = 0;
};

double weight_to_accuracy(double w);
double accuracy_to_weight(double accuracy);

// Indicators [lab (m), acc (m), corr (|C|)] for one row and class y.
std::vector<double> factor_values(std::span<const Label> row, Label y, const CorrelationSet& correlations);

// Closed-form posterior sigmoid(2 * sum_j acc_j * lambda_j). Requires an empty
// correlation set (PreconditionError otherwise).
ProbLabels posterior_independent(const LabelMatrix& matrix, const GenerativeParams& params);

// Gibbs estimate of p(y_i = +1 | Lambda) for any correlation set.
ProbLabels posterior_gibbs(const LabelMatrix& matrix, const GenerativeParams& params, const GibbsOptions& options);

// Largest m for which correlated likelihoods are enumerated exactly.
inline constexpr std::size_t kMaxEnumeratedSources = 8;

// sum_i log sum_y p_w(Lambda_i, y). Closed form when the correlation set is
// empty; otherwise brute-force enumeration of 3^m configurations, which throws
// InfeasibleError for m > kMaxEnumeratedSources.
double exact_marginal_loglik(const LabelMatrix& matrix, const GenerativeParams& params, unsigned threads = 1);

// Gradient of exact_marginal_loglik in flatten() layout. Independent model only.
std::vector<double> exact_marginal_loglik_gradient(const LabelMatrix& matrix, const GenerativeParams& params,
                                                   unsigned threads = 1);

// Projected gradient ascent on the exact mean log marginal likelihood.
GenerativeParams fit_independent_exact(const LabelMatrix& matrix, const FitConfig& config);

// Minibatch contrastive divergence: positive phase samples y from its exact
// conditional, negative phase runs config.gibbs_steps sweeps over (Lambda, y)
// started from the observed row.
GenerativeParams fit_gibbs_sgd(const LabelMatrix& matrix, const CorrelationSet& correlations,
                               const FitConfig& config);

// Persisted generative model.
struct ModelFile {
    GenerativeParams params;
    std::uint64_t seed = 0;
    std::string strategy = "GM";  // "GM" or "MV"
    std::optional<double> epsilon;
};

inline constexpr const char* kWeightConvention = "acc=sigma(2w)";

void write_model(std::ostream& out, const ModelFile& model);
ModelFile read_model(std::istream& in);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace weaklabel
