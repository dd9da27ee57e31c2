#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "weaklabel/generative_model.hpp"

namespace weaklabel {

// Dense row-major n x d feature matrix.
class FeatureSet {
public:
    FeatureSet() = default;
    // Throws DimensionError when values.size() != n * d, DomainError on a
    // non-finite value.
    FeatureSet(std::size_t n, std::size_t d, std::vector<double> values);

    std::size_t rows() const noexcept { return n_; }
    std::size_t dims() const noexcept { return d_; }
    std::span<const double> row(std::size_t i) const noexcept { return {values_.data() + i * d_, d_}; }
    const std::vector<double>& values() const noexcept { return values_; }

    FeatureSet subset(std::span<const std::size_t> rows) const;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<double> values_;
};

struct DiscModel {
    std::vector<double> weights;
    double bias = 0.0;

    static DiscModel zeros(std::size_t d) { return {std::vector<double>(d, 0.0), 0.0}; }
    double score(std::span<const double> x) const;
};

// Gradient of the noise-aware loss: one entry per weight, then the bias.
struct LossGradient {
    std::vector<double> weights;
    double bias = 0.0;
};

// sum_i [p_i l(s_i, +1) + (1 - p_i) l(s_i, -1)] with logistic loss l.
double noise_aware_loss(const DiscModel& model, const FeatureSet& features, const ProbLabels& probs,
                        LossGradient* grad = nullptr);

// Minimizes noise_aware_loss / n + l2_reg * |weights|^2 by gradient descent
// with backtracking. config.epochs bounds the iterations; stops when the
// gradient's max-norm drops below config.tolerance.
DiscModel train(const FeatureSet& features, const ProbLabels& probs, const FitConfig& config);

// sigmoid(score) per row.
std::vector<double> predict(const DiscModel& model, const FeatureSet& features);

FeatureSet read_features(std::istream& in);
void write_features(std::ostream& out, const FeatureSet& features);
FeatureSet load_features(const std::filesystem::path& path);

void write_disc_model(std::ostream& out, const DiscModel& model);
DiscModel read_disc_model(std::istream& in);
DiscModel load_disc_model(const std::filesystem::path& path);

}  // namespace weaklabel
