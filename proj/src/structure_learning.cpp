#include "weaklabel/structure_learning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>

#include "parallel.hpp"
#include "weaklabel/errors.hpp"
#include "weaklabel/io_util.hpp"
#include "weaklabel/numeric.hpp"

namespace weaklabel {

namespace {

// Rows as seen from one source: its own label plus the other sources' entries
// in CSR form, with the log-odds contribution of the fixed accuracies cached.
struct SourceView {
    std::size_t source = 0;
    std::size_t m = 0;
    std::vector<Label> own;
    std::vector<double> d;         // sum over other votes of 2 * fixed_acc * label
    std::vector<double> log_zero;  // log1p_exp(d)
    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> cols;
    std::vector<Label> labels;

    SourceView(const LabelMatrix& matrix, std::size_t j, std::span<const double> fixed_acc) : source(j), m(matrix.cols()) {
        const std::size_t n = matrix.rows();
        own.assign(n, 0);
        d.assign(n, 0.0);
        log_zero.resize(n);
        offsets.reserve(n + 1);
        offsets.push_back(0);
        cols.reserve(matrix.nnz());
        labels.reserve(matrix.nnz());
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& e : matrix.row(i)) {
                if (e.col == j) {
                    own[i] = e.label;
                    continue;
                }
                d[i] += 2.0 * fixed_acc[e.col] * e.label;
                cols.push_back(e.col);
                labels.push_back(e.label);
            }
            offsets.push_back(cols.size());
            log_zero[i] = log1p_exp(d[i]);
        }
    }

    std::size_t rows() const { return own.size(); }

    // Mean log pseudolikelihood; gradient layout [lab, acc, corr_0..corr_{m-1}].
    double evaluate(const SourceModel& model, std::vector<double>* grad) const {
        const std::size_t n = rows();
        double corr_total = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            if (k != source) corr_total += model.corr[k];

        const double two_acc = 2.0 * model.acc;
        double g_lab = 0.0, g_acc = 0.0, g_base = 0.0;
        std::vector<double> delta;
        if (grad) delta.assign(m, 0.0);

        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Label v = own[i];
            // same[l + 1]: correlation mass switched on when lambda_j = l
            std::array<double, 3> same{0.0, 0.0, 0.0};
            for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) same[labels[p] + 1] += model.corr[cols[p]];
            same[1] = corr_total - same[0] - same[2];

            // Unnormalized log p(lambda_j = l), with y summed out and a common
            // offset dropped:
            //   l = 0:  log(e^d + 1)
            //   l = +1: lab + log(e^(d + 2a) + 1)
            //   l = -1: lab + log(e^d + e^2a)
            const double s_neg = model.lab + same[0] + two_acc + log1p_exp(d[i] - two_acc);
            const double s_zero = same[1] + log_zero[i];
            const double s_pos = model.lab + same[2] + log1p_exp(d[i] + two_acc);
            const double top = std::max({s_neg, s_zero, s_pos});
            const double e_neg = std::exp(s_neg - top), e_zero = std::exp(s_zero - top), e_pos = std::exp(s_pos - top);
            const double sum = e_neg + e_zero + e_pos;
            const double observed = v > 0 ? s_pos : (v < 0 ? s_neg : s_zero);
            total += observed - top - std::log(sum);

            if (!grad) continue;
            const std::array<double, 3> q{e_neg / sum, e_zero / sum, e_pos / sum};
            // d s_l / d acc, which is 2 P(y = l | lambda_j = l) for l != 0.
            const double ds_pos = 2.0 * sigmoid(d[i] + two_acc);
            const double ds_neg = 2.0 * sigmoid(two_acc - d[i]);
            const double ds_observed = v > 0 ? ds_pos : (v < 0 ? ds_neg : 0.0);

            g_lab += (v != 0 ? 1.0 : 0.0) - (q[0] + q[2]);
            g_acc += ds_observed - (q[2] * ds_pos + q[0] * ds_neg);
            const double base = (v == 0 ? 1.0 : 0.0) - q[1];
            g_base += base;
            for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
                const Label l = labels[p];
                delta[cols[p]] += ((v == l ? 1.0 : 0.0) - q[l + 1]) - base;
            }
        }

        const double dn = static_cast<double>(n);
        if (grad) {
            grad->assign(m + 2, 0.0);
            (*grad)[0] = g_lab / dn;
            (*grad)[1] = g_acc / dn;
            for (std::size_t k = 0; k < m; ++k)
                if (k != source) (*grad)[2 + k] = (g_base + delta[k]) / dn;
        }
        return total / dn;
    }
};

}  // namespace

double source_pseudolikelihood(const LabelMatrix& matrix, std::size_t source, const SourceModel& model,
                               std::span<const double> fixed_acc, std::vector<double>* grad) {
    const std::size_t m = matrix.cols();
    if (source >= m) throw DomainError("source " + std::to_string(source) + " out of range");
    if (model.corr.size() != m || fixed_acc.size() != m)
        throw DimensionError("pseudolikelihood weights must have one entry per source");
    if (matrix.rows() == 0) throw EmptyMatrixError("pseudolikelihood of an empty matrix");
    return SourceView(matrix, source, fixed_acc).evaluate(model, grad);
}

namespace {

constexpr double kStallGain = 1e-10;

// Proximal gradient (FISTA with backtracking and monotone restart) on
//   -PL(x) + l2 * |x|^2 + (epsilon / n) * sum_k |corr_k|,  box [-cap, cap],
// which is the summed objective -sum_i log p(...) + epsilon * |corr|_1 divided by n.
//
// The iterate stores base = lab - sum_k corr_k in place of lab. A pair factor
// also fires when both sources abstain, so in (lab, corr) coordinates every
// corr_k shifts the abstain logit of nearly every row and the problem has a
// nearly flat direction. In (base, corr) coordinates corr_k only touches rows
// where source k votes.
SourceModel solve_source(const SourceView& view, double epsilon, const FitConfig& config, SourceModel start) {
    const std::size_t m = view.m;
    const std::size_t source = view.source;
    const double cap = config.weight_cap;
    const double l1 = epsilon / static_cast<double>(view.rows());

    auto corr_sum = [&](const std::vector<double>& x) {
        double sum = 0.0;
        for (std::size_t k = 2; k < x.size(); ++k) sum += x[k];
        return sum;
    };
    auto unpack = [&](const std::vector<double>& x) {
        SourceModel s;
        s.lab = x[0] + corr_sum(x);
        s.acc = x[1];
        s.corr.assign(x.begin() + 2, x.end());
        return s;
    };
    auto pack = [&](const SourceModel& s) {
        std::vector<double> x(m + 2);
        x[1] = s.acc;
        std::copy(s.corr.begin(), s.corr.end(), x.begin() + 2);
        x[0] = s.lab - corr_sum(x);
        return x;
    };
    // Smooth part (to be minimized) and its gradient in iterate coordinates.
    auto smooth = [&](const std::vector<double>& x, std::vector<double>* g) {
        const auto model = unpack(x);
        double value = -view.evaluate(model, g);
        value += config.l2_reg * (model.lab * model.lab + model.acc * model.acc);
        for (double w : model.corr) value += config.l2_reg * w * w;
        if (g) {
            (*g)[0] = -(*g)[0] + 2.0 * config.l2_reg * model.lab;
            (*g)[1] = -(*g)[1] + 2.0 * config.l2_reg * model.acc;
            for (std::size_t k = 2; k < x.size(); ++k) (*g)[k] = -(*g)[k] + 2.0 * config.l2_reg * x[k] + (*g)[0];
            (*g)[2 + source] = 0.0;
        }
        if (!std::isfinite(value))
            throw DivergenceError("non-finite pseudolikelihood for source " + std::to_string(source));
        return value;
    };
    auto penalty = [&](const std::vector<double>& x) {
        double sum = 0.0;
        for (std::size_t k = 2; k < x.size(); ++k) sum += std::abs(x[k]);
        return l1 * sum;
    };
    // Soft-threshold and box the weights, then box lab = base + sum corr.
    auto prox = [&](std::vector<double>& x, double step) {
        x[1] = std::clamp(x[1], -cap, cap);
        const double shrink = l1 * step;
        for (std::size_t k = 2; k < x.size(); ++k) {
            const double w = x[k];
            const double soft = w > shrink ? w - shrink : (w < -shrink ? w + shrink : 0.0);
            x[k] = std::clamp(soft, -cap, cap);
        }
        x[2 + source] = 0.0;
        const double sum = corr_sum(x);
        x[0] = std::clamp(x[0] + sum, -cap, cap) - sum;
    };

    start.corr.resize(m, 0.0);
    auto x = pack(start);
    prox(x, 0.0);
    double fx = smooth(x, nullptr) + penalty(x);
    auto y = x;
    double momentum = 1.0;
    double lipschitz = 1.0;
    std::vector<double> gy, candidate(x.size());
    int stalled = 0;

    for (int it = 0; it < config.epochs; ++it) {
        const double fy = smooth(y, &gy);
        double f_candidate = 0.0;
        while (true) {
            const double step = 1.0 / lipschitz;
            for (std::size_t k = 0; k < x.size(); ++k) candidate[k] = y[k] - step * gy[k];
            prox(candidate, step);
            double linear = 0.0, quad = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double d = candidate[k] - y[k];
                linear += gy[k] * d;
                quad += d * d;
            }
            const double f_smooth = smooth(candidate, nullptr);
            if (f_smooth <= fy + linear + 0.5 * lipschitz * quad + 1e-12 || lipschitz > 1e12) {
                f_candidate = f_smooth + penalty(candidate);
                break;
            }
            lipschitz *= 2.0;
        }

        double change = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) change = std::max(change, std::abs(candidate[k] - x[k]));

        if (f_candidate > fx) {
            // Restart momentum from the last accepted point.
            momentum = 1.0;
            y = x;
            if (change < config.tolerance) break;
            continue;
        }
        // Weights creeping toward the cap barely move the objective; stop once
        // two consecutive accepted steps gain almost nothing.
        stalled = fx - f_candidate < kStallGain ? stalled + 1 : 0;
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta = (momentum - 1.0) / next_momentum;
        for (std::size_t k = 0; k < x.size(); ++k) y[k] = candidate[k] + beta * (candidate[k] - x[k]);
        x = candidate;
        fx = f_candidate;
        momentum = next_momentum;
        lipschitz = std::max(lipschitz * 0.8, 1e-3);
        if (change < config.tolerance || stalled >= 2) break;
    }
    return unpack(x);
}

}  // namespace

CorrelationSet StructureFit::select(double threshold) const {
    std::vector<CorrelationSet::Pair> pairs;
    const std::size_t m = sources.size();
    for (std::uint32_t j = 0; j < m; ++j)
        for (std::uint32_t k = j + 1; k < m; ++k)
            if (std::abs(sources[j].corr[k]) >= threshold || std::abs(sources[k].corr[j]) >= threshold)
                pairs.emplace_back(j, k);
    return CorrelationSet(std::move(pairs), m);
}

double StructureFit::pair_weight(std::size_t j, std::size_t k) const {
    const double a = sources[j].corr[k];
    const double b = sources[k].corr[j];
    return std::abs(a) >= std::abs(b) ? a : b;
}

StructureFit fit_structure(const LabelMatrix& matrix, double epsilon, const FitConfig& config,
                           const GenerativeParams& independent, const StructureFit* warm) {
    config.validate();
    if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
    const std::size_t m = matrix.cols();
    if (independent.num_sources() != m)
        throw DimensionError("independent model has " + std::to_string(independent.num_sources()) +
                             " sources, matrix has " + std::to_string(m));
    if (matrix.rows() == 0) throw EmptyMatrixError("cannot learn structure from a matrix with no rows");

    StructureFit fit;
    fit.epsilon = epsilon;
    fit.sources.resize(m);
    detail::for_each_shard(m, config.threads, [&](unsigned, std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            SourceModel start;
            if (warm && warm->sources.size() == m) {
                start = warm->sources[j];
            } else {
                start.lab = independent.lab[j];
                start.acc = independent.acc[j];
                start.corr.assign(m, 0.0);
            }
            const SourceView view(matrix, j, independent.acc);
            fit.sources[j] = solve_source(view, epsilon, config, std::move(start));
        }
    });
    return fit;
}

CorrelationSet learn_structure(const LabelMatrix& matrix, double epsilon, const FitConfig& config) {
    if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
    const auto independent = fit_independent_exact(matrix, config);
    return fit_structure(matrix, epsilon, config, independent).select(epsilon);
}

const SweepPoint& SweepResult::chosen() const {
    for (const auto& p : points)
        if (p.epsilon == chosen_epsilon) return p;
    throw PreconditionError("chosen epsilon is not among the sweep points");
}

std::vector<double> epsilon_grid(double delta) {
    if (!(delta > 0.0 && delta <= 0.5)) throw PreconditionError("search resolution must lie in (0, 0.5]");
    const auto steps = static_cast<std::size_t>(std::floor(1.0 / (2.0 * delta) + 1e-9));
    std::vector<double> grid;
    for (std::size_t i = 1; i <= steps; ++i) grid.push_back(static_cast<double>(i) * delta);
    return grid;
}

SweepResult sweep(const LabelMatrix& matrix, double delta, const FitConfig& config, const SweepOptions& options) {
    const auto grid = epsilon_grid(delta);
    const auto independent = fit_independent_exact(matrix, config);

    SweepResult result;
    StructureFit previous;
    bool have_previous = false;
    for (const double epsilon : grid) {
        StructureFit fit;
        try {
            fit = fit_structure(matrix, epsilon, config, independent, have_previous ? &previous : nullptr);
        } catch (const DivergenceError& e) {
            throw DivergenceError("structure learning at epsilon " + io::format_double(epsilon) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("structure learning at epsilon " + io::format_double(epsilon) + ": " + e.what());
        }
        SweepPoint point;
        point.epsilon = epsilon;
        point.selected = fit.select(epsilon);
        point.num_correlations = point.selected.size();
        for (const auto& [j, k] : point.selected.pairs()) point.weights.push_back(fit.pair_weight(j, k));
        result.points.push_back(std::move(point));
        previous = std::move(fit);
        have_previous = true;
        if (options.early_stop && result.points.back().num_correlations == 0) break;
    }
    std::reverse(result.points.begin(), result.points.end());
    // An early stop can leave too few points for the elbow; the stopping
    // point models nothing, so it is the conservative choice.
    if (options.early_stop && result.points.size() < 3)
        result.chosen_epsilon = result.points.front().epsilon;
    else
        result.chosen_epsilon = select_elbow(result.points);
    return result;
}

double select_elbow(std::span<const SweepPoint> points) {
    if (points.size() < 3)
        throw InsufficientDataError("elbow selection needs at least 3 sweep points, got " +
                                    std::to_string(points.size()));
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        if (!(points[i].epsilon > points[i + 1].epsilon))
            throw PreconditionError("sweep points must be ordered by descending epsilon");
    std::size_t best = 1;
    double best_score = -INFINITY;
    for (std::size_t i = 1; i + 1 < points.size(); ++i) {
        const double score = static_cast<double>(points[i + 1].num_correlations) -
                             static_cast<double>(points[i - 1].num_correlations);
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return points[best].epsilon;
}

void write_sweep_table(std::ostream& out, const SweepResult& result) {
    out << "epsilon,num_correlations\n";
    for (const auto& p : result.points) out << io::format_double(p.epsilon) << ',' << p.num_correlations << '\n';
}

void write_pair_list(std::ostream& out, const SweepPoint& point) {
    out << "j,k,weight\n";
    for (std::size_t p = 0; p < point.selected.size(); ++p) {
        const auto [j, k] = point.selected.pairs()[p];
        out << j << ',' << k << ',' << io::format_double(point.weights[p]) << '\n';
    }
}

}  // namespace weaklabel
