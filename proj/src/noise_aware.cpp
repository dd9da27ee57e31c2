#include "weaklabel/noise_aware.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "weaklabel/errors.hpp"
#include "weaklabel/io_util.hpp"
#include "weaklabel/numeric.hpp"

namespace weaklabel {

FeatureSet::FeatureSet(std::size_t n, std::size_t d, std::vector<double> values)
    : n_(n), d_(d), values_(std::move(values)) {
    if (values_.size() != n * d)
        throw DimensionError("feature buffer has " + std::to_string(values_.size()) + " values, expected " +
                             std::to_string(n) + "x" + std::to_string(d));
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("features must be finite");
}

FeatureSet FeatureSet::subset(std::span<const std::size_t> rows) const {
    std::vector<double> out;
    out.reserve(rows.size() * d_);
    for (const auto i : rows) {
        const auto r = row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    return FeatureSet(rows.size(), d_, std::move(out));
}

double DiscModel::score(std::span<const double> x) const {
    double s = bias;
    for (std::size_t k = 0; k < weights.size(); ++k) s += weights[k] * x[k];
    return s;
}

namespace {

void check_model(const DiscModel& model, const FeatureSet& features) {
    if (model.weights.size() != features.dims())
        throw DimensionError("model has " + std::to_string(model.weights.size()) + " weights but features have " +
                             std::to_string(features.dims()) + " columns");
}

}  // namespace

double noise_aware_loss(const DiscModel& model, const FeatureSet& features, const ProbLabels& probs,
                        LossGradient* grad) {
    check_model(model, features);
    if (probs.probs.size() != features.rows())
        throw DimensionError("got " + std::to_string(probs.probs.size()) + " probabilistic labels for " +
                             std::to_string(features.rows()) + " feature rows");
    if (grad) {
        grad->weights.assign(features.dims(), 0.0);
        grad->bias = 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto x = features.row(i);
        const double s = model.score(x);
        const double p = probs.probs[i];
        // l(s, +1) = log(1 + e^-s), l(s, -1) = log(1 + e^s)
        total += p * log1p_exp(-s) + (1.0 - p) * log1p_exp(s);
        if (grad) {
            const double ds = sigmoid(s) - p;
            for (std::size_t k = 0; k < x.size(); ++k) grad->weights[k] += ds * x[k];
            grad->bias += ds;
        }
    }
    return total;
}

DiscModel train(const FeatureSet& features, const ProbLabels& probs, const FitConfig& config) {
    config.validate();
    const std::size_t n = features.rows();
    const std::size_t d = features.dims();
    if (n == 0) throw EmptyMatrixError("cannot train on zero rows");
    const double dn = static_cast<double>(n);

    auto objective = [&](const DiscModel& m, LossGradient* g) {
        double value = noise_aware_loss(m, features, probs, g) / dn;
        for (std::size_t k = 0; k < d; ++k) value += config.l2_reg * m.weights[k] * m.weights[k];
        if (g) {
            for (std::size_t k = 0; k < d; ++k) g->weights[k] = g->weights[k] / dn + 2.0 * config.l2_reg * m.weights[k];
            g->bias /= dn;
        }
        return value;
    };

    auto model = DiscModel::zeros(d);
    LossGradient grad;
    double value = objective(model, &grad);
    double step = std::max(config.step_size, 1.0);
    DiscModel trial = model;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double norm_sq = grad.bias * grad.bias, worst = std::abs(grad.bias);
        for (double g : grad.weights) {
            norm_sq += g * g;
            worst = std::max(worst, std::abs(g));
        }
        if (worst < config.tolerance) break;

        bool accepted = false;
        while (step > 1e-14) {
            for (std::size_t k = 0; k < d; ++k) trial.weights[k] = model.weights[k] - step * grad.weights[k];
            trial.bias = model.bias - step * grad.bias;
            const double next = objective(trial, nullptr);
            if (!std::isfinite(next)) throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
            if (next <= value - 1e-4 * step * norm_sq) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        model = trial;
        value = objective(model, &grad);
        step *= 2.0;
    }
    return model;
}

std::vector<double> predict(const DiscModel& model, const FeatureSet& features) {
    check_model(model, features);
    std::vector<double> out(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) out[i] = sigmoid(model.score(features.row(i)));
    return out;
}

FeatureSet read_features(std::istream& in) {
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0, n = 0, d = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::is_skippable(line)) continue;
        auto row = io::parse_doubles(line, line_no);
        if (n == 0) {
            d = row.size();
        } else if (row.size() != d) {
            throw ParseError(line_no, "expected " + std::to_string(d) + " features, found " +
                                          std::to_string(row.size()));
        }
        for (double v : row)
            if (!std::isfinite(v)) throw DomainError("line " + std::to_string(line_no) + ": non-finite feature");
        values.insert(values.end(), row.begin(), row.end());
        ++n;
    }
    return FeatureSet(n, d, std::move(values));
}

void write_features(std::ostream& out, const FeatureSet& features) {
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto r = features.row(i);
        out << io::join_doubles(std::vector<double>(r.begin(), r.end())) << '\n';
    }
}

FeatureSet load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_features(in);
}

void write_disc_model(std::ostream& out, const DiscModel& model) {
    out << "d=" << model.weights.size() << '\n';
    out << "weights=" << io::join_doubles(model.weights) << '\n';
    out << "bias=" << io::format_double(model.bias) << '\n';
}

DiscModel read_disc_model(std::istream& in) {
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::is_skippable(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
        kv[std::string(io::trim(line.substr(0, eq)))] = {line.substr(eq + 1), line_no};
    }
    for (const char* key : {"d", "weights", "bias"})
        if (!kv.count(key)) throw ParseError(line_no, std::string("model file is missing '") + key + "'");
    DiscModel model;
    const auto d = io::parse_u64(kv["d"].first, kv["d"].second);
    model.weights = io::parse_doubles(kv["weights"].first, kv["weights"].second);
    if (model.weights.size() != d)
        throw DimensionError("model declares d=" + std::to_string(d) + " but lists " +
                             std::to_string(model.weights.size()) + " weights");
    model.bias = io::parse_double(kv["bias"].first, kv["bias"].second);
    return model;
}

DiscModel load_disc_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_disc_model(in);
}

}  // namespace weaklabel
