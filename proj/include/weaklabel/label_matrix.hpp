#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace weaklabel {

// A source output or class label. +1 / -1 are votes, 0 is an abstention.
using Label = std::int8_t;

struct Entry {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    Label label = 0;

    friend bool operator==(const Entry&, const Entry&) = default;
};

enum class MatrixFormat { Dense, Sparse };

// Observed outputs of m labeling sources on n data points.
//
// Stored as (row, col)-sorted triplets with a row offset table. Abstentions
// are never stored; only +1 and -1 entries appear in entries(). Immutable
// after construction.
class LabelMatrix {
public:
    LabelMatrix() = default;

    // Validates ranges and values; throws DomainError for a stored value
    // outside {-1,+1} or an out-of-range index, DuplicateError for a repeated
    // (row, col). Zero-valued entries are dropped.
    LabelMatrix(std::size_t n, std::size_t m, std::vector<Entry> entries);

    // Rows of length m with values in {-1,0,1}.
    static LabelMatrix from_dense(const std::vector<std::vector<int>>& rows, std::size_t m);

    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return m_; }
    std::size_t nnz() const noexcept { return entries_.size(); }

    std::span<const Entry> entries() const noexcept { return entries_; }
    std::span<const Entry> row(std::size_t i) const noexcept {
        return {entries_.data() + row_ptr_[i], entries_.data() + row_ptr_[i + 1]};
    }

    Label at(std::size_t i, std::size_t j) const;
    std::vector<Label> dense_row(std::size_t i) const;
    void fill_dense_row(std::size_t i, std::span<Label> out) const;
    std::vector<std::vector<Label>> to_dense() const;

    LabelMatrix negated() const;

    friend bool operator==(const LabelMatrix& a, const LabelMatrix& b) {
        return a.n_ == b.n_ && a.m_ == b.m_ && a.entries_ == b.entries_;
    }

private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<Entry> entries_;
    std::vector<std::size_t> row_ptr_{0};
};

// Ground-truth labels, each -1 or +1.
class GoldLabels {
public:
    GoldLabels() = default;
    explicit GoldLabels(std::vector<Label> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    Label operator[](std::size_t i) const noexcept { return labels_[i]; }
    const std::vector<Label>& values() const noexcept { return labels_; }

    friend bool operator==(const GoldLabels&, const GoldLabels&) = default;

private:
    std::vector<Label> labels_;
};

struct MatrixStats {
    double density = 0.0;   // mean stored labels per row
    double coverage = 0.0;  // rows with >= 1 label
    double overlap = 0.0;   // rows with >= 2 labels
    double conflict = 0.0;  // rows with both a +1 and a -1
    std::vector<std::size_t> positive_votes;  // per column
    std::vector<std::size_t> negative_votes;  // per column
};

struct ClassCounts {
    std::size_t positive = 0;
    std::size_t negative = 0;

    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

// Throws EmptyMatrixError when n = 0.
MatrixStats stats(const LabelMatrix& matrix);

ClassCounts class_counts(std::span<const Label> row);
ClassCounts class_counts(std::span<const Entry> row);

LabelMatrix read_matrix(std::istream& in, MatrixFormat format);
void write_matrix(std::ostream& out, const LabelMatrix& matrix, MatrixFormat format);
LabelMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);

GoldLabels read_gold(std::istream& in);
void write_gold(std::ostream& out, const GoldLabels& gold);
GoldLabels load_gold(const std::filesystem::path& path);

// Throws DimensionError when gold.size() != matrix.rows().
void check_aligned(const LabelMatrix& matrix, const GoldLabels& gold);

}  // namespace weaklabel
