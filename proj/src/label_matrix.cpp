#include "weaklabel/label_matrix.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "weaklabel/errors.hpp"
#include "weaklabel/io_util.hpp"

namespace weaklabel {

namespace {

bool entry_less(const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
}

std::string position(std::size_t row, std::size_t col) {
    return "(" + std::to_string(row) + ", " + std::to_string(col) + ")";
}

}  // namespace

LabelMatrix::LabelMatrix(std::size_t n, std::size_t m, std::vector<Entry> entries)
    : n_(n), m_(m) {
    std::erase_if(entries, [](const Entry& e) { return e.label == 0; });
    for (const auto& e : entries) {
        if (e.label != 1 && e.label != -1)
            throw DomainError("label " + std::to_string(e.label) + " at " + position(e.row, e.col) +
                              " is not in {-1, 0, 1}");
        if (e.row >= n || e.col >= m)
            throw DomainError("entry " + position(e.row, e.col) + " outside a " + std::to_string(n) + "x" +
                              std::to_string(m) + " matrix");
    }
    std::sort(entries.begin(), entries.end(), entry_less);
    const auto dup = std::adjacent_find(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.row == b.row && a.col == b.col;
    });
    if (dup != entries.end()) throw DuplicateError("duplicate entry at " + position(dup->row, dup->col));
    entries_ = std::move(entries);

    row_ptr_.assign(n_ + 1, 0);
    for (const auto& e : entries_) ++row_ptr_[e.row + 1];
    for (std::size_t i = 0; i < n_; ++i) row_ptr_[i + 1] += row_ptr_[i];
}

LabelMatrix LabelMatrix::from_dense(const std::vector<std::vector<int>>& rows, std::size_t m) {
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m)
            throw DimensionError("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                 " values, expected " + std::to_string(m));
        for (std::size_t j = 0; j < m; ++j) {
            const int v = rows[i][j];
            if (v < -1 || v > 1)
                throw DomainError("label " + std::to_string(v) + " at " + position(i, j) + " is not in {-1, 0, 1}");
            if (v != 0)
                entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                   static_cast<Label>(v)});
        }
    }
    return LabelMatrix(rows.size(), m, std::move(entries));
}

Label LabelMatrix::at(std::size_t i, std::size_t j) const {
    const auto r = row(i);
    const auto it = std::lower_bound(r.begin(), r.end(), j, [](const Entry& e, std::size_t col) { return e.col < col; });
    return (it != r.end() && it->col == j) ? it->label : Label{0};
}

void LabelMatrix::fill_dense_row(std::size_t i, std::span<Label> out) const {
    std::fill(out.begin(), out.end(), Label{0});
    for (const auto& e : row(i)) out[e.col] = e.label;
}

std::vector<Label> LabelMatrix::dense_row(std::size_t i) const {
    std::vector<Label> out(m_, 0);
    fill_dense_row(i, out);
    return out;
}

std::vector<std::vector<Label>> LabelMatrix::to_dense() const {
    std::vector<std::vector<Label>> out;
    out.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) out.push_back(dense_row(i));
    return out;
}

LabelMatrix LabelMatrix::negated() const {
    auto flipped = entries_;
    for (auto& e : flipped) e.label = static_cast<Label>(-e.label);
    return LabelMatrix(n_, m_, std::move(flipped));
}

GoldLabels::GoldLabels(std::vector<Label> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] != 1 && labels_[i] != -1)
            throw DomainError("gold label " + std::to_string(labels_[i]) + " at index " + std::to_string(i) +
                              " is not in {-1, 1}");
}

MatrixStats stats(const LabelMatrix& matrix) {
    const std::size_t n = matrix.rows();
    if (n == 0) throw EmptyMatrixError("matrix has no rows");
    MatrixStats s;
    s.positive_votes.assign(matrix.cols(), 0);
    s.negative_votes.assign(matrix.cols(), 0);
    std::size_t covered = 0, overlapped = 0, conflicted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = matrix.row(i);
        const auto counts = class_counts(r);
        for (const auto& e : r) ++(e.label > 0 ? s.positive_votes : s.negative_votes)[e.col];
        covered += r.size() >= 1;
        overlapped += r.size() >= 2;
        conflicted += counts.positive > 0 && counts.negative > 0;
    }
    const double dn = static_cast<double>(n);
    s.density = static_cast<double>(matrix.nnz()) / dn;
    s.coverage = static_cast<double>(covered) / dn;
    s.overlap = static_cast<double>(overlapped) / dn;
    s.conflict = static_cast<double>(conflicted) / dn;
    return s;
}

ClassCounts class_counts(std::span<const Label> row) {
    ClassCounts c;
    for (const Label v : row) {
        c.positive += v == 1;
        c.negative += v == -1;
    }
    return c;
}

ClassCounts class_counts(std::span<const Entry> row) {
    ClassCounts c;
    for (const auto& e : row) {
        c.positive += e.label == 1;
        c.negative += e.label == -1;
    }
    return c;
}

namespace {

Label parse_label(std::string_view text, std::size_t line_no) {
    const long long v = io::parse_int(text, line_no);
    if (v < -1 || v > 1)
        throw DomainError("line " + std::to_string(line_no) + ": label " + std::to_string(v) +
                          " is not in {-1, 0, 1}");
    return static_cast<Label>(v);
}

LabelMatrix read_dense(std::istream& in) {
    std::vector<Entry> entries;
    std::string line;
    std::size_t line_no = 0, n = 0, m = 0;
    bool have_width = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::is_skippable(line)) continue;
        const auto fields = io::split(line, ',');
        if (!have_width) {
            m = fields.size();
            have_width = true;
        } else if (fields.size() != m) {
            throw ParseError(line_no, "expected " + std::to_string(m) + " values, found " +
                                          std::to_string(fields.size()));
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const Label v = parse_label(fields[j], line_no);
            if (v != 0) entries.push_back({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(j), v});
        }
        ++n;
    }
    return LabelMatrix(n, m, std::move(entries));
}

LabelMatrix read_sparse(std::istream& in) {
    std::vector<Entry> entries;
    std::string line;
    std::size_t line_no = 0, n = 0, m = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::is_skippable(line)) continue;
        const auto fields = io::split(line, ',');
        if (!have_header) {
            if (fields.size() != 2) throw ParseError(line_no, "expected header 'n,m'");
            const auto hn = io::parse_int(fields[0], line_no);
            const auto hm = io::parse_int(fields[1], line_no);
            if (hn < 0 || hm < 0) throw ParseError(line_no, "negative dimension in header");
            n = static_cast<std::size_t>(hn);
            m = static_cast<std::size_t>(hm);
            have_header = true;
            continue;
        }
        if (fields.size() != 3) throw ParseError(line_no, "expected triplet 'row,col,label'");
        const auto r = io::parse_int(fields[0], line_no);
        const auto c = io::parse_int(fields[1], line_no);
        const Label v = parse_label(fields[2], line_no);
        if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= n || static_cast<std::size_t>(c) >= m)
            throw DomainError("line " + std::to_string(line_no) + ": entry (" + std::to_string(r) + ", " + std::to_string(c) + ") outside a " +
                              std::to_string(n) + "x" + std::to_string(m) + " matrix");
        if (v != 0) entries.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), v});
    }
    if (!have_header) throw ParseError(line_no, "missing 'n,m' header");
    return LabelMatrix(n, m, std::move(entries));
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

LabelMatrix read_matrix(std::istream& in, MatrixFormat format) {
    return format == MatrixFormat::Dense ? read_dense(in) : read_sparse(in);
}

void write_matrix(std::ostream& out, const LabelMatrix& matrix, MatrixFormat format) {
    if (format == MatrixFormat::Sparse) {
        out << matrix.rows() << ',' << matrix.cols() << '\n';
        for (const auto& e : matrix.entries()) out << e.row << ',' << e.col << ',' << int{e.label} << '\n';
        return;
    }
    std::vector<Label> row(matrix.cols());
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        matrix.fill_dense_row(i, row);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            out << int{row[j]};
        }
        out << '\n';
    }
}

LabelMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
    auto in = open_input(path);
    return read_matrix(in, format);
}

GoldLabels read_gold(std::istream& in) {
    std::vector<Label> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::is_skippable(line)) continue;
        const auto v = io::parse_int(line, line_no);
        if (v != 1 && v != -1)
            throw DomainError("line " + std::to_string(line_no) + ": gold label " + std::to_string(v) +
                              " is not in {-1, 1}");
        labels.push_back(static_cast<Label>(v));
    }
    return GoldLabels(std::move(labels));
}

void write_gold(std::ostream& out, const GoldLabels& gold) {
    for (const Label v : gold.values()) out << int{v} << '\n';
}

GoldLabels load_gold(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_gold(in);
}

void check_aligned(const LabelMatrix& matrix, const GoldLabels& gold) {
    if (gold.size() != matrix.rows())
        throw DimensionError("gold labels have " + std::to_string(gold.size()) + " rows but the matrix has " +
                             std::to_string(matrix.rows()));
}

}  // namespace weaklabel
