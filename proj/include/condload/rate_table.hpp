// Weighted sampler over a fixed set of non-negative rates.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace condload {

/// Complete binary sum tree. Updating one rate and drawing an index are both
/// O(log n). Internal nodes are recomputed from their children on every
/// update, so the stored total never accumulates add/subtract drift; refresh()
/// still rebuilds the whole tree on request.
class RateTable {
public:
    RateTable() = default;
    explicit RateTable(std::size_t n);

    std::size_t size() const { return size_; }
    double total() const { return tree_.empty() ? 0.0 : tree_[1]; }
    double rate(std::size_t i) const { return tree_[capacity_ + i]; }

    void assign(std::span<const double> rates);
    void set(std::size_t i, double rate);

    /// Index i with probability rate(i) / total(), given u uniform in [0, total()).
    /// Zero-rate entries are never returned while total() > 0. If `residual`
    /// is given it receives the part of u that falls inside the chosen entry.
    std::size_t sample(double u, double* residual = nullptr) const;

    /// Plain sum over the leaves.
    double recomputed_total() const;
    void refresh();

private:
    std::size_t size_ = 0;
    std::size_t capacity_ = 0;
    std::vector<double> tree_;
};

}  // namespace condload
