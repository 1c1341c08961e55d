#include "condload/rate_table.hpp"

#include "condload/units.hpp"

namespace condload {

RateTable::RateTable(std::size_t n) : size_(n)
{
    capacity_ = 1;
    while (capacity_ < n) capacity_ <<= 1;
    tree_.assign(2 * capacity_, 0.0);
}

void RateTable::assign(std::span<const double> rates)
{
    if (rates.size() != size_) throw InvalidParameter("rate table size mismatch");
    for (std::size_t i = 0; i < size_; ++i) {
        if (!(rates[i] >= 0.0)) throw InvalidParameter("rates must be non-negative");
        tree_[capacity_ + i] = rates[i];
    }
    refresh();
}

void RateTable::set(std::size_t i, double rate)
{
    std::size_t node = capacity_ + i;
    tree_[node] = rate;
    for (node >>= 1; node > 0; node >>= 1) tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
}

std::size_t RateTable::sample(double u, double* residual) const
{
    std::size_t node = 1;
    while (node < capacity_) {
        const std::size_t left = 2 * node;
        const double left_sum = tree_[left];
        if (tree_[left + 1] <= 0.0 || (u < left_sum && left_sum > 0.0)) {
            node = left;
        } else {
            u -= left_sum;
            node = left + 1;
        }
    }
    if (residual) *residual = u;
    return node - capacity_;
}

double RateTable::recomputed_total() const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < size_; ++i) sum += tree_[capacity_ + i];
    return sum;
}

void RateTable::refresh()
{
    for (std::size_t node = capacity_ - 1; node > 0; --node)
        tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
}

}  // namespace condload
