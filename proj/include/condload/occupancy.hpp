// Shell-resolved population of the ground-state trap.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace condload {

/// Integer population per energy shell with cached totals.
///
/// Shell m holds N_m atoms with energy (m + 3/2) hbar omega_g each. The total
/// atom number and the number of oscillator quanta sum(N_m m) are kept as
/// exact integers, so energy conservation can be asserted exactly.
class ShellOccupancy {
public:
    ShellOccupancy() = default;
    explicit ShellOccupancy(int shells);
    explicit ShellOccupancy(std::vector<std::int64_t> counts);

    int shells() const { return static_cast<int>(counts_.size()); }
    std::int64_t operator[](int m) const { return counts_[static_cast<std::size_t>(m)]; }
    std::span<const std::int64_t> counts() const { return counts_; }

    std::int64_t total() const { return total_; }
    std::int64_t quanta() const { return quanta_; }
    std::int64_t condensate() const { return counts_.empty() ? 0 : counts_[0]; }
    /// Total energy in units of hbar omega_g, including zero-point energy.
    double energy() const { return static_cast<double>(quanta_) + 1.5 * static_cast<double>(total_); }

    void add(int m, std::int64_t delta)
    {
        counts_[static_cast<std::size_t>(m)] += delta;
        total_ += delta;
        quanta_ += delta * m;
    }
    void set(int m, std::int64_t value);

    /// Recomputes the cached totals and the non-negativity invariant.
    bool consistent() const;

    friend bool operator==(const ShellOccupancy&, const ShellOccupancy&) = default;

private:
    std::vector<std::int64_t> counts_;
    std::int64_t total_ = 0;
    std::int64_t quanta_ = 0;
};

}  // namespace condload
