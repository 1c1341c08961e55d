// Energy-conserving two-body collisions between trap shells, with the
// ergodic quantum-Boltzmann rate for each channel.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "condload/occupancy.hpp"
#include "condload/rate_table.hpp"

namespace condload {

/// Directed channel (m1, m2) -> (m3, m4) with m1 <= m2, m3 <= m4,
/// m1 + m2 == m3 + m4 and {m1, m2} != {m3, m4}.
struct CollisionChannel {
    int m1 = 0;
    int m2 = 0;
    int m3 = 0;
    int m4 = 0;

    friend bool operator==(const CollisionChannel&, const CollisionChannel&) = default;
};

bool is_valid_channel(const CollisionChannel& ch, int shells);

/// All channels for `shells` shells, grouped by m1 + m2, then by in-pair and
/// out-pair (both ascending in their lower shell).
std::vector<CollisionChannel> enumerate_channels(int shells);

/// Delta (m_j+1)(m_j+2) N1 (N2 - d12) (N3 + g3) (N4 + g4 + d34) / (g1 g2 g3 g4)
/// with m_j the lowest of the four shells. Read as an event rate.
double channel_rate(const ShellOccupancy& state, const CollisionChannel& ch, double delta);

/// Applies the four population changes. No bounds or evaporation handling.
void apply_collision(ShellOccupancy& state, const CollisionChannel& ch);

/// Channel list plus, for every shell, the channels whose rate depends on it.
class ChannelIndex {
public:
    explicit ChannelIndex(int shells);

    int shells() const { return shells_; }
    const std::vector<CollisionChannel>& channels() const { return channels_; }
    std::size_t size() const { return channels_.size(); }
    std::size_t index_of(const CollisionChannel& ch) const;

    /// Sorted indices of every channel touching any shell of `ch` (includes ch).
    std::vector<std::size_t> affected_channels(const CollisionChannel& ch) const;
    std::vector<std::size_t> affected_by_shells(std::span<const int> shells) const;

private:
    int shells_;
    std::vector<CollisionChannel> channels_;
    std::vector<std::vector<std::size_t>> by_shell_;
    std::vector<std::size_t> sum_offset_;  // first channel index for each m1 + m2
};

/// Per-channel rates in a RateTable, refreshed through the affected-channel
/// index after each event. Cost per update grows with the channel count, so
/// the engine uses CollisionRates instead; this one is kept as the direct
/// reference realization.
class ChannelRateTable {
public:
    ChannelRateTable(const ChannelIndex& index, double delta);

    void reset(const ShellOccupancy& state);
    void update_after(const ShellOccupancy& state, const CollisionChannel& event);
    void update_shells(const ShellOccupancy& state, std::span<const int> changed);

    double total() const { return table_.total(); }
    double rate(std::size_t channel) const { return table_.rate(channel); }
    const CollisionChannel& sample(double u) const;
    const RateTable& table() const { return table_; }

private:
    const ChannelIndex* index_;
    double delta_;
    RateTable table_;
};

/// Collision rates grouped by m1 + m2.
///
/// Within a group every channel rate factorizes into an in-pair factor, an
/// out-pair factor and the weight (m_j+1)(m_j+2) of the lower pair, so a group
/// total is an O(pairs) scan. Group totals sit in a RateTable; a population
/// change in one shell touches one pair per group.
class CollisionRates {
public:
    CollisionRates(int shells, double delta);

    int shells() const { return shells_; }
    double delta() const { return delta_; }
    double total() const { return groups_.total(); }
    double group_total(int sum) const { return groups_.rate(static_cast<std::size_t>(sum)); }

    void reset(const ShellOccupancy& state);
    void update_shells(const ShellOccupancy& state, std::span<const int> changed);

    /// Channel with probability rate / total(), u uniform in [0, total()).
    CollisionChannel sample(double u) const;

    /// Current rate of `ch` from the cached pair factors.
    double rate(const CollisionChannel& ch) const;

    /// Sum of the group totals recomputed from scratch.
    double recomputed_total(const ShellOccupancy& state) const;

private:
    struct Pair {
        int low;
        int high;
    };

    std::size_t pair_id(int a, int b) const
    {
        return pair_of_[static_cast<std::size_t>(a) * static_cast<std::size_t>(shells_) +
                        static_cast<std::size_t>(b)];
    }
    void refresh_pair(const ShellOccupancy& state, std::size_t id);
    double group_sum(int sum) const;

    int shells_;
    double delta_;
    std::vector<Pair> pairs_;
    std::vector<std::size_t> group_begin_;  // pairs of group s are [begin[s], begin[s+1])
    std::vector<std::size_t> pair_of_;
    std::vector<double> in_factor_;
    std::vector<double> out_factor_;
    std::vector<double> weight_;     // (m+1)(m+2) by shell
    std::vector<double> inv_degeneracy_;
    std::vector<char> dirty_;
    std::vector<int> dirty_list_;
    RateTable groups_;
};

}  // namespace condload
