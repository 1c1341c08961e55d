#include "condload/collision.hpp"

#include <algorithm>

#include "condload/units.hpp"

namespace condload {

namespace {

// Pairs (a, s - a) with a <= s - a and both below `shells`, ascending in a.
int lowest_in_group(int sum, int shells) { return std::max(0, sum - (shells - 1)); }
int pairs_in_group(int sum, int shells) { return sum / 2 - lowest_in_group(sum, shells) + 1; }

}  // namespace

bool is_valid_channel(const CollisionChannel& ch, int shells)
{
    const auto in_range = [shells](int m) { return m >= 0 && m < shells; };
    if (!in_range(ch.m1) || !in_range(ch.m2) || !in_range(ch.m3) || !in_range(ch.m4)) return false;
    if (ch.m1 > ch.m2 || ch.m3 > ch.m4) return false;
    if (ch.m1 + ch.m2 != ch.m3 + ch.m4) return false;
    return ch.m1 != ch.m3;
}

std::vector<CollisionChannel> enumerate_channels(int shells)
{
    if (shells < 1) throw InvalidParameter("shell count must be >= 1");
    std::vector<CollisionChannel> out;
    for (int s = 0; s <= 2 * (shells - 1); ++s) {
        const int lo = lowest_in_group(s, shells);
        const int hi = s / 2;
        for (int a = lo; a <= hi; ++a)
            for (int c = lo; c <= hi; ++c)
                if (a != c) out.push_back({a, s - a, c, s - c});
    }
    return out;
}

double channel_rate(const ShellOccupancy& state, const CollisionChannel& ch, double delta)
{
    const auto n = [&](int m) { return static_cast<double>(state[m]); };
    const auto g = [](int m) { return static_cast<double>(shell_degeneracy(m)); };
    const int mj = std::min(std::min(ch.m1, ch.m2), std::min(ch.m3, ch.m4));
    const double prefactor = static_cast<double>((mj + 1) * (mj + 2));
    const double d12 = ch.m1 == ch.m2 ? 1.0 : 0.0;
    const double d34 = ch.m3 == ch.m4 ? 1.0 : 0.0;
    const double numerator =
        n(ch.m1) * (n(ch.m2) - d12) * (n(ch.m3) + g(ch.m3)) * (n(ch.m4) + g(ch.m4) + d34);
    return delta * prefactor * numerator / (g(ch.m1) * g(ch.m2) * g(ch.m3) * g(ch.m4));
}

void apply_collision(ShellOccupancy& state, const CollisionChannel& ch)
{
    state.add(ch.m1, -1);
    state.add(ch.m2, -1);
    state.add(ch.m3, 1);
    state.add(ch.m4, 1);
}

// ---------------------------------------------------------------------------

ChannelIndex::ChannelIndex(int shells)
    : shells_(shells), channels_(enumerate_channels(shells)),
      by_shell_(static_cast<std::size_t>(shells))
{
    for (std::size_t c = 0; c < channels_.size(); ++c) {
        const auto& ch = channels_[c];
        int ms[4] = {ch.m1, ch.m2, ch.m3, ch.m4};
        std::sort(ms, ms + 4);
        for (int k = 0; k < 4; ++k)
            if (k == 0 || ms[k] != ms[k - 1]) by_shell_[static_cast<std::size_t>(ms[k])].push_back(c);
    }
    sum_offset_.assign(static_cast<std::size_t>(2 * shells), 0);
    std::size_t offset = 0;
    for (int s = 0; s <= 2 * (shells - 1); ++s) {
        sum_offset_[static_cast<std::size_t>(s)] = offset;
        const auto p = static_cast<std::size_t>(pairs_in_group(s, shells));
        offset += p * (p - 1);
    }
}

std::size_t ChannelIndex::index_of(const CollisionChannel& ch) const
{
    if (!is_valid_channel(ch, shells_)) throw InvalidParameter("invalid collision channel");
    const int s = ch.m1 + ch.m2;
    const int lo = lowest_in_group(s, shells_);
    const auto p = static_cast<std::size_t>(pairs_in_group(s, shells_));
    const auto i = static_cast<std::size_t>(ch.m1 - lo);
    const auto o = static_cast<std::size_t>(ch.m3 - lo);
    return sum_offset_[static_cast<std::size_t>(s)] + i * (p - 1) + (o < i ? o : o - 1);
}

std::vector<std::size_t> ChannelIndex::affected_channels(const CollisionChannel& ch) const
{
    const int shells[4] = {ch.m1, ch.m2, ch.m3, ch.m4};
    return affected_by_shells(shells);
}

std::vector<std::size_t> ChannelIndex::affected_by_shells(std::span<const int> shells) const
{
    std::vector<std::size_t> out;
    for (int m : shells) {
        const auto& list = by_shell_.at(static_cast<std::size_t>(m));
        out.insert(out.end(), list.begin(), list.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// ---------------------------------------------------------------------------

ChannelRateTable::ChannelRateTable(const ChannelIndex& index, double delta)
    : index_(&index), delta_(delta), table_(index.size())
{
}

void ChannelRateTable::reset(const ShellOccupancy& state)
{
    std::vector<double> rates(index_->size());
    for (std::size_t c = 0; c < rates.size(); ++c)
        rates[c] = channel_rate(state, index_->channels()[c], delta_);
    table_.assign(rates);
}

void ChannelRateTable::update_after(const ShellOccupancy& state, const CollisionChannel& event)
{
    for (std::size_t c : index_->affected_channels(event))
        table_.set(c, channel_rate(state, index_->channels()[c], delta_));
}

void ChannelRateTable::update_shells(const ShellOccupancy& state, std::span<const int> changed)
{
    for (std::size_t c : index_->affected_by_shells(changed))
        table_.set(c, channel_rate(state, index_->channels()[c], delta_));
}

const CollisionChannel& ChannelRateTable::sample(double u) const
{
    return index_->channels()[table_.sample(u)];
}

// ---------------------------------------------------------------------------

CollisionRates::CollisionRates(int shells, double delta) : shells_(shells), delta_(delta)
{
    if (shells < 1) throw InvalidParameter("shell count must be >= 1");
    if (!(delta >= 0.0)) throw InvalidParameter("collision unit rate must be >= 0");
    const int groups = 2 * shells - 1;
    pair_of_.assign(static_cast<std::size_t>(shells) * static_cast<std::size_t>(shells), 0);
    group_begin_.reserve(static_cast<std::size_t>(groups) + 1);
    for (int s = 0; s < groups; ++s) {
        group_begin_.push_back(pairs_.size());
        const int lo = lowest_in_group(s, shells);
        for (int a = lo; a <= s / 2; ++a) {
            pair_of_[static_cast<std::size_t>(a) * static_cast<std::size_t>(shells) +
                     static_cast<std::size_t>(s - a)] = pairs_.size();
            pairs_.push_back({a, s - a});
        }
    }
    group_begin_.push_back(pairs_.size());
    in_factor_.assign(pairs_.size(), 0.0);
    out_factor_.assign(pairs_.size(), 0.0);
    for (int m = 0; m < shells; ++m) {
        weight_.push_back(static_cast<double>((m + 1) * (m + 2)));
        inv_degeneracy_.push_back(1.0 / static_cast<double>(shell_degeneracy(m)));
    }
    dirty_.assign(static_cast<std::size_t>(groups), 0);
    groups_ = RateTable(static_cast<std::size_t>(groups));
}

void CollisionRates::refresh_pair(const ShellOccupancy& state, std::size_t id)
{
    const auto [a, b] = pairs_[id];
    const double na = static_cast<double>(state[a]);
    const double ga = static_cast<double>(shell_degeneracy(a));
    const double inv = inv_degeneracy_[static_cast<std::size_t>(a)] *
                       inv_degeneracy_[static_cast<std::size_t>(b)];
    if (a == b) {
        in_factor_[id] = na * (na - 1.0) * inv;
        out_factor_[id] = (na + ga) * (na + ga + 1.0) * inv;
    } else {
        const double nb = static_cast<double>(state[b]);
        const double gb = static_cast<double>(shell_degeneracy(b));
        in_factor_[id] = na * nb * inv;
        out_factor_[id] = (na + ga) * (nb + gb) * inv;
    }
}

double CollisionRates::group_sum(int sum) const
{
    const std::size_t begin = group_begin_[static_cast<std::size_t>(sum)];
    const std::size_t end = group_begin_[static_cast<std::size_t>(sum) + 1];
    double suffix_in = 0.0;
    double suffix_out = 0.0;
    double total = 0.0;
    for (std::size_t k = end; k-- > begin;) {
        const double w = weight_[static_cast<std::size_t>(pairs_[k].low)];
        total += w * (in_factor_[k] * suffix_out + out_factor_[k] * suffix_in);
        suffix_in += in_factor_[k];
        suffix_out += out_factor_[k];
    }
    return total;
}

void CollisionRates::reset(const ShellOccupancy& state)
{
    if (state.shells() != shells_) throw InvalidParameter("occupancy shell count mismatch");
    for (std::size_t id = 0; id < pairs_.size(); ++id) refresh_pair(state, id);
    std::vector<double> totals(group_begin_.size() - 1);
    for (std::size_t s = 0; s < totals.size(); ++s) totals[s] = delta_ * group_sum(static_cast<int>(s));
    groups_.assign(totals);
}

void CollisionRates::update_shells(const ShellOccupancy& state, std::span<const int> changed)
{
    for (int x : changed) {
        for (int k = 0; k < shells_; ++k) {
            refresh_pair(state, x <= k ? pair_id(x, k) : pair_id(k, x));
            auto& flag = dirty_[static_cast<std::size_t>(x + k)];
            if (!flag) {
                flag = 1;
                dirty_list_.push_back(x + k);
            }
        }
    }
    for (int s : dirty_list_) {
        groups_.set(static_cast<std::size_t>(s), delta_ * group_sum(s));
        dirty_[static_cast<std::size_t>(s)] = 0;
    }
    dirty_list_.clear();
}

CollisionChannel CollisionRates::sample(double u) const
{
    double r = 0.0;
    const int s = static_cast<int>(groups_.sample(u, &r));
    r /= delta_;
    const std::size_t begin = group_begin_[static_cast<std::size_t>(s)];
    const std::size_t end = group_begin_[static_cast<std::size_t>(s) + 1];

    double out_total = 0.0;
    for (std::size_t k = begin; k < end; ++k) out_total += out_factor_[k];

    // In-pair: row i collects w(min(i, o)) A_i B_o over o != i.
    std::size_t in = end;
    std::size_t last_nonzero = end;
    double prefix_weighted_out = 0.0;
    double prefix_out = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
        const double w = weight_[static_cast<std::size_t>(pairs_[k].low)];
        const double after = std::max(0.0, out_total - prefix_out - out_factor_[k]);
        const double row = in_factor_[k] * (prefix_weighted_out + w * after);
        if (row > 0.0) {
            last_nonzero = k;
            if (r < row) {
                in = k;
                break;
            }
            r -= row;
        }
        prefix_weighted_out += w * out_factor_[k];
        prefix_out += out_factor_[k];
    }
    if (in == end) {
        in = last_nonzero;
        r = 0.0;
    }

    std::size_t out = end;
    last_nonzero = end;
    for (std::size_t k = begin; k < end; ++k) {
        if (k == in) continue;
        const std::size_t low = std::min(k, in);
        const double rate = weight_[static_cast<std::size_t>(pairs_[low].low)] * in_factor_[in] *
                            out_factor_[k];
        if (rate > 0.0) {
            last_nonzero = k;
            if (r < rate) {
                out = k;
                break;
            }
            r -= rate;
        }
    }
    if (out == end) out = last_nonzero;
    return {pairs_[in].low, pairs_[in].high, pairs_[out].low, pairs_[out].high};
}

double CollisionRates::rate(const CollisionChannel& ch) const
{
    const std::size_t in = pair_id(ch.m1, ch.m2);
    const std::size_t out = pair_id(ch.m3, ch.m4);
    const int low = std::min(ch.m1, ch.m3);
    return delta_ * weight_[static_cast<std::size_t>(low)] * in_factor_[in] * out_factor_[out];
}

double CollisionRates::recomputed_total(const ShellOccupancy& state) const
{
    double total = 0.0;
    for (const auto& ch : enumerate_channels(state.shells())) total += channel_rate(state, ch, delta_);
    return total;
}

}  // namespace condload
