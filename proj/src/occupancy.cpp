#include "condload/occupancy.hpp"

#include "condload/units.hpp"

namespace condload {

ShellOccupancy::ShellOccupancy(int shells)
{
    if (shells < 1) throw InvalidParameter("occupancy needs at least one shell");
    counts_.assign(static_cast<std::size_t>(shells), 0);
}

ShellOccupancy::ShellOccupancy(std::vector<std::int64_t> counts) : counts_(std::move(counts))
{
    if (counts_.empty()) throw InvalidParameter("occupancy needs at least one shell");
    for (std::size_t m = 0; m < counts_.size(); ++m) {
        if (counts_[m] < 0) throw InvalidParameter("negative shell population");
        total_ += counts_[m];
        quanta_ += counts_[m] * static_cast<std::int64_t>(m);
    }
}

void ShellOccupancy::set(int m, std::int64_t value)
{
    if (value < 0) throw InvalidParameter("negative shell population");
    add(m, value - counts_[static_cast<std::size_t>(m)]);
}

bool ShellOccupancy::consistent() const
{
    std::int64_t n = 0;
    std::int64_t q = 0;
    for (std::size_t m = 0; m < counts_.size(); ++m) {
        if (counts_[m] < 0) return false;
        n += counts_[m];
        q += counts_[m] * static_cast<std::int64_t>(m);
    }
    return n == total_ && q == quanta_;
}

}  // namespace condload
