#pragma once

#include <algorithm>
#include <utility>
#include <vector>

namespace boltzfrac {

// Disjoint sorted union of closed intervals. Touching intervals merge.
class IntervalUnion {
public:
    IntervalUnion() = default;
    explicit IntervalUnion(std::vector<std::pair<double, double>> raw) {
        std::sort(raw.begin(), raw.end());
        for (const auto& [lo, hi] : raw) append_merge(lo, hi);
    }

    // Insert one interval, keeping the normalized form. Empty input is dropped.
    void add(double lo, double hi) {
        if (!(lo < hi)) return;
        auto it = std::lower_bound(ivs_.begin(), ivs_.end(), std::make_pair(lo, lo));
        if (it != ivs_.begin() && std::prev(it)->second >= lo) --it;
        if (it == ivs_.end() || it->first > hi) {
            ivs_.insert(it, {lo, hi});
            return;
        }
        it->first = std::min(it->first, lo);
        auto last = it;
        while (last != ivs_.end() && last->first <= hi) {
            it->second = std::max({it->second, hi, last->second});
            ++last;
        }
        ivs_.erase(std::next(it), last);
    }

    const std::vector<std::pair<double, double>>& intervals() const { return ivs_; }
    bool empty() const { return ivs_.empty(); }
    std::size_t size() const { return ivs_.size(); }

    double total_length() const {
        double s = 0.0;
        for (const auto& [lo, hi] : ivs_) s += hi - lo;
        return s;
    }

    bool contains(double t) const {
        auto it = std::upper_bound(ivs_.begin(), ivs_.end(), std::make_pair(t, t),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        if (it == ivs_.begin()) return false;
        return std::prev(it)->second >= t;
    }

private:
    void append_merge(double lo, double hi) {
        if (!(lo < hi)) return;
        if (!ivs_.empty() && ivs_.back().second >= lo) {
            ivs_.back().second = std::max(ivs_.back().second, hi);
        } else {
            ivs_.push_back({lo, hi});
        }
    }

    std::vector<std::pair<double, double>> ivs_;
};

}  // namespace boltzfrac
