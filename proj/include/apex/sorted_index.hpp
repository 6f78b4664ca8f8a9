#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "apex/types.hpp"

namespace apex {

// Totally ordered heat index: descending value, ascending key among equal
// values, unique keys, positive values. Backed by a sorted array. Change
// batches are applied as binary-search deletes (mark and compact) followed by
// binary insertions; every ordering comparison made inside apply_changes is
// counted, so a batch of k changes against n entries costs O(k log n)
// comparisons regardless of the element moves behind it. Large insert batches
// switch to a sort-and-merge path to keep moves linear; the comparison
// counter stays honest there too.
template <typename Key>
class SortedHeatIndex {
  public:
    struct Entry {
        double value;
        Key key;
    };

    SortedHeatIndex() = default;

    // Bulk construction; does not touch the comparison counter.
    static SortedHeatIndex from_unsorted(std::vector<Entry> entries) {
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            return a.value > b.value || (a.value == b.value && a.key < b.key);
        });
        for (std::size_t i = 1; i < entries.size(); ++i) {
            if (entries[i - 1].value == entries[i].value && entries[i - 1].key == entries[i].key) {
                throw std::runtime_error("sorted index: duplicate entry in bulk build");
            }
        }
        SortedHeatIndex idx;
        idx.entries_ = std::move(entries);
        return idx;
    }

    void apply_changes(const std::vector<HeatChange<Key>>& changes) {
        // Delete phase: locate every stale entry by (old value, key), then
        // compact once.
        std::vector<std::size_t> doomed;
        for (const auto& c : changes) {
            if (!c.old_value) {
                if (!c.new_value) {
                    throw std::invalid_argument("change record carries neither an old nor a new value");
                }
                continue;
            }
            Entry target{*c.old_value, c.key};
            std::size_t pos = lower_bound_pos(target);
            if (pos == entries_.size() || !equals_counted(entries_[pos], target)) {
                throw std::runtime_error("sorted index desync: stale value not found for key " +
                                         std::to_string(static_cast<long long>(c.key)));
            }
            doomed.push_back(pos);
        }
        if (!doomed.empty()) {
            std::sort(doomed.begin(), doomed.end());
            std::size_t out = doomed[0], skip = 0;
            for (std::size_t i = doomed[0]; i < entries_.size(); ++i) {
                if (skip < doomed.size() && doomed[skip] == i) {
                    ++skip;
                    continue;
                }
                entries_[out++] = entries_[i];
            }
            entries_.resize(out);
        }

        std::vector<Entry> fresh;
        for (const auto& c : changes) {
            if (!c.new_value) continue;
            if (!(*c.new_value > 0.0) || !std::isfinite(*c.new_value)) {
                throw std::runtime_error("sorted index: inserted value must be positive and finite");
            }
            fresh.push_back(Entry{*c.new_value, c.key});
        }
        if (fresh.empty()) return;

        if (fresh.size() <= kLiteralInsertLimit) {
            for (const Entry& e : fresh) {
                std::size_t pos = lower_bound_pos(e);
                if (pos < entries_.size() && equals_counted(entries_[pos], e)) {
                    throw std::runtime_error("sorted index desync: inserting existing entry");
                }
                entries_.insert(entries_.begin() + static_cast<std::ptrdiff_t>(pos), e);
            }
            return;
        }

        std::sort(fresh.begin(), fresh.end(),
                  [this](const Entry& a, const Entry& b) { return before(a, b); });
        std::vector<Entry> merged;
        merged.reserve(entries_.size() + fresh.size());
        std::size_t i = 0, j = 0;
        while (i < entries_.size() && j < fresh.size()) {
            if (before(fresh[j], entries_[i])) {
                merged.push_back(fresh[j++]);
            } else {
                merged.push_back(entries_[i++]);
            }
        }
        merged.insert(merged.end(), entries_.begin() + static_cast<std::ptrdiff_t>(i), entries_.end());
        merged.insert(merged.end(), fresh.begin() + static_cast<std::ptrdiff_t>(j), fresh.end());
        entries_ = std::move(merged);
    }

    std::vector<Key> top_k(std::size_t k) const {
        std::vector<Key> out;
        out.reserve(std::min(k, entries_.size()));
        for (std::size_t i = 0; i < entries_.size() && i < k; ++i) {
            out.push_back(entries_[i].key);
        }
        return out;
    }

    // Uniform decay hook. Multiplying by a common positive factor is monotone,
    // but rounding can land two neighbouring values on the same double; inside
    // such a freshly collapsed run the keys must come back to ascending order
    // or later binary searches miss. Collapses only merge adjacent entries, so
    // one linear pass over equal-value runs restores the invariant.
    void scale_values(double factor) {
        if (!(factor > 0.0) || !std::isfinite(factor)) {
            throw std::runtime_error("sorted index: scale factor must be positive and finite");
        }
        if (factor == 1.0) return;
        for (Entry& e : entries_) e.value *= factor;
        std::size_t i = 0;
        while (i + 1 < entries_.size()) {
            if (entries_[i].value != entries_[i + 1].value) {
                ++i;
                continue;
            }
            std::size_t j = i + 1;
            while (j + 1 < entries_.size() && entries_[j + 1].value == entries_[i].value) ++j;
            std::sort(entries_.begin() + static_cast<std::ptrdiff_t>(i),
                      entries_.begin() + static_cast<std::ptrdiff_t>(j + 1),
                      [](const Entry& a, const Entry& b) { return a.key < b.key; });
            i = j + 1;
        }
    }

    std::uint64_t comparison_count() const { return comparisons_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::vector<Entry>& entries() const { return entries_; }
    void clear() { entries_.clear(); }

  private:
    static constexpr std::size_t kLiteralInsertLimit = 256;

    bool before(const Entry& a, const Entry& b) {
        ++comparisons_;
        return a.value > b.value || (a.value == b.value && a.key < b.key);
    }

    bool equals_counted(const Entry& a, const Entry& b) {
        ++comparisons_;
        return a.value == b.value && a.key == b.key;
    }

    // First position whose entry does not precede target.
    std::size_t lower_bound_pos(const Entry& target) {
        std::size_t lo = 0, hi = entries_.size();
        while (lo < hi) {
            std::size_t mid = lo + (hi - lo) / 2;
            if (before(entries_[mid], target)) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        return lo;
    }

    std::vector<Entry> entries_;
    std::uint64_t comparisons_ = 0;
};

}  // namespace apex
