#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace apex {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using TripleId = std::int32_t;
using Timestamp = std::int64_t;

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    bool operator==(const Triple& o) const {
        return head == o.head && relation == o.relation && tail == o.tail;
    }
};

// Sparse non-negative vector keyed by entity or relation id. Absent key == 0.
using SparseHeat = std::unordered_map<std::int32_t, double>;

inline double heat_at(const SparseHeat& v, std::int32_t key) {
    auto it = v.find(key);
    return it == v.end() ? 0.0 : it->second;
}

// One mutation of a sorted heat index entry. Exactly one of old/new may be
// absent (pure insert / pure delete); when both are present they differ.
template <typename Key>
struct HeatChange {
    Key key;
    std::optional<double> old_value;
    std::optional<double> new_value;
};

using ChangeSet = std::vector<HeatChange<TripleId>>;
using EntityChangeSet = std::vector<HeatChange<EntityId>>;

}  // namespace apex
