#pragma once

#include <Eigen/SparseCore>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "apex/types.hpp"

namespace apex {

enum class KgFormat { Tab3, NTriples, Pipe3 };

struct LoadStats {
    std::size_t lines = 0;      // non-comment, non-blank lines seen
    std::size_t parsed = 0;     // lines that yielded a triple
    std::size_t malformed = 0;  // lines skipped as unparseable
    std::size_t duplicates = 0; // well-formed repeats of an existing triple
};

// Immutable triple store with interned labels, dense first-seen ids, an
// undirected binary adjacency and the lookup indexes the summarizers need.
// Self-loop triples are kept in the triple set but add no adjacency edge.
class KnowledgeGraph {
  public:
    using Adjacency = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    static KnowledgeGraph load(std::istream& in, KgFormat format, LoadStats* stats = nullptr);

    // Assembly from already-interned parts (generators, tests). Duplicate
    // triples are dropped; out-of-range ids are an error.
    static KnowledgeGraph from_parts(std::vector<std::string> entity_labels,
                                     std::vector<std::string> relation_labels,
                                     std::vector<Triple> triples);

    std::size_t n_entities() const { return entity_labels_.size(); }
    std::size_t n_relations() const { return relation_labels_.size(); }
    std::size_t n_triples() const { return triples_.size(); }

    std::optional<EntityId> entity_id(std::string_view label) const;
    std::optional<RelationId> relation_id(std::string_view label) const;
    const std::string& entity_label(EntityId e) const;
    const std::string& relation_label(RelationId r) const;

    const Triple& triple(TripleId t) const;
    const std::vector<Triple>& triples() const { return triples_; }

    const Adjacency& adjacency() const { return adjacency_; }
    std::vector<EntityId> neighbors(EntityId e) const;
    std::int32_t degree(EntityId e) const;

    // Triples (head, relation, *), sorted by tail.
    std::span<const TripleId> answer_triples(EntityId head, RelationId relation) const;
    // Distinct tails of (head, relation, *), ascending.
    std::vector<EntityId> answer_tails(EntityId head, RelationId relation) const;

    // Triples having e as head or tail (self-loops listed once).
    std::span<const TripleId> incident_triples(EntityId e) const;
    std::span<const TripleId> relation_triples(RelationId r) const;
    // Distinct relations e heads, ascending.
    std::span<const RelationId> head_relations(EntityId e) const;

    void export_tab3(std::ostream& out) const;

  private:
    void check_entity(EntityId e) const;
    void check_relation(RelationId r) const;
    void finalize();

    std::vector<std::string> entity_labels_;
    std::vector<std::string> relation_labels_;
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::vector<Triple> triples_;

    Adjacency adjacency_;

    // (head, relation) groups over triple ids sorted by (head, relation, tail).
    std::vector<TripleId> by_head_rel_;
    std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> group_of_;

    std::vector<std::uint32_t> incident_offsets_;
    std::vector<TripleId> incident_ids_;
    std::vector<std::uint32_t> rel_offsets_;
    std::vector<TripleId> rel_ids_;
    std::vector<std::uint32_t> head_rel_offsets_;
    std::vector<RelationId> head_rels_;
};

}  // namespace apex
