#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>

#include "apex/heat.hpp"
#include "apex/kg.hpp"
#include "apex/sorted_index.hpp"
#include "apex/types.hpp"

namespace apex {

// A summary subgraph: triples of the KG plus exactly the entities and
// relations they use. All three lists are ascending.
struct Pkg {
    std::vector<EntityId> entities;
    std::vector<RelationId> relations;
    std::vector<TripleId> triples;
    std::int64_t budget = 0;

    static Pkg from_triples(const KnowledgeGraph& kg, std::vector<TripleId> ids, std::int64_t budget);
};

// K = max(1, round(kappa * |T|)).
std::int64_t budget_from_ratio(const KnowledgeGraph& kg, double kappa);

struct SummarizerConfig {
    std::int64_t budget = 1;
    int r_apex = 1;  // rebuild the summary every r_apex timestamps; heat always advances
    DiffusionParams diffusion;
};

// Triple-heat summarizer: advances the interest state each step, mirrors the
// uniform decay into the sorted index, applies the change set, and at update
// timestamps rebuilds the summary from the top-K heated triples. Timestamp 0
// always rebuilds.
class Apex2Pipeline {
  public:
    Apex2Pipeline(const KnowledgeGraph& kg, SummarizerConfig config);

    const Pkg& step(const std::vector<Query>& new_queries);

    const Pkg& pkg() const { return pkg_; }
    const HeatState& state() const { return state_; }
    const SortedHeatIndex<TripleId>& index() const { return index_; }
    double last_step_seconds() const { return last_step_seconds_; }

  private:
    const KnowledgeGraph& kg_;
    SummarizerConfig config_;
    HeatState state_;
    SortedHeatIndex<TripleId> index_;
    Pkg pkg_;
    double last_step_seconds_ = 0.0;
};

// Entity-heat summarizer: entity heat decays by gamma and is diffused per
// step; at update timestamps the summary is grown greedily from the hottest
// entities, inducing every KG triple with both endpoints chosen, never
// exceeding the triple budget.
class Apex2NPipeline {
  public:
    Apex2NPipeline(const KnowledgeGraph& kg, SummarizerConfig config);

    const Pkg& step(const std::vector<Query>& new_queries);

    const Pkg& pkg() const { return pkg_; }
    const EntityHeatState& state() const { return state_; }
    const SortedHeatIndex<EntityId>& index() const { return index_; }
    double last_step_seconds() const { return last_step_seconds_; }

  private:
    const KnowledgeGraph& kg_;
    SummarizerConfig config_;
    EntityHeatState state_;
    SortedHeatIndex<EntityId> index_;
    Pkg pkg_;
    double last_step_seconds_ = 0.0;
};

// Shared greedy used by the entity-level methods: walk candidates in priority
// order; add the entity and every KG triple whose endpoints are then both
// chosen; stop before the first entity that would push the triple count past
// the budget (or once the budget is met).
Pkg induced_entity_pkg(const KnowledgeGraph& kg,
                       std::span<const EntityId> candidates,
                       std::int64_t budget);

void export_pkg_tab3(std::ostream& out, const Pkg& pkg, const KnowledgeGraph& kg);
void export_pkg_dot(std::ostream& out, const Pkg& pkg, const KnowledgeGraph& kg);

}  // namespace apex
