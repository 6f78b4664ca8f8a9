#pragma once

#include <iosfwd>
#include <unordered_map>

#include "apex/kg.hpp"
#include "apex/query.hpp"
#include "apex/types.hpp"

namespace apex {

struct DiffusionParams {
    double alpha = 0.3;    // per-hop damping, in [0, 1)
    int d = 1;             // diffusion depth, >= 0
    double gamma = 0.5;    // per-timestamp decay, in (0, 1]
    double eps_ths = 1e-9; // threshold elimination; entries <= eps_ths are dropped

    double gamma_cubed() const { return gamma * gamma * gamma; }
    void validate() const;
};

// Decayed interest state. Triple heat h is keyed by TripleId and always equals
// e[head]*r[relation]*e[tail] at its last non-decay update, decayed by
// gamma^3 per elapsed timestamp since. t is the last processed timestamp;
// a fresh state is at t == -1.
struct HeatState {
    SparseHeat q_total;
    SparseHeat e;
    SparseHeat r;
    std::unordered_map<TripleId, double> h;
    Timestamp t = -1;
};

// Entity-level interest state (no relation or triple tracking); e decays by
// gamma per timestamp.
struct EntityHeatState {
    SparseHeat q_total;
    SparseHeat e;
    Timestamp t = -1;
};

// Truncated heat diffusion: sum over l = 0..d of alpha^l * A^l * q, evaluated
// as d sparse matrix-vector products. Touches only entities within d hops of
// the support of q.
SparseHeat diffuse(const KnowledgeGraph& kg, const SparseHeat& q, double alpha, int d);

// Limit of the series above (solves (I - alpha*A) x = q by accumulating terms
// until the residual drops to 1e-10). Throws "series divergent" when the
// spectral radius of alpha*A is >= 1.
SparseHeat diffuse_closed_form(const KnowledgeGraph& kg, const SparseHeat& q, double alpha);

// Advances the state by one timestamp: decays q_total/e/r by gamma and every
// stored h entry by gamma^3, injects the new queries (all stamped t+1), and
// recomputes h on exactly the triples whose factors received a non-decay
// update. Entries falling to <= eps_ths are eliminated. Returns the h
// mutations (beyond uniform decay) sorted by key; old values are post-decay.
ChangeSet advance(HeatState& state,
                  const KnowledgeGraph& kg,
                  const std::vector<Query>& new_queries,
                  const DiffusionParams& params);

// Entity-level advance: decays q_total/e by gamma, injects, returns e
// mutations sorted by key.
EntityChangeSet advance_entity(EntityHeatState& state,
                               const KnowledgeGraph& kg,
                               const std::vector<Query>& new_queries,
                               const DiffusionParams& params);

// Oracle-style rebuild: evaluates the decayed sums over the whole log prefix
// (timestamps <= up_to_t) directly, then h over every triple with all factors
// nonzero, then one threshold-elimination pass.
HeatState recompute_scratch(const KnowledgeGraph& kg,
                            const QueryLog& log,
                            Timestamp up_to_t,
                            const DiffusionParams& params);

EntityHeatState recompute_scratch_entity(const KnowledgeGraph& kg,
                                         const QueryLog& log,
                                         Timestamp up_to_t,
                                         const DiffusionParams& params);

// Stored heat of an existing triple (0 when eliminated or never heated).
// Throws if (head, relation, tail) is not a triple of the KG.
double triple_heat(const HeatState& state,
                   const KnowledgeGraph& kg,
                   EntityId head,
                   RelationId relation,
                   EntityId tail);

// Line-delimited "kind key value" snapshot (kinds Q, E, R, H plus a T line
// carrying the timestamp). Values round-trip exactly.
void write_snapshot(std::ostream& out, const HeatState& state);
HeatState read_snapshot(std::istream& in);

}  // namespace apex
