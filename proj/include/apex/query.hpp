#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "apex/kg.hpp"
#include "apex/types.hpp"

namespace apex {

// One knowledge-graph query: a head entity, a relation, and the non-empty set
// of answer entities, observed at a timestamp.
struct Query {
    EntityId head = 0;
    RelationId relation = 0;
    std::vector<EntityId> answers;  // sorted, distinct, non-empty
    Timestamp timestamp = 0;
};

using QueryLog = std::vector<Query>;

// Entity access vector: head gets 1, each answer gets 1/|answers|; a head
// that is also an answer accumulates both contributions.
SparseHeat q_vector(const Query& q);

// Relation access vector: one-hot on the queried relation.
SparseHeat r_vector(const Query& q);

// Splits a query into one single-answer query per answer (ascending entity
// id), all at the original timestamp.
std::vector<Query> decompose(const Query& q);

void validate_query(const KnowledgeGraph& kg, const Query& q);

// Synthetic per-user logs: topics_per_user distinct head entities drawn
// uniformly among entities that head at least one triple; per topic,
// queries_per_topic relations drawn with replacement among the head's
// out-relations, answers being every tail of (head, relation). Queries are
// stamped 0,1,2,... consecutively, topics back to back. Users are generated
// independently from the shared seed.
std::vector<QueryLog> generate_workload(const KnowledgeGraph& kg,
                                        std::size_t users,
                                        std::size_t topics_per_user,
                                        std::size_t queries_per_topic,
                                        std::uint64_t seed);

// Question pool grouped by head entity, for sampling real-question workloads.
struct QueryPool {
    struct Topic {
        EntityId head;
        std::vector<Query> queries;
    };
    std::vector<Topic> topics;
    std::size_t dropped = 0;  // lines that could not be grounded in the KG
};

// Reads question lines of the form "text with [Head Entity] ...\tans|ans|..."
// and grounds each against the KG. The relation is inferred as the head's
// out-relation whose tail set matches the listed answers (exact match first,
// then minimal superset with answers widened to the full tail set); questions
// with no grounding are dropped and counted.
QueryPool load_metaqa_queries(std::istream& in, const KnowledgeGraph& kg);

// Samples user logs from a question pool using the same topic grouping and
// stamping as generate_workload.
std::vector<QueryLog> sample_workload(const QueryPool& pool,
                                      std::size_t users,
                                      std::size_t topics_per_user,
                                      std::size_t queries_per_topic,
                                      std::uint64_t seed);

// Text log format: "t<TAB>head<TAB>relation<TAB>ans1,ans2,...". Answers are
// serialized in ascending entity id.
void write_query_log(std::ostream& out, const QueryLog& log, const KnowledgeGraph& kg);

// Reads the format above. Labels containing commas are healed by greedily
// merging adjacent segments until one resolves; unresolvable lines are
// skipped and counted in *dropped.
QueryLog read_query_log(std::istream& in, const KnowledgeGraph& kg, std::size_t* dropped = nullptr);

}  // namespace apex
