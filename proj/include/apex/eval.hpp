#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "apex/baselines.hpp"
#include "apex/kg.hpp"
#include "apex/query.hpp"
#include "apex/rng.hpp"
#include "apex/summarize.hpp"
#include "apex/types.hpp"

namespace apex {

enum class Method { Apex2, Apex2N, Glimpse, Ppr };

std::string_view method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);

// F1 over answer sets (both ascending): 0 when precision + recall is 0.
double f1_from_sets(std::span<const EntityId> truth, std::span<const EntityId> predicted);

// Directional answering: truth is every tail of (head, relation) in the KG,
// prediction every tail of (head, relation) among the summary's triples.
// Throws if the query has no answers in the KG.
double f1_score(const Pkg& pkg, const Query& q, const KnowledgeGraph& kg);

struct EvalRecord {
    Method method;
    int user;
    Timestamp timestamp;  // the timestamp whose summary was scored
    double f1;
    double step_seconds;  // wall time of the summarization step at that timestamp
};

struct MethodAggregate {
    Method method;
    double mean_f1 = 0.0;        // unweighted mean of per-user mean F1
    double std_f1 = 0.0;         // sample std over per-user means
    double mean_step_seconds = 0.0;
    double median_step_seconds = 0.0;
    std::size_t users = 0;
    std::size_t records = 0;
};

struct EvalReport {
    std::vector<EvalRecord> records;
    std::vector<MethodAggregate> aggregates;
};

std::vector<MethodAggregate> aggregate_records(const std::vector<EvalRecord>& records);

struct RunConfig {
    std::vector<Method> methods{Method::Apex2N};
    SummarizerConfig summarizer;
    GlimpseConfig glimpse;
    PprConfig ppr;
    int r_interval = 9;  // baseline re-summarization period
    std::uint64_t seed = 0;
};

// Auto-regressive protocol: at timestamp t the method consumes query t (heat
// methods every step; baselines re-summarize from the full prefix at t == 0
// mod r_interval) and, whenever a (re)build happened at t, the summary is
// scored on the query at t+1. A log of length 2 yields exactly one evaluated
// timestamp.
EvalReport autoregressive_run(const KnowledgeGraph& kg,
                              const std::vector<QueryLog>& logs,
                              const RunConfig& config);

enum class SweepAxis { Gamma, Kappa, Alpha, Depth, RApex };

std::optional<SweepAxis> sweep_axis_from_name(std::string_view name);

// Re-runs the same workloads once per axis value. Kappa recomputes the budget
// from the KG size; Depth and RApex take integral values.
std::vector<std::pair<double, EvalReport>> sweep(const KnowledgeGraph& kg,
                                                 const std::vector<QueryLog>& logs,
                                                 SweepAxis axis,
                                                 std::span<const double> values,
                                                 const RunConfig& base);

// Header exactly: method,user,timestamp,f1,step_seconds
void write_csv(std::ostream& out, const EvalReport& report);

// Closed-form switch bound between a topic u queried `a` times and a fresh
// topic v, from the per-query heat gains of the two topics. entity_level
// selects the entity-heat variant; otherwise the triple-heat variant with its
// exponent-weighted gains is used. Requires gamma in (0,1) and alpha*c < 1
// for both topics ("series divergent" otherwise).
double adaptation_bound(double c_u, double c_v,
                        double entities_u, double triples_u,
                        double entities_v, double triples_v,
                        double alpha, double gamma, int d, double a,
                        bool entity_level);

struct TopicKgSpec {
    std::size_t communities = 2;
    std::size_t entities_per_community = 400;
    double target_degree = 4.0;        // realized average degree within 10%
    std::size_t relations_per_community = 3;
    std::size_t bridges = 0;           // cross-community edges
};

struct TopicKg {
    KnowledgeGraph kg;
    std::vector<std::int32_t> community_of;
};

TopicKg generate_synthetic_topics(const TopicKgSpec& spec, std::uint64_t seed);

// Uniform query inside one community: a random head with out-degree >= 1, a
// random out-relation, answers = all tails.
Query sample_topic_query(const TopicKg& tkg, std::int32_t community, Rng& rng);

// Runs `a` queries on community u, then queries community v once per
// timestamp on an entity-level heat state; returns how many v queries it
// takes until v's total entity heat exceeds u's (cap if never).
int empirical_switch_point(const TopicKg& tkg,
                           std::int32_t u,
                           std::int32_t v,
                           int a,
                           const DiffusionParams& params,
                           std::uint64_t seed,
                           int cap = 64);

struct ScalingPoint {
    std::size_t entities = 0;
    std::size_t triples = 0;
    double median_step_seconds = 0.0;
    double mean_touched_entries = 0.0;  // entities receiving a non-decay update per step
};

// Per-step cost of the entity-level summarizer on same-connectivity synthetic
// KGs of different sizes, single-threaded.
std::vector<ScalingPoint> timing_scaling_check(std::span<const std::size_t> entities_per_community,
                                               double target_degree,
                                               const DiffusionParams& params,
                                               std::int64_t budget,
                                               std::size_t steps,
                                               std::uint64_t seed);

}  // namespace apex
