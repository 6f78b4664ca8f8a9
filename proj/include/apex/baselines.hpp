#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "apex/kg.hpp"
#include "apex/query.hpp"
#include "apex/summarize.hpp"
#include "apex/types.hpp"

namespace apex {

struct GlimpseConfig {
    double alpha = 0.3;     // one-hop neighbor damping in the entity preference
    double epsilon = 1e-3;  // sampling parameter; smaller means closer to exact greedy
    std::int64_t budget = 1;
};

// Static utility-driven summary over the whole log prefix (no temporal decay).
// Entity preference: queries touching the entity plus alpha times queries
// touching each neighbor, rescaled so the smallest positive preference is 1.
// Relation preference: fraction of queries using the relation. A triple's
// utility is the log of the product of its three factors (delta-smoothed);
// the summary is grown by stochastic greedy, sampling |pool|/K * ln(1/eps)
// candidates per round from the residual positive-preference pool.
Pkg glimpse_summarize(const KnowledgeGraph& kg,
                      std::span<const Query> log_prefix,
                      const GlimpseConfig& config,
                      std::uint64_t seed);

struct PprConfig {
    double restart = 0.85;
    std::int64_t budget = 1;
    int max_iterations = 500;
    double tolerance = 1e-12;
};

// Personalized PageRank scores: power iteration on the column-stochastic
// uniform-neighbor transition of the undirected adjacency, personalized to
// the L1-normalized undecayed q_total of the prefix; dangling mass is
// redistributed to the personalization vector. Scores sum to 1.
Eigen::VectorXd ppr_scores(const KnowledgeGraph& kg,
                           const SparseHeat& personalization,
                           double restart,
                           int max_iterations,
                           double tolerance);

// Summary from PPR scores: entities in descending score (positive scores
// only), materialized with the induced-triple construction and budget rule of
// the entity-level summarizer.
Pkg ppr_summarize(const KnowledgeGraph& kg,
                  std::span<const Query> log_prefix,
                  const PprConfig& config);

}  // namespace apex
