#include "apex/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "apex/rng.hpp"

namespace apex {

namespace {

constexpr double kLogSmoothing = 1e-12;

std::vector<EntityId> query_entities(const Query& q) {
    std::vector<EntityId> ids = q.answers;
    ids.push_back(q.head);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

}  // namespace

Pkg glimpse_summarize(const KnowledgeGraph& kg,
                      std::span<const Query> log_prefix,
                      const GlimpseConfig& config,
                      std::uint64_t seed) {
    if (!(config.alpha >= 0.0) || !std::isfinite(config.alpha)) {
        throw std::invalid_argument("alpha must be >= 0");
    }
    if (!(config.epsilon > 0.0) || config.epsilon >= 1.0) {
        throw std::invalid_argument("epsilon must be in (0, 1)");
    }
    if (config.budget < 0) throw std::invalid_argument("budget must be >= 0");

    Pkg empty;
    empty.budget = config.budget;
    if (config.budget == 0 || log_prefix.empty()) return empty;

    const std::size_t n = kg.n_entities();
    std::vector<double> pref_e(n, 0.0);
    std::vector<double> pref_r(kg.n_relations(), 0.0);
    for (const Query& q : log_prefix) {
        validate_query(kg, q);
        for (EntityId x : query_entities(q)) {
            pref_e[static_cast<std::size_t>(x)] += 1.0;
            for (EntityId y : kg.neighbors(x)) {
                pref_e[static_cast<std::size_t>(y)] += config.alpha;
            }
        }
        pref_r[static_cast<std::size_t>(q.relation)] += 1.0;
    }
    for (double& p : pref_r) p /= static_cast<double>(log_prefix.size());

    // The preferences only matter up to scale; anchor the smallest positive
    // one at 1 so endpoint log-terms are never negative.
    double min_positive = std::numeric_limits<double>::infinity();
    for (double p : pref_e) {
        if (p > 0.0) min_positive = std::min(min_positive, p);
    }
    if (!std::isfinite(min_positive)) return empty;
    for (double& p : pref_e) p /= min_positive;

    std::vector<TripleId> pool;
    for (std::size_t i = 0; i < kg.n_triples(); ++i) {
        const Triple& tr = kg.triple(static_cast<TripleId>(i));
        if (pref_e[static_cast<std::size_t>(tr.head)] > 0.0 &&
            pref_r[static_cast<std::size_t>(tr.relation)] > 0.0 &&
            pref_e[static_cast<std::size_t>(tr.tail)] > 0.0) {
            pool.push_back(static_cast<TripleId>(i));
        }
    }

    std::vector<char> endpoint_chosen(n, 0);
    auto marginal = [&](TripleId tid) {
        const Triple& tr = kg.triple(tid);
        const double px = pref_e[static_cast<std::size_t>(tr.head)] *
                          pref_r[static_cast<std::size_t>(tr.relation)] *
                          pref_e[static_cast<std::size_t>(tr.tail)];
        double gain = std::log(px + kLogSmoothing);
        if (!endpoint_chosen[static_cast<std::size_t>(tr.head)]) {
            gain += std::log(pref_e[static_cast<std::size_t>(tr.head)] + kLogSmoothing);
        }
        if (tr.tail != tr.head && !endpoint_chosen[static_cast<std::size_t>(tr.tail)]) {
            gain += std::log(pref_e[static_cast<std::size_t>(tr.tail)] + kLogSmoothing);
        }
        return gain;
    };

    const double sample_scale = std::log(1.0 / config.epsilon);
    Rng rng(seed);
    std::vector<TripleId> selected;
    while (static_cast<std::int64_t>(selected.size()) < config.budget && !pool.empty()) {
        const double per_round = static_cast<double>(pool.size()) /
                                 static_cast<double>(config.budget) * sample_scale;
        std::size_t s = static_cast<std::size_t>(std::ceil(per_round));
        s = std::max<std::size_t>(s, 1);
        std::size_t considered = pool.size();
        if (s < pool.size()) {
            rng.partial_shuffle(pool, s);
            considered = s;
        }

        std::size_t best = 0;
        double best_gain = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < considered; ++i) {
            const double g = marginal(pool[i]);
            if (g > best_gain || (g == best_gain && pool[i] < pool[best])) {
                best = i;
                best_gain = g;
            }
        }

        const TripleId picked = pool[best];
        pool[best] = pool.back();
        pool.pop_back();
        selected.push_back(picked);
        const Triple& tr = kg.triple(picked);
        endpoint_chosen[static_cast<std::size_t>(tr.head)] = 1;
        endpoint_chosen[static_cast<std::size_t>(tr.tail)] = 1;
    }

    return Pkg::from_triples(kg, std::move(selected), config.budget);
}

Eigen::VectorXd ppr_scores(const KnowledgeGraph& kg,
                           const SparseHeat& personalization,
                           double restart,
                           int max_iterations,
                           double tolerance) {
    if (!(restart > 0.0) || restart > 1.0) throw std::invalid_argument("restart must be in (0, 1]");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");

    const auto n = static_cast<Eigen::Index>(kg.n_entities());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    double total = 0.0;
    for (const auto& [k, val] : personalization) {
        if (k < 0 || k >= n) throw std::out_of_range("personalization entity id out of range");
        if (!(val >= 0.0) || !std::isfinite(val)) {
            throw std::invalid_argument("personalization weights must be non-negative");
        }
        v[k] += val;
        total += val;
    }
    if (!(total > 0.0)) throw std::invalid_argument("personalization has no mass");
    v /= total;

    Eigen::VectorXd invdeg = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t deg = kg.degree(static_cast<EntityId>(i));
        if (deg > 0) invdeg[i] = 1.0 / static_cast<double>(deg);
    }

    const auto& adj = kg.adjacency();
    Eigen::VectorXd x = v;
    for (int iter = 0; iter < max_iterations; ++iter) {
        double dangling = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (invdeg[i] == 0.0) dangling += x[i];
        }
        Eigen::VectorXd next =
            (1.0 - restart) * (adj * x.cwiseProduct(invdeg) + dangling * v) + restart * v;
        const double err = (next - x).lpNorm<1>();
        x.swap(next);
        if (err <= tolerance) break;
    }
    return x;
}

Pkg ppr_summarize(const KnowledgeGraph& kg,
                  std::span<const Query> log_prefix,
                  const PprConfig& config) {
    if (config.budget < 0) throw std::invalid_argument("budget must be >= 0");

    SparseHeat personalization;
    for (const Query& q : log_prefix) {
        validate_query(kg, q);
        personalization[q.head] += 1.0;
        const double w = 1.0 / static_cast<double>(q.answers.size());
        for (EntityId a : q.answers) personalization[a] += w;
    }
    if (personalization.empty()) {
        Pkg empty;
        empty.budget = config.budget;
        return empty;
    }

    Eigen::VectorXd scores =
        ppr_scores(kg, personalization, config.restart, config.max_iterations, config.tolerance);

    std::vector<EntityId> order;
    order.reserve(static_cast<std::size_t>(scores.size()));
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        if (scores[i] > 0.0) order.push_back(static_cast<EntityId>(i));
    }
    std::sort(order.begin(), order.end(), [&](EntityId a, EntityId b) {
        const double sa = scores[a];
        const double sb = scores[b];
        if (sa != sb) return sa > sb;
        return a < b;
    });
    return induced_entity_pkg(kg, order, config.budget);
}

}  // namespace apex
