#include "apex/eval.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "apex/heat.hpp"

namespace apex {

namespace {

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t mid = xs.size() / 2;
    if (xs.size() % 2 == 1) return xs[mid];
    return 0.5 * (xs[mid - 1] + xs[mid]);
}

void check_log_stamps(const QueryLog& log) {
    for (std::size_t i = 0; i < log.size(); ++i) {
        if (log[i].timestamp != static_cast<Timestamp>(i)) {
            throw std::invalid_argument("query logs must be stamped 0..L-1 consecutively");
        }
    }
}

template <typename Fn>
double time_call(Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double truncated_neumann(double alpha_c, int d) {
    // sum_{l=0}^{d} (alpha*c)^l
    if (alpha_c == 1.0) return static_cast<double>(d + 1);
    return (1.0 - std::pow(alpha_c, d + 1)) / (1.0 - alpha_c);
}

}  // namespace

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Apex2: return "APEX2";
        case Method::Apex2N: return "APEX2N";
        case Method::Glimpse: return "GLIMPSE";
        case Method::Ppr: return "PPR";
    }
    return "UNKNOWN";
}

std::optional<Method> method_from_name(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "APEX2") return Method::Apex2;
    if (upper == "APEX2N" || upper == "APEX2-N") return Method::Apex2N;
    if (upper == "GLIMPSE") return Method::Glimpse;
    if (upper == "PPR") return Method::Ppr;
    return std::nullopt;
}

double f1_from_sets(std::span<const EntityId> truth, std::span<const EntityId> predicted) {
    std::size_t inter = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < truth.size() && j < predicted.size()) {
        if (truth[i] < predicted[j]) {
            ++i;
        } else if (predicted[j] < truth[i]) {
            ++j;
        } else {
            ++inter;
            ++i;
            ++j;
        }
    }
    const double p =
        predicted.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(predicted.size());
    const double r =
        truth.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(truth.size());
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

double f1_score(const Pkg& pkg, const Query& q, const KnowledgeGraph& kg) {
    validate_query(kg, q);
    const std::vector<EntityId> truth = kg.answer_tails(q.head, q.relation);
    if (truth.empty()) {
        throw std::invalid_argument("query has no answers in the KG: head " +
                                    std::to_string(q.head) + ", relation " +
                                    std::to_string(q.relation));
    }
    std::vector<EntityId> predicted;
    for (TripleId tid : kg.answer_triples(q.head, q.relation)) {
        if (std::binary_search(pkg.triples.begin(), pkg.triples.end(), tid)) {
            predicted.push_back(kg.triple(tid).tail);
        }
    }
    std::sort(predicted.begin(), predicted.end());
    predicted.erase(std::unique(predicted.begin(), predicted.end()), predicted.end());
    return f1_from_sets(truth, predicted);
}

std::vector<MethodAggregate> aggregate_records(const std::vector<EvalRecord>& records) {
    std::vector<MethodAggregate> out;
    for (Method m : {Method::Apex2, Method::Apex2N, Method::Glimpse, Method::Ppr}) {
        std::vector<int> users;
        for (const EvalRecord& r : records) {
            if (r.method == m) users.push_back(r.user);
        }
        if (users.empty()) continue;
        std::sort(users.begin(), users.end());
        users.erase(std::unique(users.begin(), users.end()), users.end());

        std::vector<double> user_means;
        std::vector<double> seconds;
        std::size_t count = 0;
        for (int u : users) {
            std::vector<double> f1s;
            for (const EvalRecord& r : records) {
                if (r.method != m || r.user != u) continue;
                f1s.push_back(r.f1);
                seconds.push_back(r.step_seconds);
                ++count;
            }
            user_means.push_back(mean_of(f1s));
        }

        MethodAggregate agg;
        agg.method = m;
        agg.mean_f1 = mean_of(user_means);
        agg.std_f1 = sample_std(user_means);
        agg.mean_step_seconds = mean_of(seconds);
        agg.median_step_seconds = median_of(seconds);
        agg.users = users.size();
        agg.records = count;
        out.push_back(agg);
    }
    return out;
}

EvalReport autoregressive_run(const KnowledgeGraph& kg,
                              const std::vector<QueryLog>& logs,
                              const RunConfig& config) {
    if (config.r_interval < 1) throw std::invalid_argument("r_interval must be >= 1");
    for (const QueryLog& log : logs) check_log_stamps(log);

    EvalReport report;
    for (std::size_t u = 0; u < logs.size(); ++u) {
        const QueryLog& log = logs[u];
        if (log.size() < 2) continue;
        const int user = static_cast<int>(u);

        for (Method m : config.methods) {
            if (m == Method::Apex2 || m == Method::Apex2N) {
                Apex2Pipeline triple_pipe(kg, config.summarizer);
                Apex2NPipeline entity_pipe(kg, config.summarizer);
                for (std::size_t t = 0; t < log.size(); ++t) {
                    const std::vector<Query> batch{log[t]};
                    const Pkg& pkg =
                        m == Method::Apex2 ? triple_pipe.step(batch) : entity_pipe.step(batch);
                    const double secs = m == Method::Apex2 ? triple_pipe.last_step_seconds()
                                                           : entity_pipe.last_step_seconds();
                    const bool rebuilt =
                        static_cast<Timestamp>(t) % config.summarizer.r_apex == 0;
                    if (rebuilt && t + 1 < log.size()) {
                        report.records.push_back({m, user, static_cast<Timestamp>(t),
                                                  f1_score(pkg, log[t + 1], kg), secs});
                    }
                }
            } else {
                for (std::size_t t = 0; t < log.size(); ++t) {
                    if (static_cast<Timestamp>(t) % config.r_interval != 0) continue;
                    std::span<const Query> prefix(log.data(), t + 1);
                    Pkg pkg;
                    double secs = 0.0;
                    if (m == Method::Glimpse) {
                        const std::uint64_t round_seed =
                            mix_seed(mix_seed(config.seed, static_cast<std::uint64_t>(u) + 1),
                                     static_cast<std::uint64_t>(t) + 1);
                        secs = time_call([&] {
                            pkg = glimpse_summarize(kg, prefix, config.glimpse, round_seed);
                        });
                    } else {
                        secs = time_call([&] { pkg = ppr_summarize(kg, prefix, config.ppr); });
                    }
                    if (t + 1 < log.size()) {
                        report.records.push_back({m, user, static_cast<Timestamp>(t),
                                                  f1_score(pkg, log[t + 1], kg), secs});
                    }
                }
            }
        }
    }
    report.aggregates = aggregate_records(report.records);
    return report;
}

std::optional<SweepAxis> sweep_axis_from_name(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "gamma") return SweepAxis::Gamma;
    if (lower == "kappa") return SweepAxis::Kappa;
    if (lower == "alpha") return SweepAxis::Alpha;
    if (lower == "depth" || lower == "d") return SweepAxis::Depth;
    if (lower == "r_apex" || lower == "r-apex" || lower == "rapex") return SweepAxis::RApex;
    return std::nullopt;
}

std::vector<std::pair<double, EvalReport>> sweep(const KnowledgeGraph& kg,
                                                 const std::vector<QueryLog>& logs,
                                                 SweepAxis axis,
                                                 std::span<const double> values,
                                                 const RunConfig& base) {
    std::vector<std::pair<double, EvalReport>> out;
    for (double v : values) {
        RunConfig cfg = base;
        switch (axis) {
            case SweepAxis::Gamma:
                cfg.summarizer.diffusion.gamma = v;
                break;
            case SweepAxis::Kappa: {
                const std::int64_t budget = budget_from_ratio(kg, v);
                cfg.summarizer.budget = budget;
                cfg.glimpse.budget = budget;
                cfg.ppr.budget = budget;
                break;
            }
            case SweepAxis::Alpha:
                cfg.summarizer.diffusion.alpha = v;
                cfg.glimpse.alpha = v;
                break;
            case SweepAxis::Depth:
                cfg.summarizer.diffusion.d = static_cast<int>(std::llround(v));
                break;
            case SweepAxis::RApex:
                cfg.summarizer.r_apex = static_cast<int>(std::llround(v));
                break;
        }
        out.emplace_back(v, autoregressive_run(kg, logs, cfg));
    }
    return out;
}

void write_csv(std::ostream& out, const EvalReport& report) {
    out << "method,user,timestamp,f1,step_seconds\n";
    char buf[128];
    for (const EvalRecord& r : report.records) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g", r.f1, r.step_seconds);
        out << method_name(r.method) << ',' << r.user << ',' << r.timestamp << ',' << buf << '\n';
    }
}

double adaptation_bound(double c_u, double c_v,
                        double entities_u, double triples_u,
                        double entities_v, double triples_v,
                        double alpha, double gamma, int d, double a,
                        bool entity_level) {
    if (!(gamma > 0.0) || gamma >= 1.0) throw std::invalid_argument("gamma must be in (0, 1)");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (d < 0) throw std::invalid_argument("diffusion depth must be >= 0");
    if (!(a >= 0.0)) throw std::invalid_argument("a must be >= 0");
    if (!(c_u >= 0.0) || !(c_v >= 0.0)) throw std::invalid_argument("connectivity must be >= 0");
    if (alpha * c_u >= 1.0 || alpha * c_v >= 1.0) {
        throw std::runtime_error("series divergent: alpha times connectivity must stay below 1");
    }

    const double s_u = truncated_neumann(alpha * c_u, d);
    const double s_v = truncated_neumann(alpha * c_v, d);

    double gain_u;
    double gain_v;
    if (entity_level) {
        gain_u = s_u;
        gain_v = s_v;
    } else {
        const double denom = entities_u + 3.0 * triples_u;
        if (!(denom > 0.0) || !(entities_v + 3.0 * triples_v > 0.0)) {
            throw std::invalid_argument("topic sizes must be positive for the triple-level bound");
        }
        const double exponent = (entities_u + 2.0 * triples_u) / denom;
        gain_u = std::pow(s_u, exponent);
        gain_v = s_v;
    }

    const double ratio = gain_u / gain_v;
    const double inner = ratio * (1.0 - std::pow(gamma, a)) + 1.0;
    return std::log(1.0 / inner) / std::log(gamma);
}

TopicKg generate_synthetic_topics(const TopicKgSpec& spec, std::uint64_t seed) {
    if (spec.communities < 1) throw std::invalid_argument("need at least one community");
    if (spec.entities_per_community < 2) {
        throw std::invalid_argument("need at least two entities per community");
    }
    if (spec.relations_per_community < 1) throw std::invalid_argument("need at least one relation");
    if (!(spec.target_degree > 0.0)) throw std::invalid_argument("target degree must be > 0");

    const std::size_t n = spec.entities_per_community;
    const auto edges_per_community =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.target_degree / 2.0));
    const std::size_t max_edges = n * (n - 1) / 2;
    if (edges_per_community < 1 || edges_per_community > max_edges) {
        throw std::invalid_argument("target degree infeasible for the community size");
    }

    std::vector<std::string> entity_labels;
    std::vector<std::string> relation_labels;
    std::vector<Triple> triples;
    std::vector<std::int32_t> community_of;
    entity_labels.reserve(spec.communities * n);
    community_of.reserve(spec.communities * n);
    for (std::size_t k = 0; k < spec.communities; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            entity_labels.push_back("c" + std::to_string(k) + "_e" + std::to_string(i));
            community_of.push_back(static_cast<std::int32_t>(k));
        }
        for (std::size_t j = 0; j < spec.relations_per_community; ++j) {
            relation_labels.push_back("c" + std::to_string(k) + "_r" + std::to_string(j));
        }
    }
    const bool has_bridges = spec.bridges > 0;
    const auto bridge_rel = static_cast<RelationId>(relation_labels.size());
    if (has_bridges) relation_labels.push_back("bridge");

    Rng rng(seed);
    std::unordered_set<std::uint64_t> seen;
    auto pack = [](EntityId a, EntityId b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
               static_cast<std::uint32_t>(b);
    };

    for (std::size_t k = 0; k < spec.communities; ++k) {
        const auto base = static_cast<EntityId>(k * n);
        const auto rel_base = static_cast<RelationId>(k * spec.relations_per_community);
        std::size_t added = 0;
        std::size_t attempts = 0;
        const std::size_t attempt_cap = 100 * edges_per_community + 1000;
        while (added < edges_per_community) {
            if (++attempts > attempt_cap) {
                throw std::runtime_error("could not place the requested community edges");
            }
            const auto i = static_cast<EntityId>(base + rng.below(n));
            const auto j = static_cast<EntityId>(base + rng.below(n));
            if (i == j) continue;
            if (!seen.insert(pack(i, j)).second) continue;
            const bool flip = rng.below(2) == 1;
            const EntityId head = flip ? j : i;
            const EntityId tail = flip ? i : j;
            const auto rel = static_cast<RelationId>(rel_base + rng.below(spec.relations_per_community));
            triples.push_back({head, rel, tail});
            ++added;
        }
    }

    if (has_bridges) {
        if (spec.communities < 2) throw std::invalid_argument("bridges need two communities");
        std::size_t added = 0;
        std::size_t attempts = 0;
        const std::size_t attempt_cap = 100 * spec.bridges + 1000;
        while (added < spec.bridges) {
            if (++attempts > attempt_cap) {
                throw std::runtime_error("could not place the requested bridge edges");
            }
            const std::size_t k1 = rng.below(spec.communities);
            const std::size_t k2 = rng.below(spec.communities);
            if (k1 == k2) continue;
            const auto i = static_cast<EntityId>(k1 * n + rng.below(n));
            const auto j = static_cast<EntityId>(k2 * n + rng.below(n));
            if (!seen.insert(pack(i, j)).second) continue;
            triples.push_back({i, bridge_rel, j});
            ++added;
        }
    }

    TopicKg tkg{KnowledgeGraph::from_parts(std::move(entity_labels), std::move(relation_labels),
                                           std::move(triples)),
                std::move(community_of)};
    return tkg;
}

Query sample_topic_query(const TopicKg& tkg, std::int32_t community, Rng& rng) {
    std::vector<EntityId> heads;
    for (std::size_t i = 0; i < tkg.kg.n_entities(); ++i) {
        const auto e = static_cast<EntityId>(i);
        if (tkg.community_of[i] == community && !tkg.kg.head_relations(e).empty()) {
            heads.push_back(e);
        }
    }
    if (heads.empty()) throw std::runtime_error("community has no head entities");

    const EntityId head = heads[rng.below(heads.size())];
    const auto rels = tkg.kg.head_relations(head);
    const RelationId rel = rels[rng.below(rels.size())];

    Query q;
    q.head = head;
    q.relation = rel;
    q.answers = tkg.kg.answer_tails(head, rel);
    q.timestamp = 0;
    return q;
}

int empirical_switch_point(const TopicKg& tkg,
                           std::int32_t u,
                           std::int32_t v,
                           int a,
                           const DiffusionParams& params,
                           std::uint64_t seed,
                           int cap) {
    if (a < 0) throw std::invalid_argument("a must be >= 0");
    if (cap < 1) throw std::invalid_argument("cap must be >= 1");

    Rng rng(seed);
    EntityHeatState state;
    Timestamp t = 0;
    for (int i = 0; i < a; ++i) {
        Query q = sample_topic_query(tkg, u, rng);
        q.timestamp = t++;
        advance_entity(state, tkg.kg, {q}, params);
    }

    auto community_heat = [&](std::int32_t c) {
        std::vector<std::pair<EntityId, double>> entries(state.e.begin(), state.e.end());
        std::sort(entries.begin(), entries.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        double total = 0.0;
        for (const auto& [k, val] : entries) {
            if (tkg.community_of[static_cast<std::size_t>(k)] == c) total += val;
        }
        return total;
    };

    for (int j = 1; j <= cap; ++j) {
        Query q = sample_topic_query(tkg, v, rng);
        q.timestamp = t++;
        advance_entity(state, tkg.kg, {q}, params);
        if (community_heat(v) > community_heat(u)) return j;
    }
    return cap;
}

std::vector<ScalingPoint> timing_scaling_check(std::span<const std::size_t> entities_per_community,
                                               double target_degree,
                                               const DiffusionParams& params,
                                               std::int64_t budget,
                                               std::size_t steps,
                                               std::uint64_t seed) {
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");

    std::vector<ScalingPoint> out;
    for (std::size_t size : entities_per_community) {
        TopicKgSpec spec;
        spec.communities = 1;
        spec.entities_per_community = size;
        spec.target_degree = target_degree;
        spec.relations_per_community = 3;
        spec.bridges = 0;
        TopicKg tkg = generate_synthetic_topics(spec, mix_seed(seed, size));

        SummarizerConfig cfg;
        cfg.budget = budget;
        cfg.r_apex = 1;
        cfg.diffusion = params;
        Apex2NPipeline pipe(tkg.kg, cfg);

        Rng rng(mix_seed(seed, size + 0x51ef));
        std::vector<double> times;
        double touched = 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
            Query q = sample_topic_query(tkg, 0, rng);
            q.timestamp = static_cast<Timestamp>(t);
            pipe.step({q});
            times.push_back(pipe.last_step_seconds());
            touched += static_cast<double>(
                diffuse(tkg.kg, q_vector(q), params.alpha, params.d).size());
        }

        ScalingPoint point;
        point.entities = tkg.kg.n_entities();
        point.triples = tkg.kg.n_triples();
        point.median_step_seconds = median_of(std::move(times));
        point.mean_touched_entries = touched / static_cast<double>(steps);
        out.push_back(point);
    }
    return out;
}

}  // namespace apex
