#include "apex/query.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "apex/rng.hpp"

namespace apex {

namespace {

std::string_view strip_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

SparseHeat q_vector(const Query& q) {
    if (q.answers.empty()) throw std::invalid_argument("query has no answers");
    SparseHeat v;
    v[q.head] += 1.0;
    const double w = 1.0 / static_cast<double>(q.answers.size());
    for (EntityId a : q.answers) v[a] += w;
    return v;
}

SparseHeat r_vector(const Query& q) {
    return SparseHeat{{q.relation, 1.0}};
}

std::vector<Query> decompose(const Query& q) {
    if (q.answers.empty()) throw std::invalid_argument("query has no answers");
    std::vector<Query> out;
    out.reserve(q.answers.size());
    for (EntityId a : q.answers) {
        out.push_back(Query{q.head, q.relation, {a}, q.timestamp});
    }
    return out;
}

void validate_query(const KnowledgeGraph& kg, const Query& q) {
    kg.entity_label(q.head);
    kg.relation_label(q.relation);
    if (q.answers.empty()) throw std::invalid_argument("query has no answers");
    for (std::size_t i = 0; i < q.answers.size(); ++i) {
        kg.entity_label(q.answers[i]);
        if (i > 0 && q.answers[i - 1] >= q.answers[i]) {
            throw std::invalid_argument("query answers must be ascending and distinct");
        }
    }
}

std::vector<QueryLog> generate_workload(const KnowledgeGraph& kg,
                                        std::size_t users,
                                        std::size_t topics_per_user,
                                        std::size_t queries_per_topic,
                                        std::uint64_t seed) {
    std::vector<EntityId> heads;
    for (std::size_t e = 0; e < kg.n_entities(); ++e) {
        if (!kg.head_relations(static_cast<EntityId>(e)).empty()) {
            heads.push_back(static_cast<EntityId>(e));
        }
    }
    if (heads.size() < topics_per_user) {
        throw std::runtime_error("not enough head entities for the requested topics");
    }

    std::vector<QueryLog> logs;
    logs.reserve(users);
    for (std::size_t u = 0; u < users; ++u) {
        Rng rng(mix_seed(seed, u + 1));
        std::vector<EntityId> pool = heads;
        rng.partial_shuffle(pool, topics_per_user);
        QueryLog log;
        log.reserve(topics_per_user * queries_per_topic);
        Timestamp t = 0;
        for (std::size_t k = 0; k < topics_per_user; ++k) {
            EntityId head = pool[k];
            auto rels = kg.head_relations(head);
            for (std::size_t j = 0; j < queries_per_topic; ++j) {
                RelationId rel = rels[rng.below(rels.size())];
                log.push_back(Query{head, rel, kg.answer_tails(head, rel), t++});
            }
        }
        logs.push_back(std::move(log));
    }
    return logs;
}

QueryPool load_metaqa_queries(std::istream& in, const KnowledgeGraph& kg) {
    std::unordered_map<EntityId, std::vector<Query>> by_head;
    std::size_t dropped = 0;

    std::string raw;
    while (std::getline(in, raw)) {
        std::string_view line = strip_cr(raw);
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        std::size_t lb = line.find('[');
        std::size_t rb = lb == std::string_view::npos ? std::string_view::npos : line.find(']', lb + 1);
        if (tab == std::string_view::npos || rb == std::string_view::npos || rb > tab) {
            ++dropped;
            continue;
        }
        auto head = kg.entity_id(line.substr(lb + 1, rb - lb - 1));
        if (!head) {
            ++dropped;
            continue;
        }
        std::vector<EntityId> answers;
        bool grounded = true;
        for (std::string_view part : split(line.substr(tab + 1), '|')) {
            auto a = kg.entity_id(part);
            if (!a) {
                grounded = false;
                break;
            }
            answers.push_back(*a);
        }
        if (!grounded || answers.empty()) {
            ++dropped;
            continue;
        }
        std::sort(answers.begin(), answers.end());
        answers.erase(std::unique(answers.begin(), answers.end()), answers.end());

        // The question text names no relation: take the out-relation whose
        // tail set matches, preferring an exact match, then the smallest
        // strict superset (widening the answers to keep them KG-complete).
        std::optional<RelationId> exact, superset;
        std::size_t superset_size = 0;
        for (RelationId rel : kg.head_relations(*head)) {
            std::vector<EntityId> tails = kg.answer_tails(*head, rel);
            if (tails == answers) {
                exact = rel;
                break;
            }
            if (tails.size() > answers.size() &&
                std::includes(tails.begin(), tails.end(), answers.begin(), answers.end()) &&
                (!superset || tails.size() < superset_size)) {
                superset = rel;
                superset_size = tails.size();
            }
        }
        if (exact) {
            by_head[*head].push_back(Query{*head, *exact, std::move(answers), 0});
        } else if (superset) {
            by_head[*head].push_back(Query{*head, *superset, kg.answer_tails(*head, *superset), 0});
        } else {
            ++dropped;
        }
    }
    if (in.bad()) throw std::runtime_error("I/O error while reading questions");

    QueryPool pool;
    pool.dropped = dropped;
    pool.topics.reserve(by_head.size());
    for (auto& [head, queries] : by_head) {
        pool.topics.push_back(QueryPool::Topic{head, std::move(queries)});
    }
    std::sort(pool.topics.begin(), pool.topics.end(),
              [](const QueryPool::Topic& a, const QueryPool::Topic& b) { return a.head < b.head; });
    return pool;
}

std::vector<QueryLog> sample_workload(const QueryPool& pool,
                                      std::size_t users,
                                      std::size_t topics_per_user,
                                      std::size_t queries_per_topic,
                                      std::uint64_t seed) {
    if (pool.topics.size() < topics_per_user) {
        throw std::runtime_error("question pool has fewer topics than requested");
    }
    std::vector<QueryLog> logs;
    logs.reserve(users);
    for (std::size_t u = 0; u < users; ++u) {
        Rng rng(mix_seed(seed, u + 1));
        std::vector<std::size_t> topic_idx(pool.topics.size());
        for (std::size_t i = 0; i < topic_idx.size(); ++i) topic_idx[i] = i;
        rng.partial_shuffle(topic_idx, topics_per_user);

        QueryLog log;
        log.reserve(topics_per_user * queries_per_topic);
        Timestamp t = 0;
        for (std::size_t k = 0; k < topics_per_user; ++k) {
            const auto& topic = pool.topics[topic_idx[k]];
            if (topic.queries.size() >= queries_per_topic) {
                std::vector<std::size_t> qi(topic.queries.size());
                for (std::size_t i = 0; i < qi.size(); ++i) qi[i] = i;
                rng.partial_shuffle(qi, queries_per_topic);
                for (std::size_t j = 0; j < queries_per_topic; ++j) {
                    Query q = topic.queries[qi[j]];
                    q.timestamp = t++;
                    log.push_back(std::move(q));
                }
            } else {
                for (std::size_t j = 0; j < queries_per_topic; ++j) {
                    Query q = topic.queries[rng.below(topic.queries.size())];
                    q.timestamp = t++;
                    log.push_back(std::move(q));
                }
            }
        }
        logs.push_back(std::move(log));
    }
    return logs;
}

void write_query_log(std::ostream& out, const QueryLog& log, const KnowledgeGraph& kg) {
    for (const Query& q : log) {
        out << q.timestamp << '\t' << kg.entity_label(q.head) << '\t'
            << kg.relation_label(q.relation) << '\t';
        for (std::size_t i = 0; i < q.answers.size(); ++i) {
            if (i) out << ',';
            out << kg.entity_label(q.answers[i]);
        }
        out << '\n';
    }
}

QueryLog read_query_log(std::istream& in, const KnowledgeGraph& kg, std::size_t* dropped) {
    QueryLog log;
    std::size_t drop = 0;

    std::string raw;
    while (std::getline(in, raw)) {
        std::string_view line = strip_cr(raw);
        if (line.empty()) continue;
        std::vector<std::string_view> fields = split(line, '\t');
        if (fields.size() != 4) {
            ++drop;
            continue;
        }
        Timestamp t = 0;
        auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), t);
        auto head = kg.entity_id(fields[1]);
        auto rel = kg.relation_id(fields[2]);
        if (ec != std::errc() || p != fields[0].data() + fields[0].size() || !head || !rel) {
            ++drop;
            continue;
        }

        // Labels may contain commas; merge adjacent segments until one
        // resolves against the KG.
        std::vector<std::string_view> segs = split(fields[3], ',');
        std::vector<EntityId> answers;
        bool ok = true;
        std::size_t i = 0;
        while (i < segs.size()) {
            std::string acc(segs[i]);
            std::size_t j = i;
            std::optional<EntityId> id = kg.entity_id(acc);
            while (!id && j + 1 < segs.size()) {
                ++j;
                acc += ',';
                acc += segs[j];
                id = kg.entity_id(acc);
            }
            if (!id) {
                ok = false;
                break;
            }
            answers.push_back(*id);
            i = j + 1;
        }
        if (!ok || answers.empty()) {
            ++drop;
            continue;
        }
        std::sort(answers.begin(), answers.end());
        answers.erase(std::unique(answers.begin(), answers.end()), answers.end());
        log.push_back(Query{*head, *rel, std::move(answers), t});
    }
    if (in.bad()) throw std::runtime_error("I/O error while reading query log");
    if (dropped) *dropped = drop;
    return log;
}

}  // namespace apex
