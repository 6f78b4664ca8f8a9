#include "apex/heat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace apex {

namespace {

void scale_in_place(SparseHeat& v, double factor) {
    if (factor == 1.0) return;
    for (auto& kv : v) kv.second *= factor;
}

void add_into(SparseHeat& v, const SparseHeat& delta) {
    for (const auto& [k, val] : delta) v[k] += val;
}

// Removes entries <= eps and reports which keys went.
std::vector<std::int32_t> prune(SparseHeat& v, double eps) {
    std::vector<std::int32_t> erased;
    for (auto it = v.begin(); it != v.end();) {
        if (it->second <= eps) {
            erased.push_back(it->first);
            it = v.erase(it);
        } else {
            ++it;
        }
    }
    return erased;
}

std::vector<std::pair<EntityId, double>> sorted_entries(const SparseHeat& v) {
    std::vector<std::pair<EntityId, double>> out(v.begin(), v.end());
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

void check_entity_keys(const KnowledgeGraph& kg, const SparseHeat& q) {
    for (const auto& [k, v] : q) {
        if (k < 0 || static_cast<std::size_t>(k) >= kg.n_entities()) {
            throw std::out_of_range("heat vector references entity id " + std::to_string(k));
        }
        if (!std::isfinite(v)) throw std::invalid_argument("heat vector has a non-finite value");
    }
}

// One diffusion hop: alpha * A * level, accumulated in sorted key order so
// results do not depend on hash-map iteration.
std::vector<std::pair<EntityId, double>> hop(const KnowledgeGraph& kg,
                                             const std::vector<std::pair<EntityId, double>>& level,
                                             double alpha) {
    SparseHeat next;
    const auto& adj = kg.adjacency();
    for (const auto& [i, v] : level) {
        const double push = alpha * v;
        for (KnowledgeGraph::Adjacency::InnerIterator it(adj, i); it; ++it) {
            next[static_cast<EntityId>(it.col())] += push;
        }
    }
    return sorted_entries(next);
}

struct QueryBatch {
    SparseHeat q_new;
    SparseHeat r_new;
};

QueryBatch collect_batch(const KnowledgeGraph& kg,
                         const std::vector<Query>& queries,
                         Timestamp expected) {
    QueryBatch batch;
    for (const Query& q : queries) {
        validate_query(kg, q);
        if (q.timestamp != expected) {
            throw std::runtime_error("query stamped " + std::to_string(q.timestamp) +
                                     " but the state expects timestamp " + std::to_string(expected));
        }
        batch.q_new[q.head] += 1.0;
        const double w = 1.0 / static_cast<double>(q.answers.size());
        for (EntityId a : q.answers) batch.q_new[a] += w;
        batch.r_new[q.relation] += 1.0;
    }
    return batch;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void DiffusionParams::validate() const {
    if (!(alpha >= 0.0) || alpha >= 1.0 || !std::isfinite(alpha)) {
        throw std::invalid_argument("alpha must be in [0, 1)");
    }
    if (d < 0) throw std::invalid_argument("diffusion depth must be >= 0");
    if (!(gamma > 0.0) || gamma > 1.0) throw std::invalid_argument("gamma must be in (0, 1]");
    if (!(eps_ths >= 0.0) || !std::isfinite(eps_ths)) {
        throw std::invalid_argument("eps_ths must be >= 0");
    }
}

SparseHeat diffuse(const KnowledgeGraph& kg, const SparseHeat& q, double alpha, int d) {
    if (d < 0) throw std::invalid_argument("diffusion depth must be >= 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("alpha must be >= 0");
    }
    check_entity_keys(kg, q);

    SparseHeat result = q;
    std::vector<std::pair<EntityId, double>> level = sorted_entries(q);
    for (int l = 1; l <= d && !level.empty(); ++l) {
        level = hop(kg, level, alpha);
        for (const auto& [k, v] : level) result[k] += v;
    }
    return result;
}

SparseHeat diffuse_closed_form(const KnowledgeGraph& kg, const SparseHeat& q, double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("alpha must be >= 0");
    }
    check_entity_keys(kg, q);

    // The residual of the truncated series is exactly the next term, so the
    // sum has converged once the newest term is below tolerance.
    constexpr double kTolerance = 1e-10;
    constexpr int kMaxHops = 200000;

    SparseHeat x = q;
    std::vector<std::pair<EntityId, double>> term = sorted_entries(q);
    for (int l = 1; l <= kMaxHops && !term.empty(); ++l) {
        term = hop(kg, term, alpha);
        double max_abs = 0.0;
        for (const auto& [k, v] : term) {
            x[k] += v;
            max_abs = std::max(max_abs, std::abs(v));
        }
        if (!std::isfinite(max_abs) || max_abs > 1e15) {
            throw std::runtime_error("series divergent: diffusion does not contract");
        }
        if (max_abs <= kTolerance) return x;
    }
    if (term.empty()) return x;
    throw std::runtime_error("series divergent: no convergence within the hop cap");
}

ChangeSet advance(HeatState& state,
                  const KnowledgeGraph& kg,
                  const std::vector<Query>& new_queries,
                  const DiffusionParams& params) {
    params.validate();
    QueryBatch batch = collect_batch(kg, new_queries, state.t + 1);

    scale_in_place(state.q_total, params.gamma);
    add_into(state.q_total, batch.q_new);
    scale_in_place(state.r, params.gamma);
    add_into(state.r, batch.r_new);

    SparseHeat delta =
        batch.q_new.empty() ? SparseHeat{} : diffuse(kg, batch.q_new, params.alpha, params.d);
    scale_in_place(state.e, params.gamma);
    add_into(state.e, delta);

    prune(state.q_total, params.eps_ths);
    std::vector<EntityId> e_pruned = prune(state.e, params.eps_ths);
    std::vector<RelationId> r_pruned = prune(state.r, params.eps_ths);

    const double g3 = params.gamma_cubed();
    if (g3 != 1.0) {
        for (auto& kv : state.h) kv.second *= g3;
    }

    // Non-decay update scope: triples incident to an entity whose e changed
    // (injection or elimination), plus triples of a touched relation whose
    // endpoints both carry heat.
    std::vector<EntityId> touched;
    touched.reserve(delta.size() + e_pruned.size());
    for (const auto& [k, v] : delta) touched.push_back(k);
    touched.insert(touched.end(), e_pruned.begin(), e_pruned.end());
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    std::vector<RelationId> touched_rels;
    for (const auto& [k, v] : batch.r_new) touched_rels.push_back(k);
    touched_rels.insert(touched_rels.end(), r_pruned.begin(), r_pruned.end());
    std::sort(touched_rels.begin(), touched_rels.end());
    touched_rels.erase(std::unique(touched_rels.begin(), touched_rels.end()), touched_rels.end());

    std::vector<TripleId> candidates;
    for (EntityId e : touched) {
        auto span = kg.incident_triples(e);
        candidates.insert(candidates.end(), span.begin(), span.end());
    }
    for (RelationId r : touched_rels) {
        for (TripleId tid : kg.relation_triples(r)) {
            const Triple& tr = kg.triple(tid);
            if (state.e.count(tr.head) && state.e.count(tr.tail)) candidates.push_back(tid);
        }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    ChangeSet changes;
    for (TripleId tid : candidates) {
        const Triple& tr = kg.triple(tid);
        const double nv =
            heat_at(state.e, tr.head) * heat_at(state.r, tr.relation) * heat_at(state.e, tr.tail);
        auto it = state.h.find(tid);
        if (nv > params.eps_ths) {
            if (it == state.h.end()) {
                state.h.emplace(tid, nv);
                changes.push_back({tid, std::nullopt, nv});
            } else if (it->second != nv) {
                changes.push_back({tid, it->second, nv});
                it->second = nv;
            }
        } else if (it != state.h.end()) {
            changes.push_back({tid, it->second, std::nullopt});
            state.h.erase(it);
        }
    }

    // Entries whose uniform decay crossed the threshold.
    for (auto it = state.h.begin(); it != state.h.end();) {
        if (it->second <= params.eps_ths) {
            changes.push_back({it->first, it->second, std::nullopt});
            it = state.h.erase(it);
        } else {
            ++it;
        }
    }

    state.t += 1;
    std::sort(changes.begin(), changes.end(),
              [](const HeatChange<TripleId>& a, const HeatChange<TripleId>& b) { return a.key < b.key; });
    return changes;
}

EntityChangeSet advance_entity(EntityHeatState& state,
                               const KnowledgeGraph& kg,
                               const std::vector<Query>& new_queries,
                               const DiffusionParams& params) {
    params.validate();
    QueryBatch batch = collect_batch(kg, new_queries, state.t + 1);

    scale_in_place(state.q_total, params.gamma);
    add_into(state.q_total, batch.q_new);
    prune(state.q_total, params.eps_ths);

    SparseHeat delta =
        batch.q_new.empty() ? SparseHeat{} : diffuse(kg, batch.q_new, params.alpha, params.d);
    scale_in_place(state.e, params.gamma);

    EntityChangeSet changes;
    for (const auto& [k, dv] : delta) {
        auto it = state.e.find(k);
        if (it == state.e.end()) {
            const double nv = dv;
            if (nv > params.eps_ths) {
                state.e.emplace(k, nv);
                changes.push_back({k, std::nullopt, nv});
            }
        } else {
            const double ov = it->second;  // post-decay, matches the index
            const double nv = ov + dv;
            if (nv > params.eps_ths) {
                if (nv != ov) changes.push_back({k, ov, nv});
                it->second = nv;
            } else {
                changes.push_back({k, ov, std::nullopt});
                state.e.erase(it);
            }
        }
    }
    for (auto it = state.e.begin(); it != state.e.end();) {
        if (it->second <= params.eps_ths) {
            changes.push_back({it->first, it->second, std::nullopt});
            it = state.e.erase(it);
        } else {
            ++it;
        }
    }

    state.t += 1;
    std::sort(changes.begin(), changes.end(),
              [](const HeatChange<EntityId>& a, const HeatChange<EntityId>& b) { return a.key < b.key; });
    return changes;
}

HeatState recompute_scratch(const KnowledgeGraph& kg,
                            const QueryLog& log,
                            Timestamp up_to_t,
                            const DiffusionParams& params) {
    params.validate();
    HeatState state;
    state.t = up_to_t;
    for (const Query& q : log) {
        if (q.timestamp > up_to_t) continue;
        validate_query(kg, q);
        const double w = std::pow(params.gamma, static_cast<double>(up_to_t - q.timestamp));
        state.q_total[q.head] += w;
        const double aw = w / static_cast<double>(q.answers.size());
        for (EntityId a : q.answers) state.q_total[a] += aw;
        state.r[q.relation] += w;
    }
    state.e = diffuse(kg, state.q_total, params.alpha, params.d);

    for (std::size_t i = 0; i < kg.n_triples(); ++i) {
        const Triple& tr = kg.triple(static_cast<TripleId>(i));
        const double v =
            heat_at(state.e, tr.head) * heat_at(state.r, tr.relation) * heat_at(state.e, tr.tail);
        if (v > 0.0) state.h.emplace(static_cast<TripleId>(i), v);
    }

    prune(state.q_total, params.eps_ths);
    prune(state.e, params.eps_ths);
    prune(state.r, params.eps_ths);
    for (auto it = state.h.begin(); it != state.h.end();) {
        if (it->second <= params.eps_ths) {
            it = state.h.erase(it);
        } else {
            ++it;
        }
    }
    return state;
}

EntityHeatState recompute_scratch_entity(const KnowledgeGraph& kg,
                                         const QueryLog& log,
                                         Timestamp up_to_t,
                                         const DiffusionParams& params) {
    params.validate();
    EntityHeatState state;
    state.t = up_to_t;
    for (const Query& q : log) {
        if (q.timestamp > up_to_t) continue;
        validate_query(kg, q);
        const double w = std::pow(params.gamma, static_cast<double>(up_to_t - q.timestamp));
        state.q_total[q.head] += w;
        const double aw = w / static_cast<double>(q.answers.size());
        for (EntityId a : q.answers) state.q_total[a] += aw;
    }
    state.e = diffuse(kg, state.q_total, params.alpha, params.d);
    prune(state.q_total, params.eps_ths);
    prune(state.e, params.eps_ths);
    return state;
}

double triple_heat(const HeatState& state,
                   const KnowledgeGraph& kg,
                   EntityId head,
                   RelationId relation,
                   EntityId tail) {
    auto span = kg.answer_triples(head, relation);
    auto it = std::partition_point(span.begin(), span.end(), [&](TripleId t) {
        return kg.triple(t).tail < tail;
    });
    if (it == span.end() || kg.triple(*it).tail != tail) {
        throw std::invalid_argument("triple_heat: (head, relation, tail) is not a KG triple");
    }
    auto h = state.h.find(*it);
    return h == state.h.end() ? 0.0 : h->second;
}

void write_snapshot(std::ostream& out, const HeatState& state) {
    out << "T 0 " << state.t << '\n';
    auto dump = [&out](char kind, const SparseHeat& v) {
        for (const auto& [k, val] : sorted_entries(v)) {
            out << kind << ' ' << k << ' ' << format_value(val) << '\n';
        }
    };
    dump('Q', state.q_total);
    dump('E', state.e);
    dump('R', state.r);
    std::vector<std::pair<TripleId, double>> h(state.h.begin(), state.h.end());
    std::sort(h.begin(), h.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [k, val] : h) {
        out << "H " << k << ' ' << format_value(val) << '\n';
    }
}

HeatState read_snapshot(std::istream& in) {
    HeatState state;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string kind;
        long long key = 0;
        double value = 0.0;
        if (!(row >> kind >> key >> value) || kind.size() != 1) {
            throw std::runtime_error("bad snapshot line: " + line);
        }
        switch (kind[0]) {
            case 'T': state.t = static_cast<Timestamp>(value); break;
            case 'Q': state.q_total[static_cast<std::int32_t>(key)] = value; break;
            case 'E': state.e[static_cast<std::int32_t>(key)] = value; break;
            case 'R': state.r[static_cast<std::int32_t>(key)] = value; break;
            case 'H': state.h[static_cast<TripleId>(key)] = value; break;
            default: throw std::runtime_error("bad snapshot kind: " + kind);
        }
    }
    if (in.bad()) throw std::runtime_error("I/O error while reading snapshot");
    return state;
}

}  // namespace apex
