#include "apex/summarize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

namespace apex {

namespace {

void validate_config(const KnowledgeGraph& kg, const SummarizerConfig& config) {
    config.diffusion.validate();
    if (config.budget < 0) throw std::invalid_argument("budget must be >= 0");
    if (config.r_apex < 1) throw std::invalid_argument("r_apex must be >= 1");
    (void)kg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string escape_dot(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace

Pkg Pkg::from_triples(const KnowledgeGraph& kg, std::vector<TripleId> ids, std::int64_t budget) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    Pkg pkg;
    pkg.budget = budget;
    pkg.triples = std::move(ids);
    for (TripleId tid : pkg.triples) {
        if (tid < 0 || static_cast<std::size_t>(tid) >= kg.n_triples()) {
            throw std::out_of_range("summary references triple id " + std::to_string(tid));
        }
        const Triple& tr = kg.triple(tid);
        pkg.entities.push_back(tr.head);
        pkg.entities.push_back(tr.tail);
        pkg.relations.push_back(tr.relation);
    }
    std::sort(pkg.entities.begin(), pkg.entities.end());
    pkg.entities.erase(std::unique(pkg.entities.begin(), pkg.entities.end()), pkg.entities.end());
    std::sort(pkg.relations.begin(), pkg.relations.end());
    pkg.relations.erase(std::unique(pkg.relations.begin(), pkg.relations.end()), pkg.relations.end());
    return pkg;
}

std::int64_t budget_from_ratio(const KnowledgeGraph& kg, double kappa) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw std::invalid_argument("kappa must be a positive finite ratio");
    }
    const double raw = kappa * static_cast<double>(kg.n_triples());
    return std::max<std::int64_t>(1, std::llround(raw));
}

Pkg induced_entity_pkg(const KnowledgeGraph& kg,
                       std::span<const EntityId> candidates,
                       std::int64_t budget) {
    if (budget < 0) throw std::invalid_argument("budget must be >= 0");

    std::unordered_set<EntityId> chosen;
    std::vector<EntityId> chosen_order;
    std::vector<TripleId> triples;
    std::vector<TripleId> gained;

    for (EntityId v : candidates) {
        if (static_cast<std::int64_t>(triples.size()) == budget) break;
        if (v < 0 || static_cast<std::size_t>(v) >= kg.n_entities()) {
            throw std::out_of_range("candidate entity id " + std::to_string(v) + " out of range");
        }
        if (chosen.count(v)) continue;

        gained.clear();
        for (TripleId tid : kg.incident_triples(v)) {
            const Triple& tr = kg.triple(tid);
            const EntityId other = tr.head == v ? tr.tail : tr.head;
            if (other == v || chosen.count(other)) gained.push_back(tid);
        }
        if (static_cast<std::int64_t>(triples.size() + gained.size()) > budget) break;

        chosen.insert(v);
        chosen_order.push_back(v);
        triples.insert(triples.end(), gained.begin(), gained.end());
    }

    Pkg pkg;
    pkg.budget = budget;
    pkg.entities = std::move(chosen_order);
    std::sort(pkg.entities.begin(), pkg.entities.end());
    pkg.triples = std::move(triples);
    std::sort(pkg.triples.begin(), pkg.triples.end());
    for (TripleId tid : pkg.triples) pkg.relations.push_back(kg.triple(tid).relation);
    std::sort(pkg.relations.begin(), pkg.relations.end());
    pkg.relations.erase(std::unique(pkg.relations.begin(), pkg.relations.end()), pkg.relations.end());
    return pkg;
}

Apex2Pipeline::Apex2Pipeline(const KnowledgeGraph& kg, SummarizerConfig config)
    : kg_(kg), config_(config) {
    validate_config(kg, config_);
    pkg_.budget = config_.budget;
}

const Pkg& Apex2Pipeline::step(const std::vector<Query>& new_queries) {
    const auto t0 = std::chrono::steady_clock::now();

    index_.scale_values(config_.diffusion.gamma_cubed());
    ChangeSet changes = advance(state_, kg_, new_queries, config_.diffusion);
    index_.apply_changes(changes);

    if (state_.t % config_.r_apex == 0) {
        pkg_ = Pkg::from_triples(kg_, index_.top_k(static_cast<std::size_t>(config_.budget)),
                                 config_.budget);
    }

    last_step_seconds_ = seconds_since(t0);
    return pkg_;
}

Apex2NPipeline::Apex2NPipeline(const KnowledgeGraph& kg, SummarizerConfig config)
    : kg_(kg), config_(config) {
    validate_config(kg, config_);
    pkg_.budget = config_.budget;
}

const Pkg& Apex2NPipeline::step(const std::vector<Query>& new_queries) {
    const auto t0 = std::chrono::steady_clock::now();

    index_.scale_values(config_.diffusion.gamma);
    EntityChangeSet changes = advance_entity(state_, kg_, new_queries, config_.diffusion);
    index_.apply_changes(changes);

    if (state_.t % config_.r_apex == 0) {
        std::vector<EntityId> hottest;
        hottest.reserve(index_.size());
        for (const auto& entry : index_.entries()) hottest.push_back(entry.key);
        pkg_ = induced_entity_pkg(kg_, hottest, config_.budget);
    }

    last_step_seconds_ = seconds_since(t0);
    return pkg_;
}

void export_pkg_tab3(std::ostream& out, const Pkg& pkg, const KnowledgeGraph& kg) {
    for (TripleId tid : pkg.triples) {
        const Triple& tr = kg.triple(tid);
        out << kg.entity_label(tr.head) << '\t' << kg.relation_label(tr.relation) << '\t'
            << kg.entity_label(tr.tail) << '\n';
    }
}

void export_pkg_dot(std::ostream& out, const Pkg& pkg, const KnowledgeGraph& kg) {
    out << "digraph pkg {\n";
    for (EntityId e : pkg.entities) {
        out << "  \"" << escape_dot(kg.entity_label(e)) << "\";\n";
    }
    for (TripleId tid : pkg.triples) {
        const Triple& tr = kg.triple(tid);
        out << "  \"" << escape_dot(kg.entity_label(tr.head)) << "\" -> \""
            << escape_dot(kg.entity_label(tr.tail)) << "\" [label=\""
            << escape_dot(kg.relation_label(tr.relation)) << "\"];\n";
    }
    out << "}\n";
}

}  // namespace apex
