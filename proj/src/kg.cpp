#include "apex/kg.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "apex/rng.hpp"

namespace apex {

namespace {

constexpr std::size_t kNpos = std::string_view::npos;

std::string_view strip_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

bool blank(std::string_view s) {
    return s.find_first_not_of(" \t") == kNpos;
}

bool split3(std::string_view line, char sep, std::string_view out[3]) {
    std::size_t a = line.find(sep);
    if (a == kNpos) return false;
    std::size_t b = line.find(sep, a + 1);
    if (b == kNpos) return false;
    if (line.find(sep, b + 1) != kNpos) return false;
    out[0] = line.substr(0, a);
    out[1] = line.substr(a + 1, b - a - 1);
    out[2] = line.substr(b + 1);
    return !out[0].empty() && !out[1].empty() && !out[2].empty();
}

std::string_view strip_wrapper(std::string_view t, char open, char close) {
    if (t.size() >= 2 && t.front() == open && t.back() == close) {
        t.remove_prefix(1);
        t.remove_suffix(1);
    }
    return t;
}

// "<s> <p> <o> ." with whitespace separation; a quoted object may contain
// spaces, so the object is the remainder of the line minus the terminator.
bool parse_ntriples(std::string_view line, std::string_view out[3]) {
    auto skip_ws = [&](std::size_t i) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        return i;
    };
    auto take_token = [&](std::size_t i, std::string_view& tok) {
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        tok = line.substr(i, j - i);
        return j;
    };
    std::size_t i = skip_ws(0);
    std::string_view subject, predicate;
    i = take_token(i, subject);
    i = skip_ws(i);
    i = take_token(i, predicate);
    i = skip_ws(i);
    if (subject.empty() || predicate.empty() || i >= line.size()) return false;
    std::string_view object = line.substr(i);
    while (!object.empty() && (object.back() == ' ' || object.back() == '\t')) object.remove_suffix(1);
    if (!object.empty() && object.back() == '.') {
        object.remove_suffix(1);
        while (!object.empty() && (object.back() == ' ' || object.back() == '\t')) object.remove_suffix(1);
    }
    if (object.empty()) return false;
    out[0] = strip_wrapper(subject, '<', '>');
    out[1] = strip_wrapper(predicate, '<', '>');
    out[2] = strip_wrapper(strip_wrapper(object, '<', '>'), '"', '"');
    return !out[0].empty() && !out[1].empty() && !out[2].empty();
}

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t h = splitmix64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.head)));
        h = splitmix64(h ^ static_cast<std::uint32_t>(t.relation));
        h = splitmix64(h ^ static_cast<std::uint32_t>(t.tail));
        return static_cast<std::size_t>(h);
    }
};

std::uint64_t pack_pair(EntityId head, RelationId relation) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(head)) << 32) |
           static_cast<std::uint32_t>(relation);
}

}  // namespace

KnowledgeGraph KnowledgeGraph::load(std::istream& in, KgFormat format, LoadStats* stats) {
    KnowledgeGraph kg;
    LoadStats local;
    std::unordered_set<Triple, TripleHash> seen;

    auto intern = [](std::unordered_map<std::string, std::int32_t>& ids,
                     std::vector<std::string>& labels, std::string_view label) {
        auto it = ids.find(std::string(label));
        if (it != ids.end()) return it->second;
        std::int32_t id = static_cast<std::int32_t>(labels.size());
        labels.emplace_back(label);
        ids.emplace(labels.back(), id);
        return id;
    };

    std::string raw;
    while (std::getline(in, raw)) {
        std::string_view line = strip_cr(raw);
        if (blank(line)) continue;
        if (format == KgFormat::Tab3 && (line.front() == '#' || line.front() == '@')) continue;
        if (format == KgFormat::NTriples && line.front() == '#') continue;
        ++local.lines;

        std::string_view fields[3];
        bool ok = false;
        switch (format) {
            case KgFormat::Tab3: ok = split3(line, '\t', fields); break;
            case KgFormat::Pipe3: ok = split3(line, '|', fields); break;
            case KgFormat::NTriples: ok = parse_ntriples(line, fields); break;
        }
        if (!ok) {
            ++local.malformed;
            continue;
        }
        ++local.parsed;
        Triple t;
        t.head = intern(kg.entity_ids_, kg.entity_labels_, fields[0]);
        t.relation = intern(kg.relation_ids_, kg.relation_labels_, fields[1]);
        t.tail = intern(kg.entity_ids_, kg.entity_labels_, fields[2]);
        if (!seen.insert(t).second) {
            ++local.duplicates;
            continue;
        }
        kg.triples_.push_back(t);
    }
    if (in.bad()) throw std::runtime_error("I/O error while reading triples");
    if (stats) *stats = local;
    if (kg.triples_.empty()) {
        throw std::runtime_error(local.lines == 0 ? "empty KG: no input lines"
                                                  : "empty KG: every input line failed to parse");
    }
    kg.finalize();
    return kg;
}

KnowledgeGraph KnowledgeGraph::from_parts(std::vector<std::string> entity_labels,
                                          std::vector<std::string> relation_labels,
                                          std::vector<Triple> triples) {
    KnowledgeGraph kg;
    kg.entity_labels_ = std::move(entity_labels);
    kg.relation_labels_ = std::move(relation_labels);
    for (std::size_t i = 0; i < kg.entity_labels_.size(); ++i) {
        if (!kg.entity_ids_.emplace(kg.entity_labels_[i], static_cast<EntityId>(i)).second) {
            throw std::invalid_argument("duplicate entity label: " + kg.entity_labels_[i]);
        }
    }
    for (std::size_t i = 0; i < kg.relation_labels_.size(); ++i) {
        if (!kg.relation_ids_.emplace(kg.relation_labels_[i], static_cast<RelationId>(i)).second) {
            throw std::invalid_argument("duplicate relation label: " + kg.relation_labels_[i]);
        }
    }
    std::unordered_set<Triple, TripleHash> seen;
    kg.triples_.reserve(triples.size());
    for (const Triple& t : triples) {
        if (t.head < 0 || static_cast<std::size_t>(t.head) >= kg.entity_labels_.size() ||
            t.tail < 0 || static_cast<std::size_t>(t.tail) >= kg.entity_labels_.size() ||
            t.relation < 0 || static_cast<std::size_t>(t.relation) >= kg.relation_labels_.size()) {
            throw std::out_of_range("triple references an unknown id");
        }
        if (seen.insert(t).second) kg.triples_.push_back(t);
    }
    if (kg.triples_.empty()) throw std::runtime_error("empty KG: no triples");
    kg.finalize();
    return kg;
}

void KnowledgeGraph::finalize() {
    const std::size_t n = entity_labels_.size();
    const std::size_t m = triples_.size();

    std::unordered_set<std::uint64_t> edges;
    edges.reserve(m);
    for (const Triple& t : triples_) {
        if (t.head == t.tail) continue;
        EntityId lo = std::min(t.head, t.tail), hi = std::max(t.head, t.tail);
        edges.insert(pack_pair(lo, hi));
    }
    std::vector<Eigen::Triplet<double>> coords;
    coords.reserve(edges.size() * 2);
    for (std::uint64_t packed : edges) {
        auto lo = static_cast<EntityId>(packed >> 32);
        auto hi = static_cast<EntityId>(packed & 0xffffffffULL);
        coords.emplace_back(lo, hi, 1.0);
        coords.emplace_back(hi, lo, 1.0);
    }
    adjacency_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    adjacency_.setFromTriplets(coords.begin(), coords.end());
    adjacency_.makeCompressed();

    by_head_rel_.resize(m);
    for (std::size_t i = 0; i < m; ++i) by_head_rel_[i] = static_cast<TripleId>(i);
    std::sort(by_head_rel_.begin(), by_head_rel_.end(), [this](TripleId a, TripleId b) {
        const Triple& x = triples_[static_cast<std::size_t>(a)];
        const Triple& y = triples_[static_cast<std::size_t>(b)];
        if (x.head != y.head) return x.head < y.head;
        if (x.relation != y.relation) return x.relation < y.relation;
        return x.tail < y.tail;
    });
    group_of_.reserve(m);
    for (std::size_t i = 0; i < m;) {
        const Triple& t = triples_[static_cast<std::size_t>(by_head_rel_[i])];
        std::size_t j = i;
        while (j < m) {
            const Triple& u = triples_[static_cast<std::size_t>(by_head_rel_[j])];
            if (u.head != t.head || u.relation != t.relation) break;
            ++j;
        }
        group_of_.emplace(pack_pair(t.head, t.relation),
                          std::make_pair(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j - i)));
        i = j;
    }

    incident_offsets_.assign(n + 1, 0);
    for (const Triple& t : triples_) {
        ++incident_offsets_[static_cast<std::size_t>(t.head) + 1];
        if (t.tail != t.head) ++incident_offsets_[static_cast<std::size_t>(t.tail) + 1];
    }
    for (std::size_t i = 0; i < n; ++i) incident_offsets_[i + 1] += incident_offsets_[i];
    incident_ids_.resize(incident_offsets_[n]);
    {
        std::vector<std::uint32_t> cursor(incident_offsets_.begin(), incident_offsets_.end() - 1);
        for (std::size_t i = 0; i < m; ++i) {
            const Triple& t = triples_[i];
            incident_ids_[cursor[static_cast<std::size_t>(t.head)]++] = static_cast<TripleId>(i);
            if (t.tail != t.head) {
                incident_ids_[cursor[static_cast<std::size_t>(t.tail)]++] = static_cast<TripleId>(i);
            }
        }
    }

    const std::size_t nr = relation_labels_.size();
    rel_offsets_.assign(nr + 1, 0);
    for (const Triple& t : triples_) ++rel_offsets_[static_cast<std::size_t>(t.relation) + 1];
    for (std::size_t i = 0; i < nr; ++i) rel_offsets_[i + 1] += rel_offsets_[i];
    rel_ids_.resize(rel_offsets_[nr]);
    {
        std::vector<std::uint32_t> cursor(rel_offsets_.begin(), rel_offsets_.end() - 1);
        for (std::size_t i = 0; i < m; ++i) {
            rel_ids_[cursor[static_cast<std::size_t>(triples_[i].relation)]++] = static_cast<TripleId>(i);
        }
    }

    head_rel_offsets_.assign(n + 1, 0);
    head_rels_.clear();
    head_rels_.reserve(group_of_.size());
    // by_head_rel_ is grouped by (head, relation) in ascending order, so one
    // sweep yields each head's distinct relations sorted.
    for (std::size_t i = 0; i < m;) {
        const Triple& t = triples_[static_cast<std::size_t>(by_head_rel_[i])];
        ++head_rel_offsets_[static_cast<std::size_t>(t.head) + 1];
        std::size_t j = i;
        while (j < m) {
            const Triple& u = triples_[static_cast<std::size_t>(by_head_rel_[j])];
            if (u.head != t.head || u.relation != t.relation) break;
            ++j;
        }
        i = j;
    }
    for (std::size_t i = 0; i < n; ++i) head_rel_offsets_[i + 1] += head_rel_offsets_[i];
    head_rels_.resize(head_rel_offsets_[n]);
    {
        std::vector<std::uint32_t> cursor(head_rel_offsets_.begin(), head_rel_offsets_.end() - 1);
        for (std::size_t i = 0; i < m;) {
            const Triple& t = triples_[static_cast<std::size_t>(by_head_rel_[i])];
            head_rels_[cursor[static_cast<std::size_t>(t.head)]++] = t.relation;
            std::size_t j = i;
            while (j < m) {
                const Triple& u = triples_[static_cast<std::size_t>(by_head_rel_[j])];
                if (u.head != t.head || u.relation != t.relation) break;
                ++j;
            }
            i = j;
        }
    }
}

void KnowledgeGraph::check_entity(EntityId e) const {
    if (e < 0 || static_cast<std::size_t>(e) >= entity_labels_.size()) {
        throw std::out_of_range("entity id out of range: " + std::to_string(e));
    }
}

void KnowledgeGraph::check_relation(RelationId r) const {
    if (r < 0 || static_cast<std::size_t>(r) >= relation_labels_.size()) {
        throw std::out_of_range("relation id out of range: " + std::to_string(r));
    }
}

std::optional<EntityId> KnowledgeGraph::entity_id(std::string_view label) const {
    auto it = entity_ids_.find(std::string(label));
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeGraph::relation_id(std::string_view label) const {
    auto it = relation_ids_.find(std::string(label));
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& KnowledgeGraph::entity_label(EntityId e) const {
    check_entity(e);
    return entity_labels_[static_cast<std::size_t>(e)];
}

const std::string& KnowledgeGraph::relation_label(RelationId r) const {
    check_relation(r);
    return relation_labels_[static_cast<std::size_t>(r)];
}

const Triple& KnowledgeGraph::triple(TripleId t) const {
    if (t < 0 || static_cast<std::size_t>(t) >= triples_.size()) {
        throw std::out_of_range("triple id out of range: " + std::to_string(t));
    }
    return triples_[static_cast<std::size_t>(t)];
}

std::vector<EntityId> KnowledgeGraph::neighbors(EntityId e) const {
    check_entity(e);
    std::vector<EntityId> out;
    for (Adjacency::InnerIterator it(adjacency_, e); it; ++it) {
        out.push_back(static_cast<EntityId>(it.col()));
    }
    return out;
}

std::int32_t KnowledgeGraph::degree(EntityId e) const {
    check_entity(e);
    return static_cast<std::int32_t>(adjacency_.outerIndexPtr()[e + 1] -
                                     adjacency_.outerIndexPtr()[e]);
}

std::span<const TripleId> KnowledgeGraph::answer_triples(EntityId head, RelationId relation) const {
    check_entity(head);
    check_relation(relation);
    auto it = group_of_.find(pack_pair(head, relation));
    if (it == group_of_.end()) return {};
    return {by_head_rel_.data() + it->second.first, it->second.second};
}

std::vector<EntityId> KnowledgeGraph::answer_tails(EntityId head, RelationId relation) const {
    std::vector<EntityId> tails;
    for (TripleId t : answer_triples(head, relation)) {
        tails.push_back(triples_[static_cast<std::size_t>(t)].tail);
    }
    return tails;  // group is sorted by tail and tails are distinct
}

std::span<const TripleId> KnowledgeGraph::incident_triples(EntityId e) const {
    check_entity(e);
    auto b = incident_offsets_[static_cast<std::size_t>(e)];
    auto n = incident_offsets_[static_cast<std::size_t>(e) + 1] - b;
    return {incident_ids_.data() + b, n};
}

std::span<const TripleId> KnowledgeGraph::relation_triples(RelationId r) const {
    check_relation(r);
    auto b = rel_offsets_[static_cast<std::size_t>(r)];
    auto n = rel_offsets_[static_cast<std::size_t>(r) + 1] - b;
    return {rel_ids_.data() + b, n};
}

std::span<const RelationId> KnowledgeGraph::head_relations(EntityId e) const {
    check_entity(e);
    auto b = head_rel_offsets_[static_cast<std::size_t>(e)];
    auto n = head_rel_offsets_[static_cast<std::size_t>(e) + 1] - b;
    return {head_rels_.data() + b, n};
}

void KnowledgeGraph::export_tab3(std::ostream& out) const {
    for (const Triple& t : triples_) {
        out << entity_labels_[static_cast<std::size_t>(t.head)] << '\t'
            << relation_labels_[static_cast<std::size_t>(t.relation)] << '\t'
            << entity_labels_[static_cast<std::size_t>(t.tail)] << '\n';
    }
}

}  // namespace apex
