#include "qdgan/genome.hpp"

#include <algorithm>
#include <sstream>

#include "qdgan/errors.hpp"

namespace qdgan {

std::string to_string(Role r) {
    return r == Role::Generator ? "generator" : "discriminator";
}

Role role_from_string(const std::string& s) {
    if (s == "generator") return Role::Generator;
    if (s == "discriminator") return Role::Discriminator;
    throw usage_error("unknown role '" + s + "'");
}

bool legal_kind(Role role, LayerKind kind) {
    switch (kind) {
        case LayerKind::Linear: return true;
        case LayerKind::Conv2d: return role == Role::Discriminator;
        case LayerKind::Deconv2d: return role == Role::Generator;
    }
    return false;
}

Gene random_gene(Role role, const GenomeLimits& limits, Rng& rng, std::uint64_t& next_uid) {
    Gene g;
    g.uid = next_uid++;
    const LayerKind spatial =
        role == Role::Generator ? LayerKind::Deconv2d : LayerKind::Conv2d;
    g.kind = rng.bernoulli(0.5) ? LayerKind::Linear : spatial;
    g.activation = kGeneActivations[rng.uniform_index(5)];
    g.width = static_cast<std::size_t>(
        rng.uniform_int(static_cast<long>(limits.width_min), static_cast<long>(limits.width_max)));
    return g;
}

Genome mutate(const Genome& genome, const GenomeLimits& limits, const MutationRates& rates,
              Rng& rng, std::uint64_t& next_uid, MutationOutcome* outcome) {
    Genome child = genome;
    MutationOutcome local;

    if (rng.bernoulli(rates.add) && child.genes.size() < limits.genome_limit) {
        std::size_t pos = rng.uniform_index(child.genes.size() + 1);
        Gene g = random_gene(child.role, limits, rng, next_uid);
        child.genes.insert(child.genes.begin() + static_cast<long>(pos), g);
        local.added = true;
    }
    if (rng.bernoulli(rates.remove) && child.genes.size() > 1) {
        std::size_t pos = rng.uniform_index(child.genes.size());
        child.genes.erase(child.genes.begin() + static_cast<long>(pos));
        local.removed = true;
    }
    if (rng.bernoulli(rates.change) && !child.genes.empty()) {
        Gene& g = child.genes[rng.uniform_index(child.genes.size())];
        bool reroll_act = rng.bernoulli(0.5);
        bool reroll_width = rng.bernoulli(0.5);
        if (!reroll_act && !reroll_width) reroll_act = true;
        if (reroll_act) g.activation = kGeneActivations[rng.uniform_index(5)];
        if (reroll_width) {
            std::size_t w = static_cast<std::size_t>(rng.uniform_int(
                static_cast<long>(limits.width_min), static_cast<long>(limits.width_max)));
            if (w != g.width) {
                g.width = w;
                g.uid = next_uid++;  // width changes the layer shape
            }
        }
        local.changed = true;
    }

    if (outcome != nullptr) *outcome = local;
    return child;
}

namespace {

double gene_sub_cost(const Gene& a, const Gene& b) {
    if (a.kind != b.kind) return 1.0;
    if (a.activation != b.activation) return 0.5;
    if (a.width != b.width) return 0.25;
    return 0.0;
}

}  // namespace

double genome_distance(const Genome& a, const Genome& b) {
    if (a.role != b.role) throw usage_error("genome_distance requires matching roles");
    const std::size_t n = a.genes.size(), m = b.genes.size();
    if (n == 0 && m == 0) return 0.0;
    std::vector<double> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<double>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<double>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            double sub = prev[j - 1] + gene_sub_cost(a.genes[i - 1], b.genes[j - 1]);
            cur[j] = std::min({sub, prev[j] + 1.0, cur[j - 1] + 1.0});
        }
        std::swap(prev, cur);
    }
    return prev[m] / static_cast<double>(std::max(n, m));
}

std::string serialize_genome(const Genome& genome) {
    std::ostringstream os;
    os << to_string(genome.role);
    for (const Gene& g : genome.genes)
        os << ';' << to_string(g.kind) << ':' << to_string(g.activation) << ':' << g.width;
    return os.str();
}

Genome parse_genome(const std::string& text, std::uint64_t& next_uid) {
    std::vector<std::string> parts;
    std::string token;
    std::istringstream is(text);
    while (std::getline(is, token, ';')) parts.push_back(token);
    if (parts.empty()) throw usage_error("empty genome text");

    Genome genome;
    genome.role = role_from_string(parts[0]);
    for (std::size_t i = 1; i < parts.size(); ++i) {
        std::istringstream gs(parts[i]);
        std::string kind, act, width;
        if (!std::getline(gs, kind, ':') || !std::getline(gs, act, ':') ||
            !std::getline(gs, width))
            throw usage_error("malformed gene '" + parts[i] + "' (want kind:activation:width)");
        Gene g;
        g.uid = next_uid++;
        g.kind = layer_kind_from_string(kind);
        g.activation = activation_from_string(act);
        long w = 0;
        try {
            w = std::stol(width);
        } catch (const std::exception&) {
            throw usage_error("bad width '" + width + "' in gene '" + parts[i] + "'");
        }
        if (w <= 0) throw usage_error("gene width must be positive, got " + width);
        g.width = static_cast<std::size_t>(w);
        if (!legal_kind(genome.role, g.kind))
            throw usage_error(to_string(g.kind) + " gene is not legal for a " +
                              to_string(genome.role) + " genome");
        genome.genes.push_back(g);
    }
    if (genome.genes.empty()) throw usage_error("genome must contain at least one gene");
    return genome;
}

}  // namespace qdgan
