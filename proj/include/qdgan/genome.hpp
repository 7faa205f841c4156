#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdgan/nn.hpp"
#include "qdgan/rng.hpp"

namespace qdgan {

enum class Role { Generator, Discriminator };

std::string to_string(Role r);
Role role_from_string(const std::string& s);

// One evolvable layer. `width` is out_features for Linear genes and
// out_channels for Conv2d/Deconv2d genes.
struct Gene {
    std::uint64_t uid = 0;
    LayerKind kind = LayerKind::Linear;
    Activation activation = Activation::ReLU;
    std::size_t width = 32;
};

struct Genome {
    Role role = Role::Generator;
    std::vector<Gene> genes;
};

struct MutationRates {
    double add = 0.3;
    double remove = 0.1;
    double change = 0.1;
};

struct GenomeLimits {
    std::size_t genome_limit = 4;
    std::size_t width_min = 32;
    std::size_t width_max = 256;
};

// Which structural operators actually fired during one mutate() call.
struct MutationOutcome {
    bool added = false;
    bool removed = false;
    bool changed = false;
};

// Generators carry Linear/Deconv2d genes, discriminators Linear/Conv2d.
bool legal_kind(Role role, LayerKind kind);

Gene random_gene(Role role, const GenomeLimits& limits, Rng& rng, std::uint64_t& next_uid);

// Rolls add/remove/change independently (in that order). Infeasible
// sub-mutations (add at the genome limit, remove at length 1) are skipped.
// A change keeps the gene's uid unless it alters the width.
Genome mutate(const Genome& genome, const GenomeLimits& limits, const MutationRates& rates,
              Rng& rng, std::uint64_t& next_uid, MutationOutcome* outcome = nullptr);

// Normalized edit distance over gene signatures (uid ignored): substitution
// costs 1 across kinds, 0.5 across activations, 0.25 across widths;
// insert/delete cost 1; total divided by max(len(a), len(b)).
double genome_distance(const Genome& a, const Genome& b);

// Text form `role;kind:activation:width;...`, e.g.
// `generator;linear:relu:64;deconv2d:tanh:32`.
std::string serialize_genome(const Genome& genome);
Genome parse_genome(const std::string& text, std::uint64_t& next_uid);

}  // namespace qdgan
