#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "synthelite/chem/molecule.hpp"
#include "synthelite/chem/smarts.hpp"

namespace synthelite::chem {

inline constexpr std::size_t kMaxMatchSites = 50;

/// Retro-direction transformation "product>>reactant.reactant".
class RetroTemplate {
public:
    /// Throws TemplateError when the SMARTS is malformed or the product
    /// side has more than one component.
    RetroTemplate(std::string id, std::string smarts);

    const std::string& id() const { return id_; }
    const std::string& smarts() const { return smarts_; }
    const Pattern& product_pattern() const { return product_; }
    const Pattern& reactant_pattern() const { return reactants_; }

    /// The forward reading "reactants>>product".
    std::string forward_smarts() const;

private:
    std::string id_;
    std::string smarts_;
    Pattern product_;
    Pattern reactants_;
};

struct RetroReaction {
    Molecule product;
    std::vector<Molecule> reactants; ///< sorted, distinct
    std::string template_id;
    std::set<int> site; ///< map numbers of map_atoms(product)

    /// "product>>r1.r2"
    std::string retro_smiles() const;

    friend bool operator==(const RetroReaction&, const RetroReaction&) = default;
};

/// One reaction per distinct match site, sorted by site then reactants,
/// at most kMaxMatchSites.
std::vector<RetroReaction> apply_template(const RetroTemplate& tmpl, const Molecule& molecule);

/// Containment in either direction.
bool site_matches(const RetroReaction& reaction, const std::set<int>& requested);

/// Forward SMIRKS "reactants>>product": the product side must match the
/// product and the reactant side must match the reactants. When the
/// reaction records a site, some product-side match must touch it.
/// Throws PatternError for a malformed or empty pattern.
bool matches_smirks(const RetroReaction& reaction, std::string_view smirks);

/// Parses "product>>reactants" text into a RetroReaction with canonical
/// members and an empty site.
RetroReaction parse_retro_smiles(std::string_view text);

} // namespace synthelite::chem
