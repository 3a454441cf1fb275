#include "synthelite/chem/molecule.hpp"

#include <fstream>

#include "synthelite/chem/smiles.hpp"
#include "synthelite/error.hpp"

namespace synthelite::chem {

Molecule canonicalize(std::string_view smiles) {
    return Molecule{canonical_smiles(parse_smiles(smiles))};
}

MolGraph molecule_graph(const Molecule& molecule) { return parse_smiles(molecule.smiles); }

MappedMolecule map_atoms(const Molecule& molecule) {
    const MolGraph g = molecule_graph(molecule);
    WriteOptions options;
    options.write_maps = false;
    options.number_atoms = true;
    MappedMolecule out;
    out.smiles = write_smiles(g, options);
    // The canonical string is written in parse order, so atom i is output position i.
    out.index_of.resize(g.atom_count() + 1, -1);
    for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) out.index_of[static_cast<std::size_t>(a) + 1] = a;
    return out;
}

Molecule strip_maps(std::string_view mapped_smiles) {
    return canonicalize(mapped_smiles);
}

Stock::Stock(const std::vector<std::string>& smiles) {
    for (const auto& s : smiles) members_.insert(canonicalize(s).smiles);
}

Stock Stock::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open stock file " + path);
    Stock stock;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_first_of(" \t\r", first);
        const auto token = line.substr(first, last == std::string::npos ? std::string::npos : last - first);
        try {
            stock.members_.insert(canonicalize(token).smiles);
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return stock;
}

bool Stock::contains_smiles(std::string_view smiles) const {
    try {
        return contains(canonicalize(smiles));
    } catch (const ParseError&) {
        return false;
    }
}

} // namespace synthelite::chem
