#pragma once

#include <span>
#include <string_view>

namespace synthelite::chem {

inline constexpr int kMaxElement = 86;

/// Symbol for an atomic number; "*" for 0.
std::string_view element_symbol(int atomic_number);

/// Atomic number for a capitalised symbol ("Cl"), or -1.
int atomic_number(std::string_view symbol);

/// Normal valences used to infer implicit hydrogens, ascending.
/// Empty for elements outside the SMILES organic subset.
std::span<const int> default_valences(int atomic_number);

bool in_organic_subset(int atomic_number);

/// Elements that may be written with a lowercase aromatic symbol.
bool may_be_aromatic(int atomic_number);

} // namespace synthelite::chem
