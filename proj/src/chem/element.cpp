#include "synthelite/chem/element.hpp"

#include <array>

namespace synthelite::chem {
namespace {

constexpr std::array<std::string_view, kMaxElement + 1> kSymbols = {
    "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu",
    "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn"};

constexpr std::array<int, 1> kV1 = {1};
constexpr std::array<int, 1> kV2 = {2};
constexpr std::array<int, 1> kV3 = {3};
constexpr std::array<int, 1> kV4 = {4};
constexpr std::array<int, 2> kV35 = {3, 5};
constexpr std::array<int, 3> kV246 = {2, 4, 6};

} // namespace

std::string_view element_symbol(int z) {
    if (z < 0 || z > kMaxElement) return "?";
    return kSymbols[static_cast<std::size_t>(z)];
}

int atomic_number(std::string_view symbol) {
    for (std::size_t z = 0; z < kSymbols.size(); ++z) {
        if (kSymbols[z] == symbol) return static_cast<int>(z);
    }
    return -1;
}

std::span<const int> default_valences(int z) {
    switch (z) {
    case 5: return kV3;
    case 6: return kV4;
    case 7: return kV35;
    case 8: return kV2;
    case 15: return kV35;
    case 16: return kV246;
    case 9:
    case 17:
    case 35:
    case 53: return kV1;
    default: return {};
    }
}

bool in_organic_subset(int z) { return !default_valences(z).empty(); }

bool may_be_aromatic(int z) {
    switch (z) {
    case 5:
    case 6:
    case 7:
    case 8:
    case 15:
    case 16:
    case 33:
    case 34:
    case 52: return true;
    default: return false;
    }
}

} // namespace synthelite::chem
