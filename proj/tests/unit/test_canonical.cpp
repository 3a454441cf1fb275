#include <gtest/gtest.h>

#include <random>

#include "synthelite/chem/molecule.hpp"
#include "synthelite/chem/smiles.hpp"
#include "synthelite/error.hpp"

using namespace synthelite;
using namespace synthelite::chem;

TEST(Canonicalize, OracleExamples) {
    EXPECT_EQ(canonicalize("OCC").smiles, "CCO");
    EXPECT_EQ(canonicalize("CNC(C)=O").smiles, "CNC(C)=O");
    EXPECT_EQ(canonicalize("CC(=O)NC(C)=O").smiles, "CC(=O)NC(C)=O");
}

TEST(Canonicalize, UnbalancedParenthesis) {
    EXPECT_THROW(canonicalize("C("), ParseError);
}

TEST(MapAtoms, SingleAtom) {
    EXPECT_EQ(map_atoms(canonicalize("C")).smiles, "[CH4:1]");
}

TEST(MapAtoms, Ethanol) {
    EXPECT_EQ(map_atoms(canonicalize("OCC")).smiles, "[CH3:1][CH2:2][OH:3]");
}
