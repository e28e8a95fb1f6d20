#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqg/symbol.hpp"

namespace sqg {

struct GenerationParams {
    Rational mu;
    Rational kappa;
    int depth = 2;
    /// Symbols of degree >= gamma_cut (evaluated exactly at (mu,kappa)) are
    /// dropped. Defaults to 1 + 2*kappa - mu when not set.
    std::optional<Rational> gamma_cut;
    int max_symbols = 10000;
    int max_depth = 4;
};

struct StoredSymbol {
    SymbolPtr symbol;
    Homogeneity degree;
    int level = 0; // generation cycle that produced it; -1 for the monomial sector
    bool from_bar_set = false; // produced as IntDeriv of a fresh product
};

struct ModelSpace {
    GenerationParams params;
    Rational gamma_cut_value;
    std::vector<StoredSymbol> symbols; // insertion order: level by level
    /// Set when the final cycle still produced symbols of negative degree,
    /// i.e. generation shows no sign of terminating (non-subcritical input).
    bool nonterminating = false;
    std::string diagnostic;

    std::vector<const StoredSymbol*> level_tilde(int n) const; // fresh product symbols of cycle n
    std::vector<const StoredSymbol*> level_bar(int n) const;   // IntDeriv symbols of cycle n
};

struct NegativeEntry {
    SymbolPtr symbol;       // representative (first in canonical order)
    Homogeneity degree;
    int multiplicity = 1;   // indexed symbols collapsing onto this entry
    std::string text;
};

/// The table of negative-degree symbols in three bookkeeping conventions:
/// every indexed symbol, fully index-erased shapes with multiplicities, and
/// the display convention that erases only a root Riesz index.
struct NegativeTable {
    std::vector<NegativeEntry> indexed;
    std::vector<NegativeEntry> shapes;
    std::vector<NegativeEntry> display;
    Homogeneity min_degree;
};

struct SubcriticalityResult {
    bool subcritical = false;
    /// Degree gained per generation cycle at kappa = 0: product with the
    /// minimal sector symbol adds mu-1, IntDeriv adds 2*mu-1.
    Homogeneity increment;
    Rational increment_value; // increment evaluated at (mu, 0)
};

/// Runs the generation cycles up to params.depth and returns every stored
/// symbol with its exact degree. Monomials below the cut are included and
/// carry level -1; those with a positive time exponent are annihilated by the
/// realization map and are flagged via Symbol::contains_time_poly.
ModelSpace generate(const GenerationParams& params);

/// Negative-degree symbols of the space sorted by degree at (mu,kappa),
/// ties broken by canonical symbol order.
NegativeTable negative_symbols(const ModelSpace& space);

SubcriticalityResult is_subcritical(const Rational& mu);

/// Index-erased shape table of one generation set ("tilde"/"bar" of a cycle),
/// monomial-free, sorted by degree then shape text: the form the tables are
/// reported in.
std::vector<NegativeEntry> collapse_shapes(const std::vector<const StoredSymbol*>& symbols,
                                           const Rational& mu, const Rational& kappa);

} // namespace sqg
