#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sqg/homogeneity.hpp"

namespace sqg {

class Symbol;
using SymbolPtr = std::shared_ptr<const Symbol>;

/// Rooted decorated tree over the generators
///   XiIntegral           — the primitive stochastic convolution
///   Poly(k)              — abstract monomial X^k
///   IntDeriv(j, child)   — convolution with the j-th spatial derivative of the heat kernel
///   Riesz(i, child)      — i-th Riesz transform component
///   Product(factors)     — commutative product, factors in canonical order
///
/// Trees are immutable and always built through the factory functions below,
/// which enforce the canonical form:
///  * product factors sorted by structural order, nested products flattened,
///  * monomial factors merged (X^a * X^b = X^{a+b}), unit factors dropped,
///  * IntDeriv/Riesz of a pure monomial collapse to the zero symbol (nullptr).
class Symbol {
public:
    enum class Kind { XiIntegral, Poly, IntDeriv, Riesz, Product };

    Kind kind() const { return kind_; }
    const MultiIndex& index() const { return index_; }
    int dir() const { return dir_; }
    const std::vector<SymbolPtr>& factors() const { return children_; }
    const SymbolPtr& child() const { return children_.front(); }

    static SymbolPtr xi_integral();
    static SymbolPtr poly(MultiIndex k);
    static SymbolPtr one() { return poly({0, 0, 0}); }
    /// Returns nullptr (the zero symbol) when child is a pure monomial.
    static SymbolPtr int_deriv(int j, SymbolPtr child);
    /// Returns nullptr when child is a pure monomial.
    static SymbolPtr riesz(int i, SymbolPtr child);
    static SymbolPtr product(std::vector<SymbolPtr> factors);

    Homogeneity homogeneity() const;
    bool contains_poly() const;
    bool contains_time_poly() const;
    /// Number of XiIntegral leaves (the Wiener-chaos order of the symbol).
    int xi_count() const;

    /// Canonical text form, e.g. "I1[R2[I[Xi]]*I[Xi]]", "X^(0,1,0)", "I[Xi]*R1[I[Xi]]".
    std::string str() const;
    /// Parses the canonical text form back into a (canonicalized) symbol.
    static SymbolPtr parse(const std::string& text);
    /// Text form with all direction indices erased; distinct trees with the
    /// same index-erased print are the same "shape".
    std::string shape() const;
    /// Text form with only the root-level Riesz index erased (the convention
    /// used when reporting the negative-degree table).
    std::string root_collapsed() const;

    static int compare(const Symbol& a, const Symbol& b);
    friend bool sym_less(const SymbolPtr& a, const SymbolPtr& b) {
        return Symbol::compare(*a, *b) < 0;
    }
    friend bool sym_equal(const SymbolPtr& a, const SymbolPtr& b) {
        return Symbol::compare(*a, *b) == 0;
    }

private:
    Symbol(Kind k, MultiIndex idx, int dir, std::vector<SymbolPtr> ch)
        : kind_(k), index_(idx), dir_(dir), children_(std::move(ch)) {}

    std::string print(int index_mode) const; // 0 full, 1 erase all, 2 erase root Riesz

    Kind kind_;
    MultiIndex index_{};
    int dir_ = 0;
    std::vector<SymbolPtr> children_;
};

} // namespace sqg
