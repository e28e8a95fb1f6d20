#include "sqg/structure.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace sqg {

namespace {

struct SymKeyLess {
    bool operator()(const SymbolPtr& a, const SymbolPtr& b) const { return sym_less(a, b); }
};

std::vector<MultiIndex> monomials_below(const Rational& mu, const Rational& kappa,
                                        const Rational& cut, const Homogeneity& base) {
    // All k with degree(base) + |k|_s < cut. |k|_s = 2*mu*k0 + k1 + k2 and mu > 0,
    // so the index ranges are finite.
    std::vector<MultiIndex> out;
    Rational base_v = base.eval(mu, kappa);
    Rational two_mu = Rational(2) * mu;
    for (int k0 = 0;; ++k0) {
        Rational t_part = base_v + Rational(k0) * two_mu;
        if (t_part >= cut && k0 > 0) break;
        bool any_row = false;
        for (int k1 = 0;; ++k1) {
            Rational tk1 = t_part + Rational(k1);
            if (tk1 >= cut && k1 > 0) break;
            bool any = false;
            for (int k2 = 0;; ++k2) {
                if (tk1 + Rational(k2) >= cut) break;
                out.push_back({k0, k1, k2});
                any = true;
            }
            if (!any && k1 > 0) break;
            any_row = any_row || any;
        }
        if (!any_row && k0 > 0) break;
        if (k0 == 0 && t_part >= cut) break; // even the bare symbol fails the cut
    }
    return out;
}

} // namespace

std::vector<const StoredSymbol*> ModelSpace::level_tilde(int n) const {
    std::vector<const StoredSymbol*> out;
    for (const auto& s : symbols)
        if (s.level == n && !s.from_bar_set && s.level >= 1) out.push_back(&s);
    return out;
}

std::vector<const StoredSymbol*> ModelSpace::level_bar(int n) const {
    std::vector<const StoredSymbol*> out;
    for (const auto& s : symbols) {
        if (n == 0 && s.level == 0) { out.push_back(&s); continue; }
        if (s.level == n && s.from_bar_set) out.push_back(&s);
    }
    return out;
}

ModelSpace generate(const GenerationParams& params) {
    if (!(params.mu > Rational(0) && params.mu <= Rational(1)))
        throw std::invalid_argument("generate: mu must lie in (0,1]");
    if (params.kappa < Rational(0))
        throw std::invalid_argument("generate: kappa must be nonnegative");
    if (params.depth < 0) throw std::invalid_argument("generate: depth must be nonnegative");
    if (params.depth > params.max_depth)
        throw std::invalid_argument("generate: depth exceeds the hard cap");

    ModelSpace space;
    space.params = params;
    space.gamma_cut_value = params.gamma_cut
        ? *params.gamma_cut
        : Rational(1) + Rational(2) * params.kappa - params.mu;

    const Rational& mu = params.mu;
    const Rational& kappa = params.kappa;
    const Rational& cut = space.gamma_cut_value;

    std::set<SymbolPtr, SymKeyLess> seen;
    auto below_cut = [&](const SymbolPtr& s) { return s->homogeneity().eval(mu, kappa) < cut; };
    auto store = [&](const SymbolPtr& s, int level, bool bar) -> bool {
        if (!s || !below_cut(s) || seen.count(s)) return false;
        if (static_cast<int>(space.symbols.size()) >= params.max_symbols)
            throw std::runtime_error("generate: symbol budget exhausted (raise max_symbols)");
        seen.insert(s);
        space.symbols.push_back({s, s->homogeneity(), level, bar});
        return true;
    };

    // Monomial sector.
    for (const MultiIndex& k : monomials_below(mu, kappa, cut, Homogeneity{}))
        store(Symbol::poly(k), -1, false);

    // Cycle 0: the primitive integral of the noise.
    std::vector<SymbolPtr> bar_all;      // every IntDeriv-generated symbol so far + the primitive
    std::vector<SymbolPtr> bar_prev;     // the bar set of the previous cycle
    {
        auto xi = Symbol::xi_integral();
        store(xi, 0, true);
        bar_all.push_back(xi);
        bar_prev.push_back(xi);
    }

    std::vector<Rational> min_new_per_cycle;
    for (int n = 1; n <= params.depth; ++n) {
        std::vector<SymbolPtr> tilde_new;
        auto add_tilde = [&](SymbolPtr s) {
            if (store(s, n, false)) tilde_new.push_back(std::move(s));
        };

        for (const auto& tau : bar_prev) {
            for (int i = 1; i <= 2; ++i) {
                SymbolPtr r = Symbol::riesz(i, tau);
                add_tilde(r);
                for (const auto& bar : bar_all) add_tilde(Symbol::product({r, bar}));
                for (const MultiIndex& k :
                     monomials_below(mu, kappa, cut, r ? r->homogeneity() : Homogeneity{})) {
                    if (k.is_zero()) continue;
                    add_tilde(Symbol::product({r, Symbol::poly(k)}));
                }
            }
            for (const MultiIndex& k : monomials_below(mu, kappa, cut, tau->homogeneity())) {
                if (k.is_zero()) continue;
                add_tilde(Symbol::product({tau, Symbol::poly(k)}));
            }
        }

        std::vector<SymbolPtr> bar_new;
        for (const auto& tau : tilde_new) {
            for (int j = 1; j <= 2; ++j) {
                SymbolPtr s = Symbol::int_deriv(j, tau);
                if (store(s, n, true)) bar_new.push_back(std::move(s));
            }
        }

        Rational min_new(0);
        bool any_new = false;
        for (const auto& s : space.symbols) {
            if (s.level != n) continue;
            Rational v = s.degree.eval(mu, kappa);
            if (!any_new || v < min_new) min_new = v;
            any_new = true;
        }
        bar_all.insert(bar_all.end(), bar_new.begin(), bar_new.end());
        bar_prev = std::move(bar_new);
        if (!any_new) break;
        min_new_per_cycle.push_back(min_new);
    }

    // Non-termination diagnosis: the last cycle still produced symbols of
    // negative degree and there is no strict upward progress (equivalently the
    // symbolic per-cycle increment 3*mu-2-kappa is nonpositive).
    if (!min_new_per_cycle.empty() && min_new_per_cycle.back() < Rational(0)) {
        Rational increment = Rational(3) * mu - Rational(2) - kappa;
        bool no_progress = increment <= Rational(0);
        if (min_new_per_cycle.size() >= 2) {
            size_t m = min_new_per_cycle.size();
            no_progress = no_progress || min_new_per_cycle[m - 1] <= min_new_per_cycle[m - 2];
        }
        if (no_progress) {
            space.nonterminating = true;
            space.diagnostic =
                "generation reached the depth limit while the last cycle still produced symbols "
                "of negative degree (minimum " + min_new_per_cycle.back().str() +
                ") and the per-cycle increment " + increment.str() +
                " shows no upward progress; the input (mu,kappa) is not subcritical";
        }
    }
    return space;
}

std::vector<NegativeEntry> collapse_shapes(const std::vector<const StoredSymbol*>& symbols,
                                           const Rational& mu, const Rational& kappa) {
    std::map<std::string, NegativeEntry> by_shape;
    for (const auto* s : symbols) {
        if (s->symbol->contains_poly()) continue;
        std::string key = s->symbol->shape();
        auto it = by_shape.find(key);
        if (it == by_shape.end())
            by_shape.emplace(key, NegativeEntry{s->symbol, s->degree, 1, key});
        else {
            it->second.multiplicity += 1;
            if (sym_less(s->symbol, it->second.symbol)) it->second.symbol = s->symbol;
        }
    }
    std::vector<NegativeEntry> out;
    for (auto& [k, v] : by_shape) out.push_back(v);
    std::sort(out.begin(), out.end(), [&](const NegativeEntry& a, const NegativeEntry& b) {
        Rational va = a.degree.eval(mu, kappa), vb = b.degree.eval(mu, kappa);
        if (va != vb) return va < vb;
        return a.text < b.text;
    });
    return out;
}

NegativeTable negative_symbols(const ModelSpace& space) {
    const Rational& mu = space.params.mu;
    const Rational& kappa = space.params.kappa;

    std::vector<const StoredSymbol*> neg;
    for (const auto& s : space.symbols)
        if (s.degree.eval(mu, kappa) < Rational(0)) neg.push_back(&s);

    auto degree_order = [&](const NegativeEntry& a, const NegativeEntry& b) {
        Rational va = a.degree.eval(mu, kappa), vb = b.degree.eval(mu, kappa);
        if (va != vb) return va < vb;
        return sym_less(a.symbol, b.symbol);
    };

    NegativeTable table;
    for (const auto* s : neg)
        table.indexed.push_back({s->symbol, s->degree, 1, s->symbol->str()});
    std::sort(table.indexed.begin(), table.indexed.end(), degree_order);

    table.shapes = collapse_shapes(neg, mu, kappa);

    std::map<std::string, NegativeEntry> disp;
    for (const auto* s : neg) {
        std::string key = s->symbol->root_collapsed();
        auto it = disp.find(key);
        if (it == disp.end()) disp.emplace(key, NegativeEntry{s->symbol, s->degree, 1, key});
        else it->second.multiplicity += 1;
    }
    for (auto& [k, v] : disp) table.display.push_back(v);
    std::sort(table.display.begin(), table.display.end(), degree_order);

    if (!table.indexed.empty()) table.min_degree = table.indexed.front().degree;
    return table;
}

SubcriticalityResult is_subcritical(const Rational& mu) {
    if (!(mu > Rational(0) && mu <= Rational(1)))
        throw std::invalid_argument("is_subcritical: mu must lie in (0,1]");
    SubcriticalityResult r;
    // One cycle applied to the worst symbol: multiply by the minimal sector
    // element (degree mu-1 at kappa=0) and integrate (degree +2*mu-1).
    r.increment = Homogeneity{Rational(-1), Rational(1), Rational(-1)} +
                  Homogeneity{Rational(-1), Rational(2), Rational(0)};
    r.increment_value = r.increment.eval(mu, Rational(0));
    r.subcritical = r.increment_value > Rational(0);
    return r;
}

} // namespace sqg
