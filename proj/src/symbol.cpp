#include "sqg/symbol.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace sqg {

namespace {

// Factor order inside products: Riesz-rooted factors first, then integrals,
// the bare noise integral, and trailing monomials.
int kind_rank(Symbol::Kind k) {
    switch (k) {
        case Symbol::Kind::Riesz: return 0;
        case Symbol::Kind::IntDeriv: return 1;
        case Symbol::Kind::XiIntegral: return 2;
        case Symbol::Kind::Poly: return 3;
        case Symbol::Kind::Product: return 4;
    }
    return 5;
}

} // namespace

SymbolPtr Symbol::xi_integral() {
    return SymbolPtr(new Symbol(Kind::XiIntegral, {}, 0, {}));
}

SymbolPtr Symbol::poly(MultiIndex k) {
    return SymbolPtr(new Symbol(Kind::Poly, k, 0, {}));
}

SymbolPtr Symbol::int_deriv(int j, SymbolPtr child) {
    if (j != 1 && j != 2) throw std::invalid_argument("Symbol::int_deriv: direction must be 1 or 2");
    if (!child) return nullptr;
    if (child->kind() == Kind::Poly) return nullptr; // abstract integration kills monomials
    return SymbolPtr(new Symbol(Kind::IntDeriv, {}, j, {std::move(child)}));
}

SymbolPtr Symbol::riesz(int i, SymbolPtr child) {
    if (i != 1 && i != 2) throw std::invalid_argument("Symbol::riesz: direction must be 1 or 2");
    if (!child) return nullptr;
    if (child->kind() == Kind::Poly) return nullptr;
    if (child->kind() != Kind::XiIntegral && child->kind() != Kind::IntDeriv)
        throw std::invalid_argument("Symbol::riesz: argument must lie in the integration sector");
    return SymbolPtr(new Symbol(Kind::Riesz, {}, i, {std::move(child)}));
}

SymbolPtr Symbol::product(std::vector<SymbolPtr> factors) {
    std::vector<SymbolPtr> flat;
    MultiIndex poly_idx{0, 0, 0};
    bool has_poly = false;
    for (auto& f : factors) {
        if (!f) return nullptr; // zero annihilates
        if (f->kind() == Kind::Product) {
            for (auto& g : f->children_) {
                if (g->kind() == Kind::Poly) { poly_idx = poly_idx + g->index(); has_poly = true; }
                else flat.push_back(g);
            }
        } else if (f->kind() == Kind::Poly) {
            poly_idx = poly_idx + f->index();
            has_poly = true;
        } else {
            flat.push_back(f);
        }
    }
    if (has_poly && !poly_idx.is_zero()) flat.push_back(poly(poly_idx)); // X^0 acts as the unit
    if (flat.empty()) return one();
    if (flat.size() == 1) return flat.front();
    std::sort(flat.begin(), flat.end(), [](const SymbolPtr& a, const SymbolPtr& b) { return sym_less(a, b); });
    return SymbolPtr(new Symbol(Kind::Product, {}, 0, std::move(flat)));
}

Homogeneity Symbol::homogeneity() const {
    switch (kind_) {
        case Kind::XiIntegral:
            return {Rational(-1), Rational(1), Rational(-1)};
        case Kind::Poly:
            return index_.scaled_degree();
        case Kind::IntDeriv: // adds 2*mu - 1
            return children_[0]->homogeneity() + Homogeneity{Rational(-1), Rational(2), Rational(0)};
        case Kind::Riesz:
            return children_[0]->homogeneity();
        case Kind::Product: {
            Homogeneity h;
            for (const auto& c : children_) h += c->homogeneity();
            return h;
        }
    }
    return {};
}

bool Symbol::contains_poly() const {
    if (kind_ == Kind::Poly) return !index_.is_zero();
    for (const auto& c : children_)
        if (c->contains_poly()) return true;
    return false;
}

bool Symbol::contains_time_poly() const {
    if (kind_ == Kind::Poly) return index_.k0 > 0;
    for (const auto& c : children_)
        if (c->contains_time_poly()) return true;
    return false;
}

int Symbol::xi_count() const {
    if (kind_ == Kind::XiIntegral) return 1;
    int n = 0;
    for (const auto& c : children_) n += c->xi_count();
    return n;
}

int Symbol::compare(const Symbol& a, const Symbol& b) {
    int ra = kind_rank(a.kind_), rb = kind_rank(b.kind_);
    if (ra != rb) return ra < rb ? -1 : 1;
    if (a.kind_ == Kind::Poly) {
        if (a.index_ == b.index_) return 0;
        return a.index_ < b.index_ ? -1 : 1;
    }
    if (a.dir_ != b.dir_) return a.dir_ < b.dir_ ? -1 : 1;
    size_t n = std::min(a.children_.size(), b.children_.size());
    for (size_t i = 0; i < n; ++i) {
        int c = compare(*a.children_[i], *b.children_[i]);
        if (c != 0) return c;
    }
    if (a.children_.size() != b.children_.size())
        return a.children_.size() < b.children_.size() ? -1 : 1;
    return 0;
}

std::string Symbol::print(int index_mode) const {
    switch (kind_) {
        case Kind::XiIntegral:
            return "I[Xi]";
        case Kind::Poly:
            return "X^" + index_.str();
        case Kind::IntDeriv: {
            std::string tag = index_mode == 1 ? "Ij" : "I" + std::to_string(dir_);
            return tag + "[" + children_[0]->print(index_mode == 2 ? 0 : index_mode) + "]";
        }
        case Kind::Riesz: {
            std::string tag = index_mode == 0 ? "R" + std::to_string(dir_) : "Ri";
            return tag + "[" + children_[0]->print(index_mode == 2 ? 0 : index_mode) + "]";
        }
        case Kind::Product: {
            std::string s;
            for (size_t i = 0; i < children_.size(); ++i) {
                if (i) s += "*";
                s += children_[i]->print(index_mode == 2 ? 0 : index_mode);
            }
            return s;
        }
    }
    return "?";
}

std::string Symbol::str() const { return print(0); }
std::string Symbol::shape() const { return print(1); }
std::string Symbol::root_collapsed() const { return print(2); }

namespace {

struct Parser {
    const std::string& s;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("Symbol::parse: " + what + " at position " +
                                    std::to_string(pos) + " of '" + s + "'");
    }
    bool eat(char c) {
        if (pos < s.size() && s[pos] == c) { ++pos; return true; }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }
    int integer() {
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (start == pos) fail("expected an integer");
        return std::stoi(s.substr(start, pos - start));
    }

    SymbolPtr factor() {
        if (s.compare(pos, 5, "I[Xi]") == 0) { pos += 5; return Symbol::xi_integral(); }
        if (eat('X')) {
            expect('^');
            expect('(');
            int k0 = integer();
            expect(',');
            int k1 = integer();
            expect(',');
            int k2 = integer();
            expect(')');
            return Symbol::poly({k0, k1, k2});
        }
        if (pos < s.size() && (s[pos] == 'I' || s[pos] == 'R')) {
            char op = s[pos++];
            int dir = integer();
            expect('[');
            SymbolPtr inner = expression();
            expect(']');
            return op == 'I' ? Symbol::int_deriv(dir, inner) : Symbol::riesz(dir, inner);
        }
        fail("expected a symbol factor");
    }

    SymbolPtr expression() {
        std::vector<SymbolPtr> factors{factor()};
        while (eat('*')) factors.push_back(factor());
        return factors.size() == 1 ? factors[0] : Symbol::product(std::move(factors));
    }
};

} // namespace

SymbolPtr Symbol::parse(const std::string& text) {
    Parser p{text};
    SymbolPtr out = p.expression();
    if (p.pos != text.size()) p.fail("trailing input");
    if (!out) throw std::invalid_argument("Symbol::parse: '" + text + "' is the zero symbol");
    return out;
}

} // namespace sqg
