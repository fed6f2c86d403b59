#include "catwalk/error.hpp"
#include "catwalk/grammar.hpp"

#include <algorithm>
#include <deque>
#include <functional>

// Monotone-difference construction: the excursion chain F^{[>=j]}_{j,j} and the
// prime chain A_{j,0} are replaced by telescoping sums X + D_1 + ... and
// A00 + B_1 + ..., every other referenced function is kept whole, and pairs of
// chain-adjacent functions that genuinely differ get lazy difference variables
// whose equations are the (positive) term-by-term differences.

namespace catwalk {

namespace {

struct RefCombo {
    // linear combination: sum of poly * (optional variable)
    struct Part {
        UniPolynomial poly;
        std::optional<VarId> var;
    };
    std::vector<Part> parts;

    static RefCombo zero() { return {}; }
    static RefCombo var(VarId v) {
        RefCombo c;
        c.parts.push_back({UniPolynomial::constant(Rational(1)), v});
        return c;
    }
    static RefCombo poly(const UniPolynomial& p) {
        RefCombo c;
        if (!p.is_zero()) c.parts.push_back({p, std::nullopt});
        return c;
    }
    void add_var(VarId v) { parts.push_back({UniPolynomial::constant(Rational(1)), v}); }
};

struct DiffBuilder {
    GrammarCompiler& compiler;
    const CatalyticSystem& sys;
    int sf;
    DifferenceSystem out;

    // chain variables
    std::map<std::pair<int, int>, VarId> xvars;           // (s,t) -> X
    std::map<std::pair<int, int>, VarId> xnvars;          // (s,t) -> XN, d > 1
    std::map<std::pair<int, int>, std::optional<VarId>> a00vars;
    std::map<std::tuple<int, int, int>, std::optional<VarId>> bvars; // (s,t,j)
    std::map<std::tuple<int, int, int>, std::optional<VarId>> dvars; // (s,t,j)

    // auxiliary whole variables and lazy pair differences
    std::map<FIndex, VarId> faux, nfaux;
    std::map<PrimeIndex, VarId> paux;
    std::map<std::pair<int, FIndex>, std::optional<VarId>> fdiff;   // kind tag 0=F 1=NF
    std::map<PrimeIndex, std::optional<VarId>> pdiff;

    struct Pending {
        enum class What { F, NF, Prime, DiffF, DiffNF, DiffPrime, X, XN, A00, D, B } what;
        FIndex f{};
        PrimeIndex p{};
    };
    std::deque<Pending> queue;

    VarId new_var(VarMeta meta) {
        VarId v = out.system.add_variable(grammar_var_name(sys.d, meta));
        out.meta.push_back(meta);
        return v;
    }

    bool diag_pure(const FIndex& f) const {
        return f.k1 == f.k2 && f.k1 == f.fl && f.fl <= sf;
    }

    static FIndex shifted_down(const FIndex& f) {
        return FIndex{f.s, f.t, f.k1 - 1, f.k2 - 1, f.fl - 1};
    }

    // --- variable lookup / creation -------------------------------------

    VarId x_var(int s, int t) { return xvars.at({s, t}); }

    VarId xn_var(int s, int t) {
        auto it = xnvars.find({s, t});
        if (it != xnvars.end()) return it->second;
        VarMeta meta;
        meta.kind = VarMeta::Kind::NF;
        meta.f = FIndex{s, t, 0, 0, 0};
        VarId v = new_var(meta);
        xnvars[{s, t}] = v;
        queue.push_back({Pending::What::XN, meta.f, {}});
        return v;
    }

    VarId f_aux(const FIndex& idx) {
        auto it = faux.find(idx);
        if (it != faux.end()) return it->second;
        VarMeta meta;
        meta.kind = VarMeta::Kind::F;
        meta.f = idx;
        VarId v = new_var(meta);
        faux[idx] = v;
        queue.push_back({Pending::What::F, idx, {}});
        return v;
    }

    VarId nf_aux(const FIndex& idx) {
        auto it = nfaux.find(idx);
        if (it != nfaux.end()) return it->second;
        VarMeta meta;
        meta.kind = VarMeta::Kind::NF;
        meta.f = idx;
        VarId v = new_var(meta);
        nfaux[idx] = v;
        queue.push_back({Pending::What::NF, idx, {}});
        return v;
    }

    VarId prime_aux(const PrimeIndex& rep) {
        auto it = paux.find(rep);
        if (it != paux.end()) return it->second;
        VarMeta meta;
        meta.kind = VarMeta::Kind::Prime;
        meta.p = rep;
        VarId v = new_var(meta);
        paux[rep] = v;
        queue.push_back({Pending::What::Prime, {}, rep});
        return v;
    }

    std::optional<VarId> f_pair_diff(const FIndex& hi, bool nf) {
        auto key = std::make_pair(nf ? 1 : 0, hi);
        auto it = fdiff.find(key);
        if (it != fdiff.end()) return it->second;
        FIndex lo = shifted_down(hi);
        SlottedEquation ehi = nf ? compiler.nf_equation(hi, FSplit::prime_first)
                                 : compiler.f_equation(hi, FSplit::prime_first);
        SlottedEquation elo = nf ? compiler.nf_equation(lo, FSplit::prime_first)
                                 : compiler.f_equation(lo, FSplit::prime_first);
        if (resolved_equal(ehi, elo)) {
            fdiff[key] = std::nullopt;
            return std::nullopt;
        }
        VarMeta meta;
        meta.kind = nf ? VarMeta::Kind::DiffNF : VarMeta::Kind::Diff;
        meta.f = hi;
        VarId v = new_var(meta);
        fdiff[key] = v;
        queue.push_back({nf ? Pending::What::DiffNF : Pending::What::DiffF, hi, {}});
        return v;
    }

    std::optional<VarId> prime_pair_diff(const PrimeIndex& hi) {
        auto it = pdiff.find(hi);
        if (it != pdiff.end()) return it->second;
        PrimeIndex lo = hi;
        lo.k -= 1;
        SlottedEquation ehi = compiler.prime_equation(hi);
        SlottedEquation elo = compiler.prime_equation(lo);
        if (resolved_equal(ehi, elo)) {
            pdiff[hi] = std::nullopt;
            return std::nullopt;
        }
        VarMeta meta;
        meta.kind = VarMeta::Kind::DiffPrime;
        meta.p = hi;
        VarId v = new_var(meta);
        pdiff[hi] = v;
        queue.push_back({Pending::What::DiffPrime, {}, hi});
        return v;
    }

    // --- equation comparison (prime refs compared through representatives) --

    GrammarRef resolve_ref(GrammarRef r) const {
        if (r.kind == GrammarRef::Kind::Prime) r.p = compiler.prime_rep(r.p);
        return r;
    }

    bool resolved_equal(const SlottedEquation& a, const SlottedEquation& b) const {
        if (!(a.constant == b.constant)) return false;
        if (a.slots.size() != b.slots.size()) return false;
        auto ia = a.slots.begin(), ib = b.slots.begin();
        for (; ia != a.slots.end(); ++ia, ++ib) {
            if (ia->first != ib->first) return false;
            if (!(ia->second.xpoly == ib->second.xpoly)) return false;
            if (ia->second.refs.size() != ib->second.refs.size()) return false;
            for (size_t p = 0; p < ia->second.refs.size(); ++p)
                if (!(resolve_ref(ia->second.refs[p]) == resolve_ref(ib->second.refs[p])))
                    return false;
        }
        return true;
    }

    // --- reference translation -------------------------------------------

    RefCombo chain_combo_f(const FIndex& idx, bool nf) {
        RefCombo c;
        if (nf)
            c = RefCombo::var(xn_var(idx.s, idx.t));
        else
            c = RefCombo::var(x_var(idx.s, idx.t));
        for (int j = 1; j <= idx.fl; ++j) {
            auto d = dvars.at({idx.s, idx.t, j});
            if (d) c.add_var(*d);
        }
        return c;
    }

    RefCombo chain_combo_a(int s, int t, int level) {
        RefCombo c;
        const auto& a00 = a00vars.at({s, t});
        if (a00) {
            c = RefCombo::var(*a00);
        } else {
            PrimeClassEntry st = compiler.classify().lookup(PrimeIndex{s, t, 0, 0, false});
            if (st.status == PrimeStatus::explicit_poly) c = RefCombo::poly(st.poly);
        }
        for (int j = 1; j <= std::min(level, sf); ++j) {
            auto b = bvars.at({s, t, j});
            if (b) c.add_var(*b);
        }
        return c;
    }

    RefCombo translate_ref(const GrammarRef& r) {
        if (r.kind == GrammarRef::Kind::Prime) {
            PrimeIndex p = r.p;
            if (p.rev && p.i == 0) p.rev = false;
            if (!p.rev && p.i == 0) return chain_combo_a(p.s, p.t, p.k);
            PrimeClassEntry st = compiler.classify().lookup(p);
            if (st.status == PrimeStatus::zero) return RefCombo::zero();
            if (st.status == PrimeStatus::explicit_poly) return RefCombo::poly(st.poly);
            return RefCombo::var(prime_aux(st.rep));
        }
        bool nf = r.kind == GrammarRef::Kind::NF;
        if (diag_pure(r.f)) return chain_combo_f(r.f, nf);
        return RefCombo::var(nf ? nf_aux(r.f) : f_aux(r.f));
    }

    void append_products(std::vector<Monomial>& monos, const UniPolynomial& xpoly,
                         const std::vector<RefCombo>& combos) {
        // distribute xpoly * prod(combos) into monomials
        struct Partial {
            UniPolynomial poly;
            std::vector<VarId> vars;
        };
        std::vector<Partial> acc{{xpoly, {}}};
        for (const auto& combo : combos) {
            std::vector<Partial> next;
            for (const auto& p : acc)
                for (const auto& part : combo.parts) {
                    Partial q;
                    q.poly = p.poly * part.poly;
                    q.vars = p.vars;
                    if (part.var) q.vars.push_back(*part.var);
                    next.push_back(std::move(q));
                }
            acc = std::move(next);
            if (acc.empty()) return;
        }
        for (const auto& p : acc)
            for (int e = 0; e <= p.poly.degree(); ++e)
                if (!p.poly.coeff(e).is_zero()) monos.push_back(Monomial{p.poly.coeff(e), e, p.vars});
    }

    std::vector<Monomial> translate_equation(const SlottedEquation& eq) {
        std::vector<Monomial> monos;
        for (int e = 0; e <= eq.constant.degree(); ++e)
            if (!eq.constant.coeff(e).is_zero())
                monos.push_back(Monomial{eq.constant.coeff(e), e, {}});
        for (const auto& [slot, term] : eq.slots) {
            std::vector<RefCombo> combos;
            bool dead = false;
            for (const auto& r : term.refs) {
                RefCombo c = translate_ref(r);
                if (c.parts.empty()) {
                    dead = true;
                    break;
                }
                combos.push_back(std::move(c));
            }
            if (!dead) append_products(monos, term.xpoly, combos);
        }
        return monos;
    }

    // --- pair difference equations ----------------------------------------

    std::optional<RefCombo> ref_difference(const GrammarRef& hi, const GrammarRef& lo) {
        // nullopt encodes a zero difference
        GrammarRef rhi = resolve_ref(hi), rlo = resolve_ref(lo);
        if (rhi == rlo) return std::nullopt;
        if (hi.kind == GrammarRef::Kind::Prime) {
            if (lo.kind != GrammarRef::Kind::Prime)
                fail(ErrorKind::internal, "difference pairing across reference kinds");
            PrimeIndex a = rhi.p, b = rlo.p;
            if (a.i == 0 && !a.rev) {
                // chain difference: sum of B over the level gap
                RefCombo c;
                for (int j = b.k + 1; j <= a.k; ++j) {
                    auto bv = bvars.at({a.s, a.t, j});
                    if (bv) c.add_var(*bv);
                }
                return c.parts.empty() ? std::optional<RefCombo>(std::nullopt)
                                       : std::optional<RefCombo>(c);
            }
            if (!(a.s == b.s && a.t == b.t && a.i == b.i && a.rev == b.rev && a.k == b.k + 1))
                fail(ErrorKind::internal, "prime pair is not chain-adjacent");
            auto v = prime_pair_diff(a);
            if (!v) return std::nullopt;
            return RefCombo::var(*v);
        }
        const FIndex& a = hi.f;
        const FIndex& b = lo.f;
        if (!(a.s == b.s && a.t == b.t && a.k1 == b.k1 + 1 && a.k2 == b.k2 + 1 && a.fl == b.fl + 1))
            fail(ErrorKind::internal, "F pair is not chain-adjacent");
        bool nf = hi.kind == GrammarRef::Kind::NF;
        if (diag_pure(a)) {
            auto d = dvars.at({a.s, a.t, a.fl});
            if (!d) return std::nullopt;
            return RefCombo::var(*d);
        }
        auto v = f_pair_diff(a, nf);
        if (!v) return std::nullopt;
        return RefCombo::var(*v);
    }

    std::vector<Monomial> difference_equation(const SlottedEquation& ehi,
                                              const SlottedEquation& elo) {
        std::vector<Monomial> monos;
        UniPolynomial dconst = ehi.constant - elo.constant;
        if (dconst.has_negative_coeff())
            fail(ErrorKind::internal, "monotonicity violation in constant part");
        for (int e = 0; e <= dconst.degree(); ++e)
            if (!dconst.coeff(e).is_zero()) monos.push_back(Monomial{dconst.coeff(e), e, {}});

        for (const auto& [slot, thi] : ehi.slots) {
            auto itlo = elo.slots.find(slot);
            if (itlo == elo.slots.end()) {
                // availability gained at the higher level: whole term
                std::vector<RefCombo> combos;
                bool dead = false;
                for (const auto& r : thi.refs) {
                    RefCombo c = translate_ref(r);
                    if (c.parts.empty()) {
                        dead = true;
                        break;
                    }
                    combos.push_back(std::move(c));
                }
                if (!dead) append_products(monos, thi.xpoly, combos);
                continue;
            }
            const GTerm& tlo = itlo->second;
            if (thi.refs.size() != tlo.refs.size())
                fail(ErrorKind::internal, "difference slot arity mismatch");
            UniPolynomial dx = thi.xpoly - tlo.xpoly;
            if (dx.has_negative_coeff())
                fail(ErrorKind::internal, "monotonicity violation in slot weight");

            // term_hi - term_lo = dx * prod(hi) + xlo * telescoping differences
            if (!dx.is_zero()) {
                std::vector<RefCombo> combos;
                bool dead = false;
                for (const auto& r : thi.refs) {
                    RefCombo c = translate_ref(r);
                    if (c.parts.empty()) {
                        dead = true;
                        break;
                    }
                    combos.push_back(std::move(c));
                }
                if (!dead) append_products(monos, dx, combos);
            }
            for (size_t p = 0; p < thi.refs.size(); ++p) {
                auto delta = ref_difference(thi.refs[p], tlo.refs[p]);
                if (!delta) continue;
                std::vector<RefCombo> combos;
                bool dead = false;
                for (size_t q = 0; q < p && !dead; ++q) {
                    RefCombo c = translate_ref(tlo.refs[q]);
                    if (c.parts.empty()) dead = true;
                    else combos.push_back(std::move(c));
                }
                if (dead) continue;
                combos.push_back(*delta);
                for (size_t q = p + 1; q < thi.refs.size() && !dead; ++q) {
                    RefCombo c = translate_ref(thi.refs[q]);
                    if (c.parts.empty()) dead = true;
                    else combos.push_back(std::move(c));
                }
                if (dead) continue;
                append_products(monos, tlo.xpoly, combos);
            }
        }
        for (const auto& [slot, tlo] : elo.slots)
            if (!ehi.slots.count(slot))
                fail(ErrorKind::internal, "availability lost at the higher level");
        return monos;
    }

    // --- main build --------------------------------------------------------

    void run() {
        compiler.classify();
        // chain variables first so prefix sums can reference them
        for (int s = 1; s <= sys.d; ++s)
            for (int t = 1; t <= sys.d; ++t) {
                VarMeta meta;
                meta.kind = VarMeta::Kind::F;
                meta.f = FIndex{s, t, 0, 0, 0};
                xvars[{s, t}] = new_var(meta);
                queue.push_back({Pending::What::X, meta.f, {}});
            }
        for (int s = 1; s <= sys.d; ++s)
            for (int t = 1; t <= sys.d; ++t) {
                PrimeClassEntry st = compiler.classify().lookup(PrimeIndex{s, t, 0, 0, false});
                if (st.status == PrimeStatus::unknown) {
                    VarMeta meta;
                    meta.kind = VarMeta::Kind::Prime;
                    meta.p = st.rep;
                    a00vars[{s, t}] = new_var(meta);
                    queue.push_back({Pending::What::A00, {}, st.rep});
                } else {
                    a00vars[{s, t}] = std::nullopt;
                }
            }
        // B_{s,t,j}: nonzero iff the prime equations at levels j, j-1 differ
        for (int j = 1; j <= sf; ++j)
            for (int s = 1; s <= sys.d; ++s)
                for (int t = 1; t <= sys.d; ++t) {
                    PrimeIndex hi{s, t, j, 0, false};
                    PrimeIndex lo{s, t, j - 1, 0, false};
                    if (resolved_equal(compiler.prime_equation(hi), compiler.prime_equation(lo))) {
                        bvars[{s, t, j}] = std::nullopt;
                    } else {
                        VarMeta meta;
                        meta.kind = VarMeta::Kind::DiffPrime;
                        meta.p = hi;
                        bvars[{s, t, j}] = new_var(meta);
                        queue.push_back({Pending::What::B, {}, hi});
                    }
                }
        // D liveness: coupled fixpoint over the diagonal equations per level
        for (int j = 1; j <= sf; ++j) {
            std::vector<char> live(static_cast<size_t>(sys.d) * static_cast<size_t>(sys.d), 0);
            bool changed = true;
            while (changed) {
                changed = false;
                for (int s = 1; s <= sys.d; ++s)
                    for (int t = 1; t <= sys.d; ++t) {
                        size_t at = static_cast<size_t>((s - 1) * sys.d + (t - 1));
                        if (live[at]) continue;
                        bool now = false;
                        for (int t0 = 1; t0 <= sys.d && !now; ++t0) {
                            if (bvars.at({s, t0, j}).has_value()) now = true;
                            if (live[static_cast<size_t>((t0 - 1) * sys.d + (t - 1))]) now = true;
                        }
                        if (now) {
                            live[at] = 1;
                            changed = true;
                        }
                    }
            }
            for (int s = 1; s <= sys.d; ++s)
                for (int t = 1; t <= sys.d; ++t) {
                    if (live[static_cast<size_t>((s - 1) * sys.d + (t - 1))]) {
                        VarMeta meta;
                        meta.kind = VarMeta::Kind::Diff;
                        meta.f = FIndex{s, t, j, j, j};
                        dvars[{s, t, j}] = new_var(meta);
                        queue.push_back({Pending::What::D, meta.f, {}});
                    } else {
                        dvars[{s, t, j}] = std::nullopt;
                    }
                }
        }

        while (!queue.empty()) {
            Pending p = queue.front();
            queue.pop_front();
            switch (p.what) {
                case Pending::What::X: {
                    auto eq = compiler.f_equation(p.f, FSplit::prime_first);
                    out.system.set_rhs(x_var(p.f.s, p.f.t), translate_equation(eq));
                    break;
                }
                case Pending::What::XN: {
                    auto eq = compiler.nf_equation(p.f, FSplit::prime_first);
                    out.system.set_rhs(xnvars.at({p.f.s, p.f.t}), translate_equation(eq));
                    break;
                }
                case Pending::What::A00: {
                    auto eq = compiler.prime_equation(p.p);
                    out.system.set_rhs(*a00vars.at({p.p.s, p.p.t}), translate_equation(eq));
                    break;
                }
                case Pending::What::F: {
                    auto eq = compiler.f_equation(p.f, FSplit::prime_first);
                    out.system.set_rhs(faux.at(p.f), translate_equation(eq));
                    break;
                }
                case Pending::What::NF: {
                    auto eq = compiler.nf_equation(p.f, FSplit::prime_first);
                    out.system.set_rhs(nfaux.at(p.f), translate_equation(eq));
                    break;
                }
                case Pending::What::Prime: {
                    auto eq = compiler.prime_equation(p.p);
                    out.system.set_rhs(paux.at(p.p), translate_equation(eq));
                    break;
                }
                case Pending::What::D: {
                    auto ehi = compiler.f_equation(p.f, FSplit::prime_first);
                    auto elo = compiler.f_equation(shifted_down(p.f), FSplit::prime_first);
                    out.system.set_rhs(*dvars.at({p.f.s, p.f.t, p.f.fl}),
                                       difference_equation(ehi, elo));
                    break;
                }
                case Pending::What::B: {
                    auto ehi = compiler.prime_equation(p.p);
                    PrimeIndex lo = p.p;
                    lo.k -= 1;
                    auto elo = compiler.prime_equation(lo);
                    out.system.set_rhs(*bvars.at({p.p.s, p.p.t, p.p.k}),
                                       difference_equation(ehi, elo));
                    break;
                }
                case Pending::What::DiffF: {
                    auto ehi = compiler.f_equation(p.f, FSplit::prime_first);
                    auto elo = compiler.f_equation(shifted_down(p.f), FSplit::prime_first);
                    out.system.set_rhs(*fdiff.at({0, p.f}), difference_equation(ehi, elo));
                    break;
                }
                case Pending::What::DiffNF: {
                    auto ehi = compiler.nf_equation(p.f, FSplit::prime_first);
                    auto elo = compiler.nf_equation(shifted_down(p.f), FSplit::prime_first);
                    out.system.set_rhs(*fdiff.at({1, p.f}), difference_equation(ehi, elo));
                    break;
                }
                case Pending::What::DiffPrime: {
                    auto ehi = compiler.prime_equation(p.p);
                    PrimeIndex lo = p.p;
                    lo.k -= 1;
                    auto elo = compiler.prime_equation(lo);
                    out.system.set_rhs(*pdiff.at(p.p), difference_equation(ehi, elo));
                    break;
                }
            }
        }

        out.designated = x_var(1, 1);
        out.system.set_designated(out.designated);
        out.system.validate();
        if (!out.system.all_variable_monomials_carry_x())
            fail(ErrorKind::internal, "difference system has an x-free variable monomial");
    }
};

// SCC of the dependency graph restricted to the designated variable
std::vector<VarId> designated_component(const PolySystem& sys, VarId designated,
                                        bool* strongly_connected) {
    auto g = sys.dependency_graph();
    int n = sys.size();
    // forward reachability
    std::vector<char> fwd(static_cast<size_t>(n), 0), back(static_cast<size_t>(n), 0);
    std::function<void(VarId, std::vector<char>&, const std::vector<std::vector<VarId>>&)> dfs =
        [&](VarId u, std::vector<char>& seen, const std::vector<std::vector<VarId>>& adj) {
            seen[static_cast<size_t>(u)] = 1;
            for (VarId w : adj[static_cast<size_t>(u)])
                if (!seen[static_cast<size_t>(w)]) dfs(w, seen, adj);
        };
    dfs(designated, fwd, g);
    std::vector<std::vector<VarId>> rev(static_cast<size_t>(n));
    for (VarId u = 0; u < n; ++u)
        for (VarId w : g[static_cast<size_t>(u)]) rev[static_cast<size_t>(w)].push_back(u);
    dfs(designated, back, rev);
    std::vector<VarId> comp;
    for (VarId v = 0; v < n; ++v)
        if (fwd[static_cast<size_t>(v)] && back[static_cast<size_t>(v)]) comp.push_back(v);
    if (strongly_connected) {
        bool self = false;
        for (VarId w : g[static_cast<size_t>(designated)])
            if (w == designated) self = true;
        *strongly_connected = comp.size() > 1 || self;
    }
    return comp;
}

} // namespace

DifferenceSystem GrammarCompiler::build_difference_system(const FiniteSystem&) {
    ensure_classified();
    DiffBuilder builder{*this, sys_, sf_, {}};
    builder.run();
    DifferenceSystem result = std::move(builder.out);
    result.core = designated_component(result.system, result.designated,
                                       &result.core_strongly_connected);
    return result;
}

} // namespace catwalk
