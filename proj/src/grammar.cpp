#include "catwalk/grammar.hpp"

#include "catwalk/error.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace catwalk {

std::optional<int> PrimeWalkBounds::get_dbar(int s, int t, int k) const {
    return dbar[static_cast<size_t>((s - 1) * d + (t - 1)) * static_cast<size_t>(J + 1) +
                static_cast<size_t>(std::min(k, J))];
}

std::optional<int> PrimeWalkBounds::get_dlow(int s, int t, int k) const {
    return dlow[static_cast<size_t>((s - 1) * d + (t - 1)) * static_cast<size_t>(J + 1) +
                static_cast<size_t>(std::min(k, J))];
}

PrimeClassEntry PrimeWalkClassification::lookup(const PrimeIndex& raw) const {
    PrimeIndex idx = raw;
    if (idx.rev && idx.i == 0) idx.rev = false; // Abar_{k,0} = A_{k,0}
    if (idx.rev ? (idx.i > max_drop_ || idx.i > idx.k) : (idx.i > max_rise_)) {
        PrimeClassEntry e;
        e.index = raw;
        e.rep = idx;
        e.status = PrimeStatus::zero;
        return e;
    }
    PrimeIndex key = idx;
    key.k = std::min(key.k, J_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        PrimeClassEntry e;
        e.index = raw;
        e.rep = idx;
        e.status = PrimeStatus::zero;
        return e;
    }
    PrimeClassEntry e = it->second;
    e.index = raw;
    return e;
}

std::vector<std::string> PrimeWalkClassification::unknown_names(int d) const {
    std::vector<std::string> out;
    for (const auto& idx : unknown_) {
        VarMeta m;
        m.kind = VarMeta::Kind::Prime;
        m.p = idx;
        out.push_back(grammar_var_name(d, m));
    }
    return out;
}

GrammarCompiler::GrammarCompiler(const CatalyticSystem& canonical)
    : sys_(canonical), table_(build_step_table(canonical)), sf_(table_.stable_floor()) {}

PrimeWalkBounds GrammarCompiler::compute_prime_walk_bounds() const {
    PrimeWalkBounds b;
    b.d = sys_.d;
    b.J = sys_.J;
    size_t cells = static_cast<size_t>(sys_.d) * static_cast<size_t>(sys_.d) *
                   static_cast<size_t>(sys_.J + 1);
    b.dbar.assign(cells, std::nullopt);
    b.dlow.assign(cells, std::nullopt);
    for (int s = 1; s <= sys_.d; ++s)
        for (int t = 1; t <= sys_.d; ++t)
            for (int k = 0; k <= sys_.J; ++k) {
                std::optional<int> up, down;
                for (const auto& [key, poly] : sys_.Q) {
                    if (key.s != s || key.t != t || key.j > k) continue;
                    int rise = key.l - key.j;
                    if (!up || rise > *up) up = rise;
                    if (!down || -rise > *down) down = -rise;
                }
                size_t at = static_cast<size_t>((s - 1) * sys_.d + (t - 1)) *
                                static_cast<size_t>(sys_.J + 1) +
                            static_cast<size_t>(k);
                b.dbar[at] = up;
                b.dlow[at] = down;
            }
    return b;
}

FIndex GrammarCompiler::normalize(FIndex idx) const {
    if (idx.fl > sf_) {
        int delta = idx.fl - sf_;
        idx.fl -= delta;
        idx.k1 -= delta;
        idx.k2 -= delta;
    }
    return idx;
}

namespace {

GrammarRef interior_ref(const GrammarCompiler& compiler, int t0, int t1, int v1, int v2, int fl) {
    GrammarRef ref;
    FIndex idx{t0, t1, v1, v2, fl};
    if (v1 == v2 && t0 != t1) {
        ref.kind = GrammarRef::Kind::NF;
    } else {
        ref.kind = GrammarRef::Kind::F;
    }
    ref.f = compiler.normalize(idx);
    return ref;
}

std::string origin_key(const Step& st) {
    return std::to_string(st.l) + "." + std::to_string(st.j) + "." + std::to_string(st.r);
}

void add_slot(SlottedEquation& eq, const std::string& key, GTerm term) {
    auto [it, fresh] = eq.slots.emplace(key, std::move(term));
    if (!fresh) fail(ErrorKind::internal, "duplicate equation slot " + key);
}

} // namespace

SlottedEquation GrammarCompiler::prime_equation(const PrimeIndex& idx) const {
    SlottedEquation eq;
    int d = sys_.d;
    int k = idx.k;
    int target = idx.rev ? k - idx.i : k + idx.i;
    int interior_floor = idx.rev ? k + 1 : k + idx.i + 1;

    // single-step walks
    for (const Step& st : table_.steps(idx.s, idx.t, k)) {
        if (k + st.rise != target) continue;
        auto key = "one:" + origin_key(st);
        GTerm term;
        term.xpoly = UniPolynomial::monomial(st.weight, st.width);
        add_slot(eq, key, std::move(term));
    }

    // first step up, interior >= interior_floor, final descent to the target
    int max_drop = table_.max_drop();
    for (int t0 = 1; t0 <= d; ++t0) {
        for (const Step& first : table_.steps(idx.s, t0, k)) {
            int v1 = k + first.rise;
            if (v1 < interior_floor) continue;
            for (int t1 = 1; t1 <= d; ++t1) {
                for (int v2 = interior_floor; v2 <= target + max_drop; ++v2) {
                    for (const Step& last : table_.steps(t1, idx.t, v2)) {
                        if (v2 + last.rise != target) continue;
                        GTerm term;
                        term.xpoly = UniPolynomial::monomial(first.weight * last.weight,
                                                             first.width + last.width);
                        term.refs.push_back(interior_ref(*this, t0, t1, v1, v2, interior_floor));
                        std::string key = "tri:" + std::to_string(t0) + ":" + std::to_string(t1) +
                                          ":" + std::to_string(v1 - k) + ":" + std::to_string(v2 - k) +
                                          ":" + origin_key(first) + ":" + origin_key(last);
                        add_slot(eq, key, std::move(term));
                    }
                }
            }
        }
    }
    return eq;
}

SlottedEquation GrammarCompiler::f_equation(const FIndex& raw, FSplit split) const {
    FIndex idx = normalize(raw);
    if (idx.fl > std::min(idx.k1, idx.k2))
        fail(ErrorKind::validation, "floor above an endpoint in F index");
    SlottedEquation eq;
    int d = sys_.d;

    auto descent_terms = [&](int bound_k2) {
        // split at the first return to a level <= k1
        for (int t0 = 1; t0 <= d; ++t0) {
            for (int m = idx.fl; m <= idx.k1; ++m) {
                GTerm term;
                term.xpoly = UniPolynomial::constant(Rational(1));
                GrammarRef prime;
                prime.kind = GrammarRef::Kind::Prime;
                prime.p = PrimeIndex{idx.s, t0, idx.k1, idx.k1 - m, true};
                term.refs.push_back(prime);
                GrammarRef cont;
                if (m == bound_k2) {
                    if (t0 == idx.t) {
                        cont.kind = GrammarRef::Kind::F;
                        cont.f = normalize(FIndex{idx.t, idx.t, bound_k2, bound_k2, idx.fl});
                    } else {
                        cont.kind = GrammarRef::Kind::NF;
                        cont.f = normalize(FIndex{t0, idx.t, bound_k2, bound_k2, idx.fl});
                    }
                } else {
                    cont.kind = GrammarRef::Kind::F;
                    cont.f = normalize(FIndex{t0, idx.t, m, idx.k2, idx.fl});
                }
                term.refs.push_back(cont);
                add_slot(eq, "dn:" + std::to_string(t0) + ":" + std::to_string(idx.k1 - m),
                         std::move(term));
            }
        }
    };

    if (idx.k1 == idx.k2) {
        eq.constant = UniPolynomial::constant(Rational(1));
        descent_terms(idx.k1);
    } else if (idx.k1 > idx.k2) {
        descent_terms(idx.k2);
    } else if (split == FSplit::prime_first) {
        descent_terms(-1); // no diagonal continuation in the first sum (m <= k1 < k2)
        // never returns to <= k1: split at the first visit of the minimum level m
        for (int t0 = 1; t0 <= d; ++t0) {
            for (int m = idx.k1 + 1; m <= idx.k2; ++m) {
                GTerm term;
                term.xpoly = UniPolynomial::constant(Rational(1));
                GrammarRef prime;
                prime.kind = GrammarRef::Kind::Prime;
                prime.p = PrimeIndex{idx.s, t0, idx.k1, m - idx.k1, false};
                term.refs.push_back(prime);
                GrammarRef cont;
                if (m == idx.k2) {
                    if (t0 == idx.t) {
                        cont.kind = GrammarRef::Kind::F;
                        cont.f = normalize(FIndex{idx.t, idx.t, idx.k2, idx.k2, idx.k2});
                    } else {
                        cont.kind = GrammarRef::Kind::NF;
                        cont.f = normalize(FIndex{t0, idx.t, idx.k2, idx.k2, idx.k2});
                    }
                } else {
                    cont.kind = GrammarRef::Kind::F;
                    cont.f = normalize(FIndex{t0, idx.t, m, idx.k2, m});
                }
                term.refs.push_back(cont);
                add_slot(eq, "up:" + std::to_string(t0) + ":" + std::to_string(m - idx.k1),
                         std::move(term));
            }
        }
    } else {
        // prime walk at the very end: prefix to level m, then a prime into k2
        for (int t0 = 1; t0 <= d; ++t0) {
            for (int m = idx.fl; m <= idx.k2; ++m) {
                GTerm term;
                term.xpoly = UniPolynomial::constant(Rational(1));
                GrammarRef prefix;
                if (m == idx.k1) {
                    if (t0 == idx.s) {
                        prefix.kind = GrammarRef::Kind::F;
                        prefix.f = normalize(FIndex{idx.s, idx.s, idx.k1, idx.k1, idx.fl});
                    } else {
                        prefix.kind = GrammarRef::Kind::NF;
                        prefix.f = normalize(FIndex{idx.s, t0, idx.k1, idx.k1, idx.fl});
                    }
                } else {
                    prefix.kind = GrammarRef::Kind::F;
                    prefix.f = normalize(FIndex{idx.s, t0, idx.k1, m, idx.fl});
                }
                term.refs.push_back(prefix);
                GrammarRef prime;
                prime.kind = GrammarRef::Kind::Prime;
                prime.p = PrimeIndex{t0, idx.t, m, idx.k2 - m, false};
                term.refs.push_back(prime);
                add_slot(eq, "pl:" + std::to_string(t0) + ":" + std::to_string(idx.k2 - m),
                         std::move(term));
            }
        }
    }
    return eq;
}

SlottedEquation GrammarCompiler::nf_equation(const FIndex& diag, FSplit split) const {
    if (diag.k1 != diag.k2) fail(ErrorKind::internal, "NF index must be diagonal");
    SlottedEquation eq = f_equation(diag, split);
    eq.constant = UniPolynomial();
    return eq;
}

void GrammarCompiler::ensure_classified() {
    if (!classified_) classify();
}

const PrimeWalkClassification& GrammarCompiler::classify(bool confirm_with_oracle) {
    if (classified_) return cls_;
    int d = sys_.d;
    int J = sys_.J;
    cls_.max_rise_ = table_.max_rise();
    cls_.max_drop_ = table_.max_drop();
    cls_.J_ = J;

    for (int rev = 0; rev <= 1; ++rev) {
        int imax = rev ? table_.max_drop() : table_.max_rise();
        int imin = rev ? 1 : 0;
        for (int s = 1; s <= d; ++s)
            for (int t = 1; t <= d; ++t)
                for (int i = imin; i <= imax; ++i) {
                    int lo = rev ? i : 0;
                    if (lo > J) continue;
                    std::vector<SlottedEquation> eqs;
                    for (int k = lo; k <= J; ++k)
                        eqs.push_back(prime_equation(PrimeIndex{s, t, k, i, rev != 0}));
                    int kappa = J;
                    while (kappa > lo && eqs[static_cast<size_t>(kappa - 1 - lo)] ==
                                             eqs[static_cast<size_t>(J - lo)])
                        --kappa;
                    kappa_[{s, t, i, rev != 0}] = kappa;
                    for (int k = lo; k <= J; ++k) {
                        PrimeIndex key{s, t, k, i, rev != 0};
                        PrimeClassEntry entry;
                        entry.index = key;
                        entry.rep = PrimeIndex{s, t, std::min(k, kappa), i, rev != 0};
                        const SlottedEquation& rep_eq = eqs[static_cast<size_t>(entry.rep.k - lo)];
                        if (rep_eq.slots.empty()) {
                            entry.status = rep_eq.constant.is_zero() ? PrimeStatus::zero
                                                                     : PrimeStatus::explicit_poly;
                            entry.poly = rep_eq.constant;
                        } else {
                            bool has_refs = false;
                            UniPolynomial poly = rep_eq.constant;
                            for (const auto& [slot, term] : rep_eq.slots) {
                                if (term.refs.empty()) poly += term.xpoly;
                                else has_refs = true;
                            }
                            if (has_refs) {
                                entry.status = PrimeStatus::unknown;
                            } else {
                                entry.status =
                                    poly.is_zero() ? PrimeStatus::zero : PrimeStatus::explicit_poly;
                                entry.poly = poly;
                            }
                        }
                        cls_.entries_.emplace(key, entry);
                    }
                }
    }

    // prime equations have no constant part and every slot carries one ref,
    // so unknown reps are exactly the reps whose equation has slots
    for (const auto& [key, entry] : cls_.entries_) {
        if (entry.status == PrimeStatus::unknown && key == entry.rep &&
            !(key.rev && key.i == 0))
            cls_.unknown_.push_back(key);
    }
    std::sort(cls_.unknown_.begin(), cls_.unknown_.end());

    if (confirm_with_oracle) {
        int depth = 2 * (sys_.L + sys_.J);
        for (const auto& [key, entry] : cls_.entries_) {
            if (!(key == entry.rep)) continue;
            if (entry.status == PrimeStatus::unknown) continue;
            TruncatedSeries got = prime_walk_oracle(table_, key.s, key.t, key.k, key.i, key.rev, depth);
            TruncatedSeries want = TruncatedSeries::from_polynomial(entry.poly, depth);
            if (!(got == want))
                fail(ErrorKind::internal, "prime walk classification contradicts the oracle");
        }
    }
    classified_ = true;
    return cls_;
}

PrimeIndex GrammarCompiler::prime_rep(PrimeIndex idx) const {
    if (idx.rev && idx.i == 0) idx.rev = false;
    idx.k = std::min(idx.k, sys_.J);
    auto it = kappa_.find({idx.s, idx.t, idx.i, idx.rev});
    if (it != kappa_.end() && idx.k > it->second) idx.k = it->second;
    return idx;
}

PrimeClassEntry GrammarCompiler::prime_status(const PrimeIndex& idx) const {
    return cls_.lookup(idx);
}

std::string grammar_var_name(int d, const VarMeta& meta) {
    std::ostringstream os;
    auto types = [&](int s, int t) {
        if (d > 1) os << "_" << s << "_" << t;
    };
    switch (meta.kind) {
        case VarMeta::Kind::F:
            os << "F";
            types(meta.f.s, meta.f.t);
            os << "_" << meta.f.k1 << "_" << meta.f.k2 << "_" << meta.f.fl;
            break;
        case VarMeta::Kind::NF:
            os << "Fn";
            types(meta.f.s, meta.f.t);
            os << "_" << meta.f.k1 << "_" << meta.f.k2 << "_" << meta.f.fl;
            break;
        case VarMeta::Kind::Prime:
            os << (meta.p.rev ? "Ab" : "A");
            types(meta.p.s, meta.p.t);
            os << "_" << meta.p.k << "_" << meta.p.i;
            break;
        case VarMeta::Kind::Diff:
            if (meta.f.k1 == meta.f.k2 && meta.f.k1 == meta.f.fl) {
                os << "D";
                types(meta.f.s, meta.f.t);
                os << "_" << meta.f.fl;
            } else {
                os << "Fd";
                types(meta.f.s, meta.f.t);
                os << "_" << meta.f.k1 << "_" << meta.f.k2 << "_" << meta.f.fl;
            }
            break;
        case VarMeta::Kind::DiffNF:
            os << "Fnd";
            types(meta.f.s, meta.f.t);
            os << "_" << meta.f.k1 << "_" << meta.f.k2 << "_" << meta.f.fl;
            break;
        case VarMeta::Kind::DiffPrime:
            if (meta.p.i == 0) {
                os << "B";
                types(meta.p.s, meta.p.t);
                os << "_" << meta.p.k;
            } else {
                os << (meta.p.rev ? "Abd" : "Ad");
                types(meta.p.s, meta.p.t);
                os << "_" << meta.p.k << "_" << meta.p.i;
            }
            break;
    }
    return os.str();
}

FiniteSystem GrammarCompiler::build_finite_system(FSplit split) {
    ensure_classified();
    FiniteSystem out;
    std::map<FIndex, VarId> fvars, nfvars;
    std::map<PrimeIndex, VarId> pvars;
    std::deque<GrammarRef> queue;

    auto intern = [&](const GrammarRef& ref) -> VarId {
        if (ref.kind == GrammarRef::Kind::Prime) {
            auto it = pvars.find(ref.p);
            if (it != pvars.end()) return it->second;
        } else if (ref.kind == GrammarRef::Kind::F) {
            auto it = fvars.find(ref.f);
            if (it != fvars.end()) return it->second;
        } else {
            auto it = nfvars.find(ref.f);
            if (it != nfvars.end()) return it->second;
        }
        VarMeta meta;
        if (ref.kind == GrammarRef::Kind::Prime) {
            meta.kind = VarMeta::Kind::Prime;
            meta.p = ref.p;
        } else {
            meta.kind = ref.kind == GrammarRef::Kind::F ? VarMeta::Kind::F : VarMeta::Kind::NF;
            meta.f = ref.f;
        }
        VarId v = out.system.add_variable(grammar_var_name(sys_.d, meta));
        out.meta.push_back(meta);
        if (ref.kind == GrammarRef::Kind::Prime) pvars[ref.p] = v;
        else if (ref.kind == GrammarRef::Kind::F) fvars[ref.f] = v;
        else nfvars[ref.f] = v;
        queue.push_back(ref);
        return v;
    };

    for (const auto& up : cls_.unknown_) {
        GrammarRef ref;
        ref.kind = GrammarRef::Kind::Prime;
        ref.p = up;
        intern(ref);
    }
    for (int s = 1; s <= sys_.d; ++s)
        for (int t = 1; t <= sys_.d; ++t) {
            GrammarRef ref;
            ref.kind = GrammarRef::Kind::F;
            ref.f = FIndex{s, t, sf_, sf_, sf_};
            intern(ref);
        }

    while (!queue.empty()) {
        GrammarRef ref = queue.front();
        queue.pop_front();
        SlottedEquation eq;
        VarId var;
        if (ref.kind == GrammarRef::Kind::Prime) {
            eq = prime_equation(ref.p);
            var = pvars[ref.p];
        } else if (ref.kind == GrammarRef::Kind::F) {
            eq = f_equation(ref.f, split);
            var = fvars[ref.f];
        } else {
            eq = nf_equation(ref.f, split);
            var = nfvars[ref.f];
        }

        std::vector<Monomial> monomials;
        auto push_poly = [&](const UniPolynomial& poly, const std::vector<VarId>& vars) {
            for (int e = 0; e <= poly.degree(); ++e) {
                if (poly.coeff(e).is_zero()) continue;
                monomials.push_back(Monomial{poly.coeff(e), e, vars});
            }
        };
        push_poly(eq.constant, {});
        for (const auto& [slot, term] : eq.slots) {
            UniPolynomial poly = term.xpoly;
            std::vector<VarId> vars;
            bool dead = false;
            for (const auto& r : term.refs) {
                if (r.kind == GrammarRef::Kind::Prime) {
                    PrimeClassEntry st = prime_status(r.p);
                    if (st.status == PrimeStatus::zero) {
                        dead = true;
                        break;
                    }
                    if (st.status == PrimeStatus::explicit_poly) {
                        poly = poly * st.poly;
                        continue;
                    }
                    GrammarRef repref;
                    repref.kind = GrammarRef::Kind::Prime;
                    repref.p = st.rep;
                    vars.push_back(intern(repref));
                } else {
                    vars.push_back(intern(r));
                }
            }
            if (!dead) push_poly(poly, vars);
        }
        out.system.set_rhs(var, std::move(monomials));
    }

    for (const auto& [idx, v] : fvars) {
        out.achieved_k1 = std::max(out.achieved_k1, idx.k1);
        out.achieved_k2 = std::max(out.achieved_k2, idx.k2);
        out.achieved_floor = std::max(out.achieved_floor, idx.fl);
        bool in_range = idx.k1 <= sys_.L + sys_.J && idx.k2 <= std::max(2 * sys_.J, sys_.J + 1) &&
                        idx.fl <= std::min({sys_.J, idx.k1, idx.k2});
        if (!in_range)
            fail(ErrorKind::internal,
                 "finite-system closure left the index range at " +
                     grammar_var_name(sys_.d, out.meta[static_cast<size_t>(v)]));
    }
    out.system.set_designated(fvars.at(normalize(FIndex{1, 1, sf_, sf_, sf_})));
    out.system.validate();
    if (!out.system.all_variable_monomials_carry_x())
        fail(ErrorKind::internal, "finite system has an x-free variable monomial");
    return out;
}

Extender::Extender(GrammarCompiler& compiler, const FiniteSystem& finite,
                   const SeriesSolution& solution)
    : compiler_(compiler), finite_(finite), solution_(solution) {
    compiler_.ensure_classified();
}

TruncatedSeries Extender::prime_series(const PrimeIndex& idx, int N) {
    PrimeClassEntry st = compiler_.prime_status(idx);
    if (st.status == PrimeStatus::zero) return TruncatedSeries(N);
    if (st.status == PrimeStatus::explicit_poly)
        return TruncatedSeries::from_polynomial(st.poly, N);
    VarMeta meta;
    meta.kind = VarMeta::Kind::Prime;
    meta.p = st.rep;
    auto v = finite_.system.find(grammar_var_name(compiler_.system().d, meta));
    if (!v) fail(ErrorKind::internal, "unknown prime walk missing from the finite system");
    return solution_.of(*v);
}

const std::vector<TruncatedSeries>& Extender::excursion_matrix(int level, int N) {
    int d = compiler_.system().d;
    int key = std::min(level, compiler_.system().J);
    if (emat_order_ != N) {
        emat_.clear();
        emat_order_ = N;
    }
    auto it = emat_.find(key);
    if (it != emat_.end()) return it->second;

    // E = (I - A0)^{-1} order by order; A0 has valuation >= 1
    std::vector<TruncatedSeries> a0(static_cast<size_t>(d) * static_cast<size_t>(d),
                                    TruncatedSeries(N));
    for (int s = 1; s <= d; ++s)
        for (int t = 1; t <= d; ++t)
            a0[static_cast<size_t>((s - 1) * d + (t - 1))] =
                prime_series(PrimeIndex{s, t, key, 0, false}, N);
    std::vector<TruncatedSeries> e(static_cast<size_t>(d) * static_cast<size_t>(d),
                                   TruncatedSeries(N));
    for (int s = 0; s < d; ++s) e[static_cast<size_t>(s * d + s)].coeff(0) = Rational(1);
    for (int n = 1; n <= N; ++n) {
        for (int s = 0; s < d; ++s)
            for (int t = 0; t < d; ++t) {
                Rational acc;
                for (int mid = 0; mid < d; ++mid) {
                    const auto& a = a0[static_cast<size_t>(s * d + mid)];
                    const auto& ee = e[static_cast<size_t>(mid * d + t)];
                    for (int k = 1; k <= n; ++k) {
                        if (a.coeff(k).is_zero()) continue;
                        acc += a.coeff(k) * ee.coeff(n - k);
                    }
                }
                e[static_cast<size_t>(s * d + t)].coeff(n) = acc;
            }
    }
    return emat_.emplace(key, std::move(e)).first->second;
}

TruncatedSeries Extender::f_series(FIndex idx, int N) {
    if (idx.fl > std::min(idx.k1, idx.k2) || idx.fl < 0 || idx.k1 < 0 || idx.k2 < 0)
        fail(ErrorKind::validation, "invalid F index in extension query");
    idx = compiler_.normalize(idx);
    if (memo_order_ != N) {
        memo_.clear();
        memo_order_ = N;
    }
    return f_value(idx, N);
}

TruncatedSeries Extender::chain_value(FIndex idx, int N, int) {
    // delta-aware value: the empty path survives only when the chain types
    // match, i.e. on (s,s) diagonals
    TruncatedSeries v = f_value(compiler_.normalize(idx), N);
    if (idx.k1 == idx.k2 && idx.s != idx.t) v.coeff(0) -= Rational(1);
    return v;
}

TruncatedSeries Extender::f_value(FIndex idx, int N) {
    auto it = memo_.find(idx);
    if (it != memo_.end()) return it->second;
    int d = compiler_.system().d;
    TruncatedSeries result(N);

    if (idx.k1 == idx.k2) {
        int v = idx.k1;
        // nonempty part N solves (I - A0) N = A0 + R, so N = E (A0 + R)
        // with R the strict-descent contributions
        const auto& emat = excursion_matrix(v, N);
        std::vector<TruncatedSeries> rhs(static_cast<size_t>(d), TruncatedSeries(N));
        for (int t0 = 1; t0 <= d; ++t0) {
            TruncatedSeries acc = prime_series(PrimeIndex{t0, idx.t, v, 0, false}, N);
            for (int t1 = 1; t1 <= d; ++t1) {
                for (int m = idx.fl; m < v; ++m) {
                    TruncatedSeries abar = prime_series(PrimeIndex{t0, t1, v, v - m, true}, N);
                    if (abar.is_zero()) continue;
                    TruncatedSeries cont =
                        f_value(compiler_.normalize(FIndex{t1, idx.t, m, v, idx.fl}), N);
                    acc = series_add(acc, series_mul(abar, cont));
                }
            }
            rhs[static_cast<size_t>(t0 - 1)] = acc;
        }
        for (int t0 = 1; t0 <= d; ++t0)
            result = series_add(result,
                                series_mul(emat[static_cast<size_t>((idx.s - 1) * d + (t0 - 1))],
                                           rhs[static_cast<size_t>(t0 - 1)]));
        result.coeff(0) += Rational(1);
    } else if (idx.k1 < idx.k2) {
        // trailing excursions at k2 after the last prime arrival from below
        const auto& emat = excursion_matrix(idx.k2, N);
        for (int t1 = 1; t1 <= d; ++t1) {
            TruncatedSeries w(N);
            for (int t0 = 1; t0 <= d; ++t0) {
                for (int m = idx.fl; m < idx.k2; ++m) {
                    TruncatedSeries prime = prime_series(PrimeIndex{t0, t1, m, idx.k2 - m, false}, N);
                    if (prime.is_zero()) continue;
                    TruncatedSeries prefix =
                        chain_value(FIndex{idx.s, t0, idx.k1, m, idx.fl}, N, 0);
                    w = series_add(w, series_mul(prefix, prime));
                }
            }
            result = series_add(result,
                                series_mul(w, emat[static_cast<size_t>((t1 - 1) * d + (idx.t - 1))]));
        }
    } else {
        // leading excursions at k1, then the first strict descent
        const auto& emat = excursion_matrix(idx.k1, N);
        for (int t0 = 1; t0 <= d; ++t0) {
            TruncatedSeries inner(N);
            for (int t1 = 1; t1 <= d; ++t1) {
                for (int m = idx.fl; m < idx.k1; ++m) {
                    TruncatedSeries abar =
                        prime_series(PrimeIndex{t0, t1, idx.k1, idx.k1 - m, true}, N);
                    if (abar.is_zero()) continue;
                    TruncatedSeries cont = chain_value(FIndex{t1, idx.t, m, idx.k2, idx.fl}, N, 0);
                    inner = series_add(inner, series_mul(abar, cont));
                }
            }
            result = series_add(result,
                                series_mul(emat[static_cast<size_t>((idx.s - 1) * d + (t0 - 1))], inner));
        }
    }
    memo_[idx] = result;
    return result;
}

} // namespace catwalk
