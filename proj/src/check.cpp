#include "catwalk/check.hpp"

#include "catwalk/error.hpp"

namespace catwalk {

namespace {

TruncatedSeries typed_f_oracle(const StepTable& table, const FIndex& f, int depth) {
    PathQuery q;
    q.start_type = f.s;
    q.end_type = f.t;
    q.start_level = f.k1;
    q.end_level = f.k2;
    q.floor = f.fl;
    q.max_length = depth;
    return oracle_count(table, q);
}

TruncatedSeries series_sub(const TruncatedSeries& a, const TruncatedSeries& b) {
    TruncatedSeries out(a.order());
    for (int n = 0; n <= a.order(); ++n) out.coeff(n) = a.coeff(n) - b.coeff(n);
    return out;
}

} // namespace

TruncatedSeries variable_oracle(const StepTable& table, const VarMeta& meta, int depth) {
    switch (meta.kind) {
        case VarMeta::Kind::F:
            return typed_f_oracle(table, meta.f, depth);
        case VarMeta::Kind::NF: {
            TruncatedSeries s = typed_f_oracle(table, meta.f, depth);
            if (meta.f.k1 == meta.f.k2) s.coeff(0) -= Rational(1);
            return s;
        }
        case VarMeta::Kind::Prime:
            return prime_walk_oracle(table, meta.p.s, meta.p.t, meta.p.k, meta.p.i, meta.p.rev,
                                     depth);
        case VarMeta::Kind::Diff:
        case VarMeta::Kind::DiffNF: {
            FIndex lo{meta.f.s, meta.f.t, meta.f.k1 - 1, meta.f.k2 - 1, meta.f.fl - 1};
            return series_sub(typed_f_oracle(table, meta.f, depth),
                              typed_f_oracle(table, lo, depth));
        }
        case VarMeta::Kind::DiffPrime:
            return series_sub(prime_walk_oracle(table, meta.p.s, meta.p.t, meta.p.k, meta.p.i,
                                                meta.p.rev, depth),
                              prime_walk_oracle(table, meta.p.s, meta.p.t, meta.p.k - 1, meta.p.i,
                                                meta.p.rev, depth));
    }
    fail(ErrorKind::internal, "unreachable variable kind");
}

CheckReport check_against_oracle(const StepTable& table, const PolySystem& system,
                                 const std::vector<VarMeta>& meta,
                                 const SeriesSolution& solution) {
    CheckReport report;
    for (VarId v = 0; v < system.size(); ++v) {
        TruncatedSeries expected = variable_oracle(table, meta[static_cast<size_t>(v)],
                                                   solution.order);
        report.variables_checked += 1;
        if (!(expected == solution.of(v)))
            report.mismatches.push_back(system.name(v) + ": grammar " + solution.of(v).str() +
                                        " vs oracle " + expected.str());
    }
    return report;
}

} // namespace catwalk
