// Command-line front end: catalytic system in, step tables / oracle counts /
// finite grammar / series / equivalence checks / singularity report out.

#include "catwalk/analysis.hpp"
#include "catwalk/catalytic.hpp"
#include "catwalk/check.hpp"
#include "catwalk/error.hpp"
#include "catwalk/grammar.hpp"
#include "catwalk/oracle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace catwalk;
using nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

struct Options {
    std::string input;
    int order = 64;
    int oracle_depth = 14;
    std::string format = "text";
    unsigned long seed = 0;
    bool difference = false;
    std::string var;
    int k1 = 0, k2 = 0, floor_level = 0;
    int start_type = 1, end_type = 0;
    int verbosity = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::validation, "cannot read input file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

CatalyticSystem load_canonical(const Options& opt, Diagnostics* diag = nullptr) {
    CatalyticSystem sys = parse_catalytic_system(read_file(opt.input));
    return canonicalize_and_validate(sys, diag);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int cmd_validate(const Options& opt) {
    Diagnostics diag;
    CatalyticSystem sys = load_canonical(opt, &diag);
    if (opt.format == "json") {
        ordered_json doc;
        doc["format_version"] = kFormatVersion;
        doc["valid"] = true;
        doc["d"] = sys.d;
        doc["L"] = sys.L;
        doc["J"] = sys.J;
        doc["notes"] = diag.notes;
        doc["canonical"] = ordered_json::parse(serialize_catalytic_system(sys));
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "valid catalytic system: d=" << sys.d << " L=" << sys.L << " J=" << sys.J
                  << "\n";
        for (const auto& note : diag.notes) std::cout << "note: " << note << "\n";
    }
    return 0;
}

int cmd_steps(const Options& opt) {
    CatalyticSystem sys = load_canonical(opt);
    StepTable table = build_step_table(sys);
    if (opt.format == "json") {
        ordered_json doc;
        doc["format_version"] = kFormatVersion;
        doc["stable_level"] = sys.J;
        doc["levels"] = ordered_json::array();
        for (int k = 0; k <= sys.J; ++k) {
            ordered_json lvl;
            lvl["level"] = k;
            lvl["steps"] = ordered_json::array();
            for (int s = 1; s <= sys.d; ++s)
                for (int t = 1; t <= sys.d; ++t)
                    for (const Step& st : table.steps(s, t, k)) {
                        ordered_json e;
                        e["s"] = st.s;
                        e["t"] = st.t;
                        e["width"] = st.width;
                        e["rise"] = st.rise;
                        e["weight"] = st.weight.str();
                        e["origin"] = {{"l", st.l}, {"j", st.j}, {"r", st.r}};
                        lvl["steps"].push_back(e);
                    }
            doc["levels"].push_back(lvl);
        }
        std::cout << doc.dump(2) << "\n";
    } else {
        for (int k = 0; k <= sys.J; ++k) {
            std::cout << "S_" << k << (k == sys.J ? " (stable)" : "") << ":";
            for (int s = 1; s <= sys.d; ++s)
                for (int t = 1; t <= sys.d; ++t)
                    for (const Step& st : table.steps(s, t, k)) {
                        std::cout << " (" << st.width << "," << (st.rise >= 0 ? "+" : "")
                                  << st.rise << ")w=" << st.weight.str();
                        if (sys.d > 1) std::cout << "[" << st.s << "->" << st.t << "]";
                    }
            std::cout << "\n";
        }
    }
    return 0;
}

int cmd_oracle(const Options& opt) {
    CatalyticSystem sys = load_canonical(opt);
    StepTable table = build_step_table(sys);
    PathQuery q;
    q.start_type = opt.start_type;
    q.end_type = opt.end_type;
    q.start_level = opt.k1;
    q.end_level = opt.k2;
    q.floor = opt.floor_level;
    q.max_length = opt.oracle_depth;
    TruncatedSeries series = oracle_count(table, q);
    if (opt.format == "json") {
        ordered_json doc;
        doc["format_version"] = kFormatVersion;
        doc["coefficients"] = ordered_json::array();
        for (int n = 0; n <= series.order(); ++n) doc["coefficients"].push_back(series.coeff(n).str());
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << "n,weight\n";
        for (int n = 0; n <= series.order(); ++n)
            std::cout << n << "," << series.coeff(n).str() << "\n";
    }
    return 0;
}

int cmd_grammar(const Options& opt) {
    CatalyticSystem sys = load_canonical(opt);
    GrammarCompiler compiler(sys);
    PolySystem emitted;
    if (opt.difference) {
        StepTable table = build_step_table(sys);
        auto connectivity = check_strong_connectivity(table);
        if (!connectivity.strongly_connected)
            fail(ErrorKind::validation,
                 "difference system requires a strongly connected infinite system");
        FiniteSystem finite = compiler.build_finite_system();
        DifferenceSystem diff = compiler.build_difference_system(finite);
        emitted = diff.system;
    } else {
        emitted = compiler.build_finite_system().system;
    }
    if (opt.format == "json") std::cout << emit_grammar_json(emitted);
    else std::cout << emit_grammar_text(emitted);
    return 0;
}

int cmd_series(const Options& opt) {
    CatalyticSystem sys = load_canonical(opt);
    GrammarCompiler compiler(sys);
    PolySystem system;
    if (opt.difference) {
        FiniteSystem finite = compiler.build_finite_system();
        system = compiler.build_difference_system(finite).system;
    } else {
        system = compiler.build_finite_system().system;
    }
    auto solution = fixed_point_solve(system, opt.order);
    auto emit_var = [&](VarId v) {
        if (opt.format == "csv") {
            for (int n = 0; n <= opt.order; ++n)
                std::cout << system.name(v) << "," << n << ","
                          << solution.of(v).coeff(n).str() << "\n";
        } else {
            std::cout << system.name(v) << " = " << solution.of(v).str() << "\n";
        }
    };
    if (opt.format == "json") {
        ordered_json doc;
        doc["format_version"] = kFormatVersion;
        doc["order"] = opt.order;
        doc["series"] = ordered_json::object();
        for (VarId v = 0; v < system.size(); ++v) {
            if (!opt.var.empty() && system.name(v) != opt.var) continue;
            ordered_json coeffs = ordered_json::array();
            for (int n = 0; n <= opt.order; ++n) coeffs.push_back(solution.of(v).coeff(n).str());
            doc["series"][system.name(v)] = coeffs;
        }
        std::cout << doc.dump(2) << "\n";
    } else {
        if (opt.format == "csv") std::cout << "variable,n,coefficient\n";
        for (VarId v = 0; v < system.size(); ++v) {
            if (!opt.var.empty() && system.name(v) != opt.var) continue;
            emit_var(v);
        }
    }
    return 0;
}

int cmd_check(const Options& opt) {
    if (opt.order < opt.oracle_depth)
        fail(ErrorKind::validation, "check requires order >= oracle depth");
    CatalyticSystem sys = load_canonical(opt);
    StepTable table = build_step_table(sys);
    GrammarCompiler compiler(sys);
    FiniteSystem finite = compiler.build_finite_system();
    auto solution = fixed_point_solve(finite.system, opt.oracle_depth);
    CheckReport finite_report =
        check_against_oracle(table, finite.system, finite.meta, solution);

    bool did_difference = false;
    CheckReport diff_report;
    auto connectivity = check_strong_connectivity(table);
    if (connectivity.strongly_connected) {
        DifferenceSystem diff = compiler.build_difference_system(finite);
        auto diff_solution = fixed_point_solve(diff.system, opt.oracle_depth);
        diff_report = check_against_oracle(table, diff.system, diff.meta, diff_solution);
        did_difference = true;
    }

    bool ok = finite_report.ok() && (!did_difference || diff_report.ok());
    if (opt.format == "json") {
        ordered_json doc;
        doc["format_version"] = kFormatVersion;
        doc["finite_variables_checked"] = finite_report.variables_checked;
        doc["finite_mismatches"] = finite_report.mismatches;
        doc["difference_checked"] = did_difference;
        if (did_difference) {
            doc["difference_variables_checked"] = diff_report.variables_checked;
            doc["difference_mismatches"] = diff_report.mismatches;
        }
        doc["ok"] = ok;
        std::cout << doc.dump(2) << "\n";
    } else {
        if (finite_report.ok())
            std::cout << "finite grammar: all " << finite_report.variables_checked
                      << " variables match oracle to n=" << opt.oracle_depth << "\n";
        for (const auto& m : finite_report.mismatches) std::cout << "MISMATCH " << m << "\n";
        if (did_difference) {
            if (diff_report.ok())
                std::cout << "difference system: all " << diff_report.variables_checked
                          << " variables match oracle to n=" << opt.oracle_depth << "\n";
            for (const auto& m : diff_report.mismatches) std::cout << "MISMATCH " << m << "\n";
        }
    }
    if (!ok) fail(ErrorKind::mismatch, "grammar-vs-oracle check failed");
    return 0;
}

int cmd_connectivity(const Options& opt) {
    CatalyticSystem sys = load_canonical(opt);
    StepTable table = build_step_table(sys);
    auto report = check_strong_connectivity(table);
    if (opt.format == "json") {
        ordered_json doc;
        doc["format_version"] = kFormatVersion;
        doc["strongly_connected"] = report.strongly_connected;
        doc["cap_used"] = report.cap_used;
        if (report.counterexample) {
            doc["counterexample"] = {{"from", report.counterexample->first},
                                     {"to", report.counterexample->second}};
        }
        doc["witnesses"] = ordered_json::array();
        for (const auto& w : report.witnesses) {
            ordered_json e;
            e["start_type"] = w.start_type;
            e["start_level"] = w.start_level;
            e["rises"] = ordered_json::array();
            for (const Step& st : w.steps) e["rises"].push_back(st.rise);
            doc["witnesses"].push_back(e);
        }
        std::cout << doc.dump(2) << "\n";
    } else {
        std::cout << (report.strongly_connected ? "strongly connected"
                                                : "NOT strongly connected")
                  << " (level cap " << report.cap_used << ")\n";
        if (report.counterexample)
            std::cout << "unreachable pair: " << report.counterexample->first << " -> "
                      << report.counterexample->second << "\n";
        if (opt.verbosity > 0)
            for (const auto& w : report.witnesses) {
                std::cout << "witness type" << w.start_type << "@" << w.start_level << ":";
                for (const Step& st : w.steps) std::cout << " " << st.rise;
                std::cout << "\n";
            }
    }
    return 0;
}

ordered_json asympt_json(const SingularityReport& rep, bool strongly_connected) {
    ordered_json doc;
    doc["format_version"] = kFormatVersion;
    doc["strongly_connected"] = strongly_connected;
    if (!strongly_connected)
        doc["banner"] = "Theorem 2 hypothesis not met: system is not strongly connected; "
                        "only an empirical exponent estimate is reported (dominant Puiseux "
                        "exponents of positive systems are dyadic by the literature)";
    doc["ok"] = rep.ok;
    if (!rep.failure.empty()) doc["failure"] = rep.failure;
    doc["rho"] = rep.rho;
    doc["rho_interval"] = {rep.rho_lo, rep.rho_hi};
    doc["period"] = rep.period;
    doc["exponent"] = rep.exponent;
    doc["linear_core"] = rep.linear_core;
    doc["constants"] = ordered_json::array();
    for (size_t m = 0; m < rep.constants.size(); ++m)
        doc["constants"].push_back({{"m", m}, {"c", rep.constants[m]}});
    ordered_json diag;
    diag["residual_fixed_point"] = rep.residual_fixed_point;
    diag["residual_det"] = rep.residual_det;
    diag["null_space_simple"] = rep.null_space_simple;
    diag["rho_z_cross_check"] = rep.rho_z_cross_check;
    diag["empirical_sufficient"] = rep.empirical.sufficient;
    diag["empirical_exponent"] = rep.empirical.exponent;
    diag["empirical_c"] = rep.empirical.c_hat;
    diag["empirical_ratio_rho"] = rep.empirical_ratio_rho;
    diag["critical_vector"] = ordered_json::object();
    for (const auto& [name, value] : rep.critical_vector) diag["critical_vector"][name] = value;
    diag["notes"] = rep.notes;
    doc["diagnostics"] = diag;
    return doc;
}

int cmd_asympt(const Options& opt, ordered_json* capture = nullptr) {
    CatalyticSystem sys = load_canonical(opt);
    StepTable table = build_step_table(sys);
    GrammarCompiler compiler(sys);
    FiniteSystem finite = compiler.build_finite_system();
    auto connectivity = check_strong_connectivity(table);

    AnalysisOptions aopt;
    SingularityReport rep;
    if (connectivity.strongly_connected) {
        DifferenceSystem diff = compiler.build_difference_system(finite);
        rep = analyze_system(diff.system, aopt);
    } else {
        rep = analyze_system(finite.system, aopt);
        rep.notes.push_back("analysis ran on the finite system's designated component");
        // without strong connectivity only the empirical estimate is claimed
        rep.constants.clear();
        rep.exponent = std::numeric_limits<double>::quiet_NaN();
    }
    ordered_json doc = asympt_json(rep, connectivity.strongly_connected);
    if (capture) {
        *capture = doc;
        return rep.ok ? 0 : 5;
    }
    if (opt.format == "json") {
        std::cout << doc.dump(2) << "\n";
    } else {
        if (!connectivity.strongly_connected)
            std::cout << "WARNING: " << doc["banner"].get<std::string>() << "\n";
        if (!rep.ok) {
            std::cout << "analysis failed: " << rep.failure << "\n";
        } else {
            std::cout << "rho = " << fmt_double(rep.rho) << "  interval [" << fmt_double(rep.rho_lo)
                      << ", " << fmt_double(rep.rho_hi) << "]\n";
            std::cout << "period M = " << rep.period << "\n";
            if (!rep.linear_core) {
                for (size_t m = 0; m < rep.constants.size(); ++m)
                    std::cout << "c_" << m << " = " << fmt_double(rep.constants[m]) << "\n";
                std::cout << "law: c_m rho^-n n^(-3/2), exponent " << rep.exponent << "\n";
            } else {
                std::cout << "linear core: simple pole, exponent flag " << rep.exponent << "\n";
            }
            std::cout << "residuals: fixed-point " << fmt_double(rep.residual_fixed_point)
                      << ", det " << fmt_double(rep.residual_det) << "\n";
            if (rep.empirical.sufficient)
                std::cout << "empirical exponent " << fmt_double(rep.empirical.exponent)
                          << ", ratio rho " << fmt_double(rep.empirical_ratio_rho) << "\n";
        }
    }
    if (!rep.ok) fail(ErrorKind::analysis, rep.failure);
    return 0;
}

int cmd_report(const Options& opt) {
    Diagnostics diag;
    CatalyticSystem sys = load_canonical(opt, &diag);
    StepTable table = build_step_table(sys);
    GrammarCompiler compiler(sys);
    const auto& cls = compiler.classify();
    FiniteSystem finite = compiler.build_finite_system();
    auto connectivity = check_strong_connectivity(table);

    ordered_json doc;
    doc["format_version"] = kFormatVersion;
    doc["seed"] = opt.seed;
    doc["input"] = ordered_json::parse(serialize_catalytic_system(sys));
    doc["notes"] = diag.notes;
    doc["unknown_prime_walks"] = cls.unknown_names(sys.d);
    doc["finite_grammar"] = ordered_json::parse(emit_grammar_json(finite.system));
    doc["strongly_connected"] = connectivity.strongly_connected;

    auto solution = fixed_point_solve(finite.system, opt.oracle_depth);
    CheckReport check = check_against_oracle(table, finite.system, finite.meta, solution);
    doc["check"] = {{"variables", check.variables_checked}, {"mismatches", check.mismatches}};

    if (connectivity.strongly_connected) {
        DifferenceSystem diff = compiler.build_difference_system(finite);
        doc["difference_grammar"] = ordered_json::parse(emit_grammar_json(diff.system));
        ordered_json core = ordered_json::array();
        for (VarId v : diff.core) core.push_back(diff.system.name(v));
        doc["difference_core"] = core;
    }
    ordered_json asympt;
    Options aopt = opt;
    cmd_asympt(aopt, &asympt);
    doc["asymptotics"] = asympt;
    std::cout << doc.dump(2) << "\n";
    if (!check.ok()) fail(ErrorKind::mismatch, "grammar-vs-oracle check failed");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compiler and analysis engine for positive linear catalytic systems"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--input", opt.input, "catalytic system JSON document")->required();
        cmd->add_option("--order", opt.order, "truncation order N");
        cmd->add_option("--oracle-depth", opt.oracle_depth, "oracle comparison depth");
        cmd->add_option("--format", opt.format, "text|json|csv");
        cmd->add_option("--seed", opt.seed, "seed for randomized self-checks");
        cmd->add_option("--var", opt.var, "restrict output to one variable");
        cmd->add_flag("-v,--verbose", opt.verbosity, "more output");
        return cmd;
    };

    auto* validate = add_common(app.add_subcommand("validate", "schema and positivity checks"));
    auto* steps = add_common(app.add_subcommand("steps", "dump the step table"));
    auto* oracle = add_common(app.add_subcommand("oracle", "brute-force weighted path counts"));
    oracle->add_option("--k1", opt.k1, "start level");
    oracle->add_option("--k2", opt.k2, "end level");
    oracle->add_option("--floor", opt.floor_level, "floor");
    oracle->add_option("--start-type", opt.start_type, "start type (1-based)");
    oracle->add_option("--end-type", opt.end_type, "end type (0 = aggregate)");
    auto* grammar = add_common(app.add_subcommand("grammar", "emit the finite grammar"));
    grammar->add_flag("--difference", opt.difference, "emit the difference system instead");
    auto* series = add_common(app.add_subcommand("series", "solve and print series"));
    series->add_flag("--difference", opt.difference, "solve the difference system instead");
    auto* check = add_common(app.add_subcommand("check", "grammar-vs-oracle equivalence"));
    auto* connectivity =
        add_common(app.add_subcommand("connectivity", "strong connectivity verdict"));
    auto* asympt = add_common(app.add_subcommand("asympt", "singularity report"));
    auto* report = add_common(app.add_subcommand("report", "everything, one JSON document"));

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(validate)) return cmd_validate(opt);
        if (app.got_subcommand(steps)) return cmd_steps(opt);
        if (app.got_subcommand(oracle)) return cmd_oracle(opt);
        if (app.got_subcommand(grammar)) return cmd_grammar(opt);
        if (app.got_subcommand(series)) return cmd_series(opt);
        if (app.got_subcommand(check)) return cmd_check(opt);
        if (app.got_subcommand(connectivity)) return cmd_connectivity(opt);
        if (app.got_subcommand(asympt)) return cmd_asympt(opt);
        if (app.got_subcommand(report)) return cmd_report(opt);
    } catch (const Error& e) {
        std::cerr << "error[" << e.exit_code() << "]: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error[1]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
