#include "catwalk/error.hpp"
#include "catwalk/grammar.hpp"

#include <json.hpp>

#include <sstream>

namespace catwalk {

using nlohmann::ordered_json;

std::string emit_grammar_text(const PolySystem& system) {
    std::ostringstream os;
    for (VarId v = 0; v < system.size(); ++v) {
        os << system.name(v) << " =";
        const auto& monos = system.rhs(v);
        if (monos.empty()) {
            os << " 0";
        } else {
            bool first = true;
            for (const auto& m : monos) {
                os << (first ? " " : " + ");
                first = false;
                bool wrote = false;
                if (m.coef != Rational(1) || (m.xexp == 0 && m.vars.empty())) {
                    os << m.coef.str();
                    wrote = true;
                }
                if (m.xexp == 1) {
                    os << (wrote ? " " : "") << "x";
                    wrote = true;
                } else if (m.xexp > 1) {
                    os << (wrote ? " " : "") << "x^" << m.xexp;
                    wrote = true;
                }
                for (VarId w : m.vars) {
                    os << (wrote ? " " : "") << system.name(w);
                    wrote = true;
                }
            }
        }
        os << "\n";
    }
    return os.str();
}

PolySystem parse_grammar_text(const std::string& text) {
    PolySystem out;
    std::istringstream is(text);
    std::string line;
    struct Rule {
        std::string lhs;
        std::vector<std::vector<std::string>> terms;
    };
    std::vector<Rule> rules;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        Rule rule;
        std::string token;
        if (!(ls >> rule.lhs)) continue;
        if (!(ls >> token) || token != "=")
            fail(ErrorKind::validation, "grammar rule missing '=': " + line);
        std::vector<std::string> term;
        while (ls >> token) {
            if (token == "+") {
                if (term.empty()) fail(ErrorKind::validation, "empty term in: " + line);
                rule.terms.push_back(term);
                term.clear();
                continue;
            }
            term.push_back(token);
        }
        if (!term.empty()) rule.terms.push_back(term);
        rules.push_back(std::move(rule));
    }
    for (const auto& rule : rules) out.ensure_variable(rule.lhs);
    for (const auto& rule : rules) {
        std::vector<Monomial> monos;
        for (const auto& term : rule.terms) {
            if (term.size() == 1 && term[0] == "0") continue;
            Monomial m;
            m.coef = Rational(1);
            for (const auto& tok : term) {
                if (tok == "x") {
                    m.xexp += 1;
                } else if (tok.rfind("x^", 0) == 0) {
                    m.xexp += std::stoi(tok.substr(2));
                } else if (std::isdigit(static_cast<unsigned char>(tok[0]))) {
                    m.coef *= Rational::parse(tok);
                } else {
                    auto v = out.find(tok);
                    if (!v) fail(ErrorKind::validation, "undeclared grammar variable " + tok);
                    m.vars.push_back(*v);
                }
            }
            monos.push_back(std::move(m));
        }
        out.set_rhs(*out.find(rule.lhs), std::move(monos));
    }
    return out;
}

std::string emit_grammar_json(const PolySystem& system) {
    ordered_json doc;
    doc["format_version"] = 1;
    if (system.designated())
        doc["designated"] = system.name(*system.designated());
    else
        doc["designated"] = nullptr;
    doc["variables"] = ordered_json::array();
    for (VarId v = 0; v < system.size(); ++v) doc["variables"].push_back(system.name(v));
    doc["rules"] = ordered_json::array();
    for (VarId v = 0; v < system.size(); ++v) {
        ordered_json rule;
        rule["lhs"] = system.name(v);
        rule["monomials"] = ordered_json::array();
        for (const auto& m : system.rhs(v)) {
            ordered_json mono;
            mono["coef"] = m.coef.str();
            mono["x"] = m.xexp;
            mono["vars"] = ordered_json::array();
            for (VarId w : m.vars) mono["vars"].push_back(system.name(w));
            rule["monomials"].push_back(mono);
        }
        doc["rules"].push_back(rule);
    }
    return doc.dump(2) + "\n";
}

PolySystem parse_grammar_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorKind::validation, std::string("malformed grammar JSON: ") + e.what());
    }
    if (!doc.contains("format_version") || doc["format_version"].get<int>() != 1)
        fail(ErrorKind::validation, "unsupported grammar format_version");
    PolySystem out;
    for (const auto& name : doc["variables"]) out.ensure_variable(name.get<std::string>());
    for (const auto& rule : doc["rules"]) {
        auto v = out.find(rule["lhs"].get<std::string>());
        if (!v) fail(ErrorKind::validation, "rule for undeclared variable");
        std::vector<Monomial> monos;
        for (const auto& mono : rule["monomials"]) {
            Monomial m;
            m.coef = Rational::parse(mono["coef"].get<std::string>());
            m.xexp = mono["x"].get<int>();
            for (const auto& w : mono["vars"]) {
                auto wid = out.find(w.get<std::string>());
                if (!wid) fail(ErrorKind::validation, "undeclared grammar variable in monomial");
                m.vars.push_back(*wid);
            }
            monos.push_back(std::move(m));
        }
        out.set_rhs(*v, std::move(monos));
    }
    if (!doc["designated"].is_null()) {
        auto v = out.find(doc["designated"].get<std::string>());
        if (v) out.set_designated(*v);
    }
    return out;
}

} // namespace catwalk
