#include "catwalk/analysis.hpp"

#include "catwalk/error.hpp"
#include "catwalk/interval.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace catwalk {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

ComponentDAG scc_condensation(const PolySystem& system) {
    auto adj = system.dependency_graph();
    int n = system.size();
    std::vector<int> ids(static_cast<size_t>(n), -1), low(static_cast<size_t>(n)),
        num(static_cast<size_t>(n), -1);
    std::vector<int> stack;
    std::vector<char> on_stack(static_cast<size_t>(n), 0);
    int counter = 0, comp_count = 0;
    struct Frame {
        int v;
        size_t edge;
    };
    for (int root = 0; root < n; ++root) {
        if (num[static_cast<size_t>(root)] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        num[static_cast<size_t>(root)] = low[static_cast<size_t>(root)] = counter++;
        stack.push_back(root);
        on_stack[static_cast<size_t>(root)] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.edge < adj[static_cast<size_t>(f.v)].size()) {
                int w = adj[static_cast<size_t>(f.v)][f.edge++];
                if (num[static_cast<size_t>(w)] == -1) {
                    num[static_cast<size_t>(w)] = low[static_cast<size_t>(w)] = counter++;
                    stack.push_back(w);
                    on_stack[static_cast<size_t>(w)] = 1;
                    frames.push_back({w, 0});
                } else if (on_stack[static_cast<size_t>(w)]) {
                    low[static_cast<size_t>(f.v)] =
                        std::min(low[static_cast<size_t>(f.v)], num[static_cast<size_t>(w)]);
                }
            } else {
                if (low[static_cast<size_t>(f.v)] == num[static_cast<size_t>(f.v)]) {
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[static_cast<size_t>(w)] = 0;
                        ids[static_cast<size_t>(w)] = comp_count;
                        if (w == f.v) break;
                    }
                    ++comp_count;
                }
                int v = f.v;
                frames.pop_back();
                if (!frames.empty())
                    low[static_cast<size_t>(frames.back().v)] = std::min(
                        low[static_cast<size_t>(frames.back().v)], low[static_cast<size_t>(v)]);
            }
        }
    }

    // Tarjan emits dependencies first under the edge direction u -> dependency
    ComponentDAG dag;
    dag.component_of = ids;
    dag.components.assign(static_cast<size_t>(comp_count), {});
    for (VarId v = 0; v < n; ++v) dag.components[static_cast<size_t>(ids[static_cast<size_t>(v)])].push_back(v);
    dag.edges.assign(static_cast<size_t>(comp_count), {});
    for (VarId v = 0; v < n; ++v)
        for (VarId w : adj[static_cast<size_t>(v)]) {
            int cu = ids[static_cast<size_t>(v)], cw = ids[static_cast<size_t>(w)];
            if (cu != cw) dag.edges[static_cast<size_t>(cu)].push_back(cw);
        }
    for (auto& e : dag.edges) {
        std::sort(e.begin(), e.end());
        e.erase(std::unique(e.begin(), e.end()), e.end());
    }
    if (system.designated())
        dag.designated_component = ids[static_cast<size_t>(*system.designated())];
    return dag;
}

NumericSystem::NumericSystem(const PolySystem& system) : sys_(system), dag_(scc_condensation(system)) {}

namespace {

double eval_monomial(const Monomial& m, double x, const std::vector<double>& values) {
    double term = m.coef.to_double() * std::pow(x, m.xexp);
    for (VarId w : m.vars) term *= values[static_cast<size_t>(w)];
    return term;
}

} // namespace

Eigen::VectorXd NumericSystem::phi(int comp, double x, const std::vector<double>& values) const {
    const auto& vars = dag_.components[static_cast<size_t>(comp)];
    Eigen::VectorXd out(static_cast<Eigen::Index>(vars.size()));
    for (size_t i = 0; i < vars.size(); ++i) {
        double acc = 0.0;
        for (const auto& m : sys_.rhs(vars[i])) acc += eval_monomial(m, x, values);
        out(static_cast<Eigen::Index>(i)) = acc;
    }
    return out;
}

Eigen::MatrixXd NumericSystem::phi_y(int comp, double x, const std::vector<double>& values) const {
    const auto& vars = dag_.components[static_cast<size_t>(comp)];
    std::map<VarId, int> local;
    for (size_t i = 0; i < vars.size(); ++i) local[vars[i]] = static_cast<int>(i);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vars.size()),
                                                static_cast<Eigen::Index>(vars.size()));
    for (size_t i = 0; i < vars.size(); ++i) {
        for (const auto& m : sys_.rhs(vars[i])) {
            for (size_t pick = 0; pick < m.vars.size(); ++pick) {
                auto it = local.find(m.vars[pick]);
                if (it == local.end()) continue;
                double term = m.coef.to_double() * std::pow(x, m.xexp);
                for (size_t o = 0; o < m.vars.size(); ++o) {
                    if (o == pick) continue;
                    term *= values[static_cast<size_t>(m.vars[o])];
                }
                out(static_cast<Eigen::Index>(i), it->second) += term;
            }
        }
    }
    return out;
}

Eigen::VectorXd NumericSystem::phi_x(int comp, double x, const std::vector<double>& values,
                                     const std::vector<double>& derivs) const {
    const auto& vars = dag_.components[static_cast<size_t>(comp)];
    std::map<VarId, int> local;
    for (size_t i = 0; i < vars.size(); ++i) local[vars[i]] = static_cast<int>(i);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vars.size()));
    for (size_t i = 0; i < vars.size(); ++i) {
        for (const auto& m : sys_.rhs(vars[i])) {
            // d/dx of coef x^e * prod(values), component variables held fixed,
            // externals varying with x
            double inside = 1.0;
            for (VarId w : m.vars) inside *= values[static_cast<size_t>(w)];
            double acc = 0.0;
            if (m.xexp > 0) acc += m.xexp * std::pow(x, m.xexp - 1) * inside;
            for (size_t pick = 0; pick < m.vars.size(); ++pick) {
                if (local.count(m.vars[pick])) continue; // component vars are unknowns
                double term = std::pow(x, m.xexp) * derivs[static_cast<size_t>(m.vars[pick])];
                for (size_t o = 0; o < m.vars.size(); ++o) {
                    if (o == pick) continue;
                    term *= values[static_cast<size_t>(m.vars[o])];
                }
                acc += term;
            }
            out(static_cast<Eigen::Index>(i)) += m.coef.to_double() * acc;
        }
    }
    return out;
}

Eigen::MatrixXd NumericSystem::phi_yy_contract(int comp, double x,
                                               const std::vector<double>& values,
                                               const Eigen::VectorXd& dir) const {
    const auto& vars = dag_.components[static_cast<size_t>(comp)];
    std::map<VarId, int> local;
    for (size_t i = 0; i < vars.size(); ++i) local[vars[i]] = static_cast<int>(i);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vars.size()),
                                                static_cast<Eigen::Index>(vars.size()));
    for (size_t i = 0; i < vars.size(); ++i) {
        for (const auto& m : sys_.rhs(vars[i])) {
            for (size_t p1 = 0; p1 < m.vars.size(); ++p1) {
                auto i1 = local.find(m.vars[p1]);
                if (i1 == local.end()) continue;
                for (size_t p2 = 0; p2 < m.vars.size(); ++p2) {
                    if (p2 == p1) continue;
                    auto i2 = local.find(m.vars[p2]);
                    if (i2 == local.end()) continue;
                    double term = m.coef.to_double() * std::pow(x, m.xexp);
                    for (size_t o = 0; o < m.vars.size(); ++o) {
                        if (o == p1 || o == p2) continue;
                        term *= values[static_cast<size_t>(m.vars[o])];
                    }
                    out(static_cast<Eigen::Index>(i), i1->second) +=
                        term * dir(i2->second);
                }
            }
        }
    }
    return out;
}

Eigen::VectorXd NumericSystem::phi_xy_contract(int comp, double x,
                                               const std::vector<double>& values,
                                               const std::vector<double>& derivs,
                                               const Eigen::VectorXd& dir) const {
    const auto& vars = dag_.components[static_cast<size_t>(comp)];
    std::map<VarId, int> local;
    for (size_t i = 0; i < vars.size(); ++i) local[vars[i]] = static_cast<int>(i);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vars.size()));
    for (size_t i = 0; i < vars.size(); ++i) {
        for (const auto& m : sys_.rhs(vars[i])) {
            for (size_t pick = 0; pick < m.vars.size(); ++pick) {
                auto il = local.find(m.vars[pick]);
                if (il == local.end()) continue;
                // d/dx of the partial derivative w.r.t. this factor
                double base = 1.0;
                for (size_t o = 0; o < m.vars.size(); ++o) {
                    if (o == pick) continue;
                    base *= values[static_cast<size_t>(m.vars[o])];
                }
                double acc = 0.0;
                if (m.xexp > 0) acc += m.xexp * std::pow(x, m.xexp - 1) * base;
                for (size_t q = 0; q < m.vars.size(); ++q) {
                    if (q == pick || local.count(m.vars[q])) continue;
                    double term = std::pow(x, m.xexp) * derivs[static_cast<size_t>(m.vars[q])];
                    for (size_t o = 0; o < m.vars.size(); ++o) {
                        if (o == pick || o == q) continue;
                        term *= values[static_cast<size_t>(m.vars[o])];
                    }
                    acc += term;
                }
                out(static_cast<Eigen::Index>(i)) += m.coef.to_double() * acc * dir(il->second);
            }
        }
    }
    return out;
}

double NumericSystem::spectral_radius(int comp, double x, const std::vector<double>& values) const {
    Eigen::MatrixXd j = phi_y(comp, x, values);
    if (j.rows() == 0) return 0.0;
    Eigen::VectorXcd eig = j.eigenvalues();
    double r = 0.0;
    for (Eigen::Index i = 0; i < eig.size(); ++i) r = std::max(r, std::abs(eig(i)));
    return r;
}

bool NumericSystem::component_linear(int comp) const {
    const auto& vars = dag_.components[static_cast<size_t>(comp)];
    std::vector<char> in_comp(static_cast<size_t>(sys_.size()), 0);
    for (VarId v : vars) in_comp[static_cast<size_t>(v)] = 1;
    for (VarId v : vars)
        for (const auto& m : sys_.rhs(v)) {
            int count = 0;
            for (VarId w : m.vars) count += in_comp[static_cast<size_t>(w)];
            if (count >= 2) return false;
        }
    return true;
}

namespace {

// solve one component at fixed x by iteration plus Newton refinement
bool solve_component(const NumericSystem& numeric, int comp, double x,
                     std::vector<double>& values) {
    const auto& vars = numeric.dag().components[static_cast<size_t>(comp)];
    size_t n = vars.size();
    for (VarId v : vars) values[static_cast<size_t>(v)] = 0.0;
    double prev_delta = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 400; ++it) {
        Eigen::VectorXd next = numeric.phi(comp, x, values);
        double delta = 0.0, scale = 1.0;
        for (size_t i = 0; i < n; ++i) {
            delta = std::max(delta, std::fabs(next(static_cast<Eigen::Index>(i)) -
                                              values[static_cast<size_t>(vars[i])]));
            scale = std::max(scale, std::fabs(next(static_cast<Eigen::Index>(i))));
            values[static_cast<size_t>(vars[i])] = next(static_cast<Eigen::Index>(i));
        }
        if (scale > 1e100) return false;
        if (delta <= 1e-15 * scale) return true;
        if (it > 64 && delta > prev_delta * 1.02 && delta > 1e-6 * scale) return false;
        prev_delta = std::max(delta, 1e-300);
    }
    // Newton refinement for slow (near-critical) components
    for (int it = 0; it < 60; ++it) {
        Eigen::VectorXd residual = numeric.phi(comp, x, values);
        for (size_t i = 0; i < n; ++i)
            residual(static_cast<Eigen::Index>(i)) -= values[static_cast<size_t>(vars[i])];
        double rn = residual.lpNorm<Eigen::Infinity>();
        if (rn < 1e-14) return true;
        Eigen::MatrixXd jac =
            Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) -
            numeric.phi_y(comp, x, values);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) return false;
        Eigen::VectorXd delta = lu.solve(residual);
        if (!delta.allFinite()) return false;
        for (size_t i = 0; i < n; ++i)
            values[static_cast<size_t>(vars[i])] += delta(static_cast<Eigen::Index>(i));
    }
    Eigen::VectorXd residual = numeric.phi(comp, x, values);
    for (size_t i = 0; i < n; ++i)
        residual(static_cast<Eigen::Index>(i)) -= values[static_cast<size_t>(vars[i])];
    return residual.lpNorm<Eigen::Infinity>() < 1e-11;
}

} // namespace

bool NumericSystem::eval(double x, std::vector<double>& values, std::vector<double>& derivs) const {
    int n = sys_.size();
    values.assign(static_cast<size_t>(n), 0.0);
    derivs.assign(static_cast<size_t>(n), 0.0);
    for (int comp = 0; comp < static_cast<int>(dag_.components.size()); ++comp) {
        if (!solve_component(*this, comp, x, values)) return false;
        const auto& vars = dag_.components[static_cast<size_t>(comp)];
        size_t m = vars.size();
        Eigen::MatrixXd jac =
            Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) -
            phi_y(comp, x, values);
        Eigen::VectorXd rhs = phi_x(comp, x, values, derivs);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) return false;
        Eigen::VectorXd dy = lu.solve(rhs);
        for (size_t i = 0; i < m; ++i)
            derivs[static_cast<size_t>(vars[i])] = dy(static_cast<Eigen::Index>(i));
    }
    return true;
}

namespace {

// evaluate all components strictly below `comp` (its transitive dependencies)
bool eval_below(const NumericSystem& numeric, int comp, double x, std::vector<double>& values,
                std::vector<double>& derivs) {
    const auto& dag = numeric.dag();
    int nc = static_cast<int>(dag.components.size());
    std::vector<char> needed(static_cast<size_t>(nc), 0);
    std::function<void(int)> mark = [&](int c) {
        for (int dep : dag.edges[static_cast<size_t>(c)])
            if (!needed[static_cast<size_t>(dep)]) {
                needed[static_cast<size_t>(dep)] = 1;
                mark(dep);
            }
    };
    mark(comp);
    int n = numeric.system().size();
    values.assign(static_cast<size_t>(n), 0.0);
    derivs.assign(static_cast<size_t>(n), 0.0);
    for (int c = 0; c < nc; ++c) {
        if (!needed[static_cast<size_t>(c)]) continue;
        if (!solve_component(numeric, c, x, values)) return false;
        const auto& vars = dag.components[static_cast<size_t>(c)];
        size_t m = vars.size();
        Eigen::MatrixXd jac =
            Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) -
            numeric.phi_y(c, x, values);
        Eigen::VectorXd rhs = numeric.phi_x(c, x, values, derivs);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) return false;
        Eigen::VectorXd dy = lu.solve(rhs);
        for (size_t i = 0; i < m; ++i)
            derivs[static_cast<size_t>(vars[i])] = dy(static_cast<Eigen::Index>(i));
    }
    return true;
}

bool feasible_point(const NumericSystem& numeric, int comp, double x, std::vector<double>& values,
                    std::vector<double>& derivs) {
    if (!eval_below(numeric, comp, x, values, derivs)) return false;
    if (!solve_component(numeric, comp, x, values)) return false;
    return numeric.spectral_radius(comp, x, values) < 1.0;
}

Interval interval_monomial(const Monomial& m, const Interval& x,
                           const std::vector<Interval>& values) {
    Interval term(m.coef.to_double());
    // coefficient conversion error
    term = term.inflated(std::fabs(m.coef.to_double()) * 1e-16);
    term = term * pow_int(x, m.xexp);
    for (VarId w : m.vars) term = term * values[static_cast<size_t>(w)];
    return term;
}

// upper bound on |det| via interval LU with midpoint pivoting
double interval_det_bound(std::vector<std::vector<Interval>> a) {
    size_t n = a.size();
    Interval det(1.0);
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        double best = 0.0;
        for (size_t r = col; r < n; ++r) {
            double mid = (a[r][col].lo + a[r][col].hi) / 2;
            if (std::fabs(mid) > best) {
                best = std::fabs(mid);
                pivot = r;
            }
        }
        std::swap(a[col], a[pivot]);
        if (pivot != col) det = det * Interval(-1.0);
        if (a[col][col].contains(0.0) && a[col][col].mag() < 1e-300) return 0.0;
        det = det * a[col][col];
        for (size_t r = col + 1; r < n; ++r) {
            if (a[col][col].contains(0.0)) {
                // cannot divide through zero; give up with a coarse bound
                return det.mag();
            }
            Interval f = a[r][col] / a[col][col];
            for (size_t c = col + 1; c < n; ++c) a[r][c] = a[r][c] - f * a[col][c];
        }
    }
    return det.mag();
}

} // namespace

CriticalPoint find_dominant_singularity(const NumericSystem& numeric, int comp) {
    std::vector<double> values, derivs;
    const auto& vars = numeric.dag().components[static_cast<size_t>(comp)];
    size_t n = vars.size();

    // bracket the feasibility boundary
    double lo = 0.0, hi = 0.0;
    double x = 1e-4;
    for (int i = 0; i < 80; ++i) {
        if (feasible_point(numeric, comp, x, values, derivs)) {
            lo = x;
            x *= 2.0;
        } else {
            hi = x;
            break;
        }
    }
    if (lo == 0.0) fail(ErrorKind::analysis, "no feasible point found below the singularity");
    if (hi == 0.0) fail(ErrorKind::analysis, "spectral radius never reaches one");
    for (int i = 0; i < 90; ++i) {
        double mid = 0.5 * (lo + hi);
        if (feasible_point(numeric, comp, mid, values, derivs)) lo = mid;
        else hi = mid;
    }

    // start Newton a hair inside the bracket
    double x0 = lo;
    if (!feasible_point(numeric, comp, x0, values, derivs))
        fail(ErrorKind::analysis, "lost feasibility at the bracket endpoint");
    Eigen::MatrixXd jy = numeric.phi_y(comp, x0, values);
    // Perron vector by power iteration on the nonnegative Jacobian
    Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    for (int i = 0; i < 500; ++i) {
        Eigen::VectorXd next = jy * v;
        double norm = next.lpNorm<Eigen::Infinity>();
        if (norm == 0.0) break;
        next /= norm;
        if ((next - v).lpNorm<Eigen::Infinity>() < 1e-14) {
            v = next;
            break;
        }
        v = next;
    }
    Eigen::VectorXd c = v; // fixed normalization direction

    // Newton on [y - Phi; (I - Phi_y) v; c.v - 1] in (y, v, x)
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = values[static_cast<size_t>(vars[i])];
    double xc = x0;
    int steps = 0;
    double last_step_x = 0.0;
    for (; steps < 200; ++steps) {
        if (!eval_below(numeric, comp, xc, values, derivs))
            fail(ErrorKind::analysis, "lower components diverged during Newton");
        for (size_t i = 0; i < n; ++i) values[static_cast<size_t>(vars[i])] = y(static_cast<Eigen::Index>(i));
        Eigen::VectorXd ph = numeric.phi(comp, xc, values);
        Eigen::MatrixXd py = numeric.phi_y(comp, xc, values);
        Eigen::VectorXd px = numeric.phi_x(comp, xc, values, derivs);
        Eigen::MatrixXd ImJ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                        static_cast<Eigen::Index>(n)) -
                              py;
        Eigen::VectorXd g1 = y - ph;
        Eigen::VectorXd g2 = ImJ * v;
        double g3 = c.dot(v) - 1.0;
        double res = std::max({g1.lpNorm<Eigen::Infinity>(), g2.lpNorm<Eigen::Infinity>(),
                               std::fabs(g3)});
        if (res < 1e-13 && steps > 0 && last_step_x < 1e-11) break;

        Eigen::MatrixXd big = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(n) + 1,
                                                    2 * static_cast<Eigen::Index>(n) + 1);
        Eigen::VectorXd rhs(2 * static_cast<Eigen::Index>(n) + 1);
        big.block(0, 0, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = ImJ;
        big.block(0, 2 * static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), 1) = -px;
        big.block(static_cast<Eigen::Index>(n), 0, static_cast<Eigen::Index>(n),
                  static_cast<Eigen::Index>(n)) = -numeric.phi_yy_contract(comp, xc, values, v);
        big.block(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n),
                  static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = ImJ;
        big.block(static_cast<Eigen::Index>(n), 2 * static_cast<Eigen::Index>(n),
                  static_cast<Eigen::Index>(n), 1) =
            -numeric.phi_xy_contract(comp, xc, values, derivs, v);
        big.block(2 * static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), 1,
                  static_cast<Eigen::Index>(n)) = c.transpose();
        rhs.head(static_cast<Eigen::Index>(n)) = -g1;
        rhs.segment(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = -g2;
        rhs(2 * static_cast<Eigen::Index>(n)) = -g3;

        Eigen::FullPivLU<Eigen::MatrixXd> lu(big);
        if (!lu.isInvertible())
            fail(ErrorKind::analysis, "singular Newton system at the critical point");
        Eigen::VectorXd delta = lu.solve(rhs);
        double damp = 1.0;
        double dx = delta(2 * static_cast<Eigen::Index>(n));
        if (std::fabs(dx) > 0.25 * xc) damp = 0.25 * xc / std::fabs(dx);
        y += damp * delta.head(static_cast<Eigen::Index>(n));
        v += damp * delta.segment(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        xc += damp * dx;
        last_step_x = std::fabs(damp * dx);
        if (xc <= 0 || !std::isfinite(xc))
            fail(ErrorKind::analysis, "Newton left the positive axis");
    }
    if (steps >= 200) fail(ErrorKind::analysis, "Newton did not converge at the critical point");

    CriticalPoint out;
    out.rho = xc;
    out.newton_steps = steps;
    if (!eval_below(numeric, comp, xc, values, derivs))
        fail(ErrorKind::analysis, "lower components diverged at the reported point");
    for (size_t i = 0; i < n; ++i) values[static_cast<size_t>(vars[i])] = y(static_cast<Eigen::Index>(i));
    out.values = values;
    out.right_null = v / v.lpNorm<Eigen::Infinity>();

    Eigen::MatrixXd py = numeric.phi_y(comp, xc, values);
    Eigen::MatrixXd ImJ =
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) - py;
    // left null vector from the transpose
    {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(ImJ.transpose());
        Eigen::MatrixXd kernel = lu.kernel();
        if (kernel.cols() >= 1) {
            out.left_null = kernel.col(0);
        } else {
            // fall back to inverse power iteration
            Eigen::VectorXd u = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
            for (int i = 0; i < 200; ++i) {
                Eigen::VectorXd next = py.transpose() * u;
                double norm = next.lpNorm<Eigen::Infinity>();
                if (norm == 0) break;
                u = next / norm;
            }
            out.left_null = u;
        }
        if (out.left_null.sum() < 0) out.left_null = -out.left_null;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> eig(py);
    int near_one = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
        if (std::abs(eig.eigenvalues()(i) - std::complex<double>(1.0, 0.0)) < 1e-6) ++near_one;
    out.null_space_simple = (near_one == 1);

    // interval residual certificates at the reported point
    double w = std::max(last_step_x * 4, std::fabs(xc) * 1e-14);
    out.rho_lo = xc - w;
    out.rho_hi = xc + w;
    Interval xi(out.rho_lo, out.rho_hi);
    std::vector<Interval> vi;
    vi.reserve(values.size());
    for (double val : values) vi.emplace_back(Interval(val).inflated(std::fabs(val) * 4e-16));
    // residuals over the component and everything below it
    double resid = 0.0;
    {
        std::vector<char> involved(values.size(), 0);
        std::function<void(int)> mark = [&](int cidx) {
            for (VarId vv : numeric.dag().components[static_cast<size_t>(cidx)])
                involved[static_cast<size_t>(vv)] = 1;
            for (int dep : numeric.dag().edges[static_cast<size_t>(cidx)]) mark(dep);
        };
        mark(comp);
        for (VarId vv = 0; vv < numeric.system().size(); ++vv) {
            if (!involved[static_cast<size_t>(vv)]) continue;
            Interval acc(0.0);
            for (const auto& m : numeric.system().rhs(vv)) acc = acc + interval_monomial(m, xi, vi);
            Interval r = vi[static_cast<size_t>(vv)] - acc;
            resid = std::max(resid, abs(r).hi);
        }
    }
    out.residual_fixed_point = resid;

    std::vector<std::vector<Interval>> imat(n, std::vector<Interval>(n, Interval(0.0)));
    {
        std::map<VarId, int> local;
        for (size_t i = 0; i < vars.size(); ++i) local[vars[i]] = static_cast<int>(i);
        for (size_t i = 0; i < n; ++i) imat[i][i] = Interval(1.0);
        for (size_t i = 0; i < n; ++i) {
            for (const auto& m : numeric.system().rhs(vars[i])) {
                for (size_t pick = 0; pick < m.vars.size(); ++pick) {
                    auto it = local.find(m.vars[pick]);
                    if (it == local.end()) continue;
                    Interval term(m.coef.to_double());
                    term = term.inflated(std::fabs(m.coef.to_double()) * 1e-16);
                    term = term * pow_int(xi, m.xexp);
                    for (size_t o = 0; o < m.vars.size(); ++o) {
                        if (o == pick) continue;
                        term = term * vi[static_cast<size_t>(m.vars[o])];
                    }
                    imat[i][static_cast<size_t>(it->second)] =
                        imat[i][static_cast<size_t>(it->second)] - term;
                }
            }
        }
    }
    out.residual_det = interval_det_bound(imat);
    return out;
}

std::optional<int> compute_period(const TruncatedSeries& series, int offset_window) {
    int N = series.order();
    int window_lo = std::max(0, N + 1 - offset_window);
    int in_window = 0;
    for (int n = window_lo; n <= N; ++n)
        if (!series.coeff(n).is_zero()) ++in_window;
    auto support = series.support();
    if (support.size() < 2 || in_window < 2) return std::nullopt;
    int g = 0;
    for (size_t i = 1; i < support.size(); ++i) g = std::gcd(g, support[i] - support[i - 1]);
    return g == 0 ? 1 : g;
}

PeriodStructure system_period(const PolySystem& system, int probe_order) {
    auto sol = fixed_point_solve(system, probe_order);
    PeriodStructure out;
    int n = system.size();
    out.offset.assign(static_cast<size_t>(n), 0);
    out.zero.assign(static_cast<size_t>(n), false);
    int g = 0;
    for (VarId v = 0; v < n; ++v) {
        auto support = sol.of(v).support();
        if (support.empty()) {
            out.zero[static_cast<size_t>(v)] = true;
            continue;
        }
        out.offset[static_cast<size_t>(v)] = support[0];
        for (size_t i = 1; i < support.size(); ++i) g = std::gcd(g, support[i] - support[i - 1]);
    }
    if (g == 0) g = 1;
    // shrink until every monomial is residue-consistent
    bool changed = true;
    while (changed && g > 1) {
        changed = false;
        for (VarId v = 0; v < n && !changed; ++v) {
            if (out.zero[static_cast<size_t>(v)]) continue;
            for (const auto& m : system.rhs(v)) {
                bool dead = false;
                int total = m.xexp;
                for (VarId w : m.vars) {
                    if (out.zero[static_cast<size_t>(w)]) dead = true;
                    total += out.offset[static_cast<size_t>(w)];
                }
                if (dead) continue;
                int r = (total - out.offset[static_cast<size_t>(v)]) % g;
                if (r < 0) r += g;
                if (r != 0) {
                    g = std::gcd(g, r);
                    changed = true;
                    break;
                }
            }
        }
    }
    out.M = std::max(1, g);
    return out;
}

PolySystem period_reduce(const PolySystem& system, const PeriodStructure& period) {
    PolySystem out;
    for (VarId v = 0; v < system.size(); ++v) out.add_variable(system.name(v));
    for (VarId v = 0; v < system.size(); ++v) {
        std::vector<Monomial> monos;
        if (!period.zero[static_cast<size_t>(v)]) {
            for (const auto& m : system.rhs(v)) {
                bool dead = false;
                int total = m.xexp;
                for (VarId w : m.vars) {
                    if (period.zero[static_cast<size_t>(w)]) dead = true;
                    total += period.offset[static_cast<size_t>(w)];
                }
                if (dead) continue;
                int shifted = total - period.offset[static_cast<size_t>(v)];
                if (shifted < 0 || shifted % period.M != 0)
                    fail(ErrorKind::internal, "period reduction produced a fractional exponent");
                Monomial mm = m;
                mm.xexp = shifted / period.M;
                monos.push_back(mm);
            }
        }
        out.set_rhs(v, std::move(monos));
    }
    if (system.designated()) out.set_designated(*system.designated());
    return out;
}

AsymptoticConstants asymptotic_constants(const NumericSystem& reduced, int comp,
                                         VarId designated_reduced, const CriticalPoint& critical,
                                         int M, int designated_offset, double rho_x) {
    const auto& vars = reduced.dag().components[static_cast<size_t>(comp)];
    size_t n = vars.size();
    std::vector<double> values = critical.values;
    std::vector<double> derivs(values.size(), 0.0);
    if (!eval_below(reduced, comp, critical.rho, values, derivs))
        fail(ErrorKind::analysis, "lower components diverged in the reduced system");
    // restore the component values from the critical data
    for (size_t i = 0; i < n; ++i)
        values[static_cast<size_t>(vars[i])] = critical.values[static_cast<size_t>(vars[i])];

    Eigen::VectorXd v = critical.right_null;
    Eigen::VectorXd u = critical.left_null;
    Eigen::VectorXd px = reduced.phi_x(comp, critical.rho, values, derivs);
    Eigen::MatrixXd hess = reduced.phi_yy_contract(comp, critical.rho, values, v);
    Eigen::VectorXd hvv = hess * v;

    double num = 2.0 * critical.rho * u.dot(px);
    double den = u.dot(hvv);
    if (den <= 0 || num <= 0)
        fail(ErrorKind::analysis, "degenerate quadratic data at the critical point");
    double b = std::sqrt(num / den);

    int local = -1;
    for (size_t i = 0; i < n; ++i)
        if (vars[i] == designated_reduced) local = static_cast<int>(i);
    if (local < 0) fail(ErrorKind::internal, "designated variable missing from the core");

    AsymptoticConstants out;
    out.rho_z = critical.rho;
    out.amplitude = v(local) * b / (2.0 * std::sqrt(kPi));
    out.c.assign(static_cast<size_t>(M), 0.0);
    double cm = out.amplitude * std::pow(rho_x, designated_offset) * std::pow(M, 1.5);
    out.c[static_cast<size_t>(designated_offset % M)] = cm;
    return out;
}

EmpiricalEstimate empirical_asymptotics(const std::vector<double>& scaled, int M, int fit_lo,
                                        int fit_hi) {
    EmpiricalEstimate out;
    out.c_hat.assign(static_cast<size_t>(M), std::numeric_limits<double>::quiet_NaN());
    int N = static_cast<int>(scaled.size()) - 1;
    fit_hi = std::min(fit_hi, N);

    for (int m = 0; m < M; ++m) {
        // two-point elimination of the 1/n correction along the residue class
        int n2 = -1;
        for (int n = fit_hi; n >= 1; --n)
            if (n % M == m && scaled[static_cast<size_t>(n)] > 0) {
                n2 = n;
                break;
            }
        if (n2 < 4) continue;
        int n1 = n2 / 2;
        while (n1 > 1 && (n1 % M != m || scaled[static_cast<size_t>(n1)] <= 0)) --n1;
        if (n1 <= 1 || n1 == n2) continue;
        double c2 = scaled[static_cast<size_t>(n2)] * std::pow(n2, 1.5);
        double c1 = scaled[static_cast<size_t>(n1)] * std::pow(n1, 1.5);
        out.c_hat[static_cast<size_t>(m)] = (n2 * c2 - n1 * c1) / (n2 - n1);
    }
    for (int m = 0; m < M; ++m) {
        bool all_zero = true;
        for (int n = m; n <= fit_hi; n += M)
            if (scaled[static_cast<size_t>(n)] != 0.0) all_zero = false;
        if (all_zero) out.c_hat[static_cast<size_t>(m)] = 0.0;
    }

    // least-squares slope of log(b_n) against log(n) in the dominant class
    int best_m = 0;
    double best = -1.0;
    for (int m = 0; m < M; ++m) {
        double v = std::isnan(out.c_hat[static_cast<size_t>(m)]) ? -1 : out.c_hat[static_cast<size_t>(m)];
        if (v > best) {
            best = v;
            best_m = m;
        }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (int n = fit_lo; n <= fit_hi; ++n) {
        if (n % M != best_m) continue;
        double b = scaled[static_cast<size_t>(n)];
        if (b <= 0) continue;
        double lx = std::log(n), ly = std::log(b);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++count;
    }
    out.terms_used = count;
    if (count >= 16) {
        out.sufficient = true;
        out.exponent = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    }
    return out;
}

double ratio_rho_estimate(const std::vector<double>& scaled, double rho_hat, int M) {
    int N = static_cast<int>(scaled.size()) - 1;
    int n2 = -1;
    for (int n = N; n >= 1; --n)
        if (scaled[static_cast<size_t>(n)] > 0) {
            n2 = n;
            break;
        }
    if (n2 <= 2 * M) return std::numeric_limits<double>::quiet_NaN();
    int n1 = n2 - M;
    while (n1 > 0 && scaled[static_cast<size_t>(n1)] <= 0) n1 -= 1;
    if (n1 <= 0 || (n2 - n1) % 1 != 0) return std::numeric_limits<double>::quiet_NaN();
    int gap = n2 - n1;
    double ratio = scaled[static_cast<size_t>(n1)] / scaled[static_cast<size_t>(n2)];
    double corrected = ratio * std::pow(static_cast<double>(n1) / n2, 1.5);
    return rho_hat * std::pow(corrected, 1.0 / gap);
}

SingularityReport analyze_system(const PolySystem& system, const AnalysisOptions& options) {
    SingularityReport report;
    if (!system.designated()) {
        report.failure = "no designated variable";
        return report;
    }
    VarId designated = *system.designated();
    try {
        NumericSystem numeric(system);
        int comp = numeric.dag().designated_component;
        const auto& core = numeric.dag().components[static_cast<size_t>(comp)];
        {
            bool self = false;
            auto g = system.dependency_graph();
            for (VarId w : g[static_cast<size_t>(designated)])
                if (w == designated) self = true;
            report.strongly_connected_core = core.size() > 1 || self;
        }

        PeriodStructure period = system_period(system, options.exact_probe_order);
        report.period = period.M;

        if (numeric.component_linear(comp)) {
            report.linear_core = true;
            report.exponent = -1.0;
            // pole of the resolvent: smallest x with unit spectral radius
            std::vector<double> values, derivs;
            double lo = 0, hi = 0, x = 1e-4;
            for (int i = 0; i < 80 && hi == 0; ++i) {
                if (feasible_point(numeric, comp, x, values, derivs)) lo = x;
                else hi = x;
                if (hi == 0) x *= 2;
            }
            if (lo > 0 && hi > 0) {
                for (int i = 0; i < 70; ++i) {
                    double mid = 0.5 * (lo + hi);
                    if (feasible_point(numeric, comp, mid, values, derivs)) lo = mid;
                    else hi = mid;
                }
                report.rho = 0.5 * (lo + hi);
                report.rho_lo = lo;
                report.rho_hi = hi;
                report.ok = true;
            } else {
                report.failure = "no pole located for the linear core";
            }
        } else {
            CriticalPoint crit = find_dominant_singularity(numeric, comp);
            report.rho = crit.rho;
            report.rho_lo = crit.rho_lo;
            report.rho_hi = crit.rho_hi;
            report.residual_fixed_point = crit.residual_fixed_point;
            report.residual_det = crit.residual_det;
            for (VarId v : core)
                report.critical_vector.emplace_back(system.name(v),
                                                    crit.values[static_cast<size_t>(v)]);

            // period reduction, then the square-root local analysis
            PolySystem reduced = period_reduce(system, period);
            NumericSystem reduced_numeric(reduced);
            int comp_red = reduced_numeric.dag().designated_component;
            CriticalPoint crit_red = find_dominant_singularity(reduced_numeric, comp_red);
            report.null_space_simple = crit_red.null_space_simple;
            report.rho_z_cross_check = crit_red.rho;
            double rho_m = std::pow(crit.rho, period.M);
            if (std::fabs(crit_red.rho - rho_m) > 1e-8 * std::max(1.0, rho_m))
                report.notes.push_back("reduced critical point differs from rho^M");
            AsymptoticConstants constants = asymptotic_constants(
                reduced_numeric, comp_red, designated, crit_red, period.M,
                period.offset[static_cast<size_t>(designated)], crit.rho);
            report.constants = constants.c;
            report.exponent = -1.5;
            report.ok = true;
        }

        if (options.run_empirical && report.ok) {
            auto scaled = expand_scaled(system, report.rho, options.empirical_order);
            const auto& b = scaled[static_cast<size_t>(designated)];
            report.empirical = empirical_asymptotics(b, report.period, options.empirical_fit_lo,
                                                     options.empirical_order);
            report.empirical_ratio_rho = ratio_rho_estimate(b, report.rho, report.period);
        }
    } catch (const Error& e) {
        report.ok = false;
        report.failure = e.what();
    }
    return report;
}

} // namespace catwalk
