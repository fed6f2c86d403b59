#ifndef CATWALK_ANALYSIS_HPP
#define CATWALK_ANALYSIS_HPP

#include "catwalk/polysystem.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace catwalk {

struct ComponentDAG {
    std::vector<std::vector<VarId>> components; // dependencies before dependents
    std::vector<int> component_of;              // VarId -> component index
    std::vector<std::vector<int>> edges;        // component -> components it depends on
    int designated_component = -1;
};

ComponentDAG scc_condensation(const PolySystem& system);

// Double-precision evaluation of the full system at a point x, bottom-up in
// condensation order, with total x-derivatives.
class NumericSystem {
  public:
    explicit NumericSystem(const PolySystem& system);

    const ComponentDAG& dag() const { return dag_; }
    const PolySystem& system() const { return sys_; }

    // returns false when some component iteration diverges (x beyond its radius)
    bool eval(double x, std::vector<double>& values, std::vector<double>& derivs) const;

    // component-restricted operators; `values` holds all variables
    Eigen::VectorXd phi(int comp, double x, const std::vector<double>& values) const;
    Eigen::MatrixXd phi_y(int comp, double x, const std::vector<double>& values) const;
    Eigen::VectorXd phi_x(int comp, double x, const std::vector<double>& values,
                          const std::vector<double>& derivs) const;
    Eigen::MatrixXd phi_yy_contract(int comp, double x, const std::vector<double>& values,
                                    const Eigen::VectorXd& dir) const;
    Eigen::VectorXd phi_xy_contract(int comp, double x, const std::vector<double>& values,
                                    const std::vector<double>& derivs,
                                    const Eigen::VectorXd& dir) const;
    double spectral_radius(int comp, double x, const std::vector<double>& values) const;
    bool component_linear(int comp) const;

  private:
    const PolySystem& sys_;
    ComponentDAG dag_;
};

struct CriticalPoint {
    double rho = 0.0;
    double rho_lo = 0.0, rho_hi = 0.0;
    std::vector<double> values;       // all variables at rho
    Eigen::VectorXd right_null;       // Perron direction of the component
    Eigen::VectorXd left_null;
    int newton_steps = 0;
    double residual_fixed_point = 0.0; // interval upper bounds
    double residual_det = 0.0;
    bool null_space_simple = false;
};

// Critical point of one strongly connected nonlinear component: solve
// y = Phi(x,y) together with criticality of I - dPhi/dy by damped Newton from
// a marching/bisection bracket, then certify residuals with interval
// arithmetic.
CriticalPoint find_dominant_singularity(const NumericSystem& numeric, int comp);

// gcd of support gaps; nullopt when the window has fewer than two nonzero
// terms (degenerate / polynomial-looking series)
std::optional<int> compute_period(const TruncatedSeries& series, int offset_window);

struct PeriodStructure {
    int M = 1;
    std::vector<int> offset; // per variable: minimal support point (0 for zero series)
    std::vector<bool> zero;  // identically zero up to the probe order
};

// period of the full system from exact low-order series, with per-variable
// offsets consistent across every monomial
PeriodStructure system_period(const PolySystem& system, int probe_order);

// substitution z = x^M: y_i(x) = x^{offset_i} ytilde_i(x^M)
PolySystem period_reduce(const PolySystem& system, const PeriodStructure& period);

struct AsymptoticConstants {
    std::vector<double> c;    // indexed by residue class m = 0..M-1
    double amplitude = 0.0;   // singular amplitude of the designated variable in z
    double rho_z = 0.0;
};

AsymptoticConstants asymptotic_constants(const NumericSystem& reduced, int comp,
                                         VarId designated_reduced, const CriticalPoint& critical,
                                         int M, int designated_offset, double rho_x);

struct EmpiricalEstimate {
    bool sufficient = false;
    std::vector<double> c_hat;    // per residue class; NaN where no data
    double exponent = 0.0;        // least-squares slope estimate
    int terms_used = 0;
};

// scaled coefficients b_n = a_n * rho^n of one series
EmpiricalEstimate empirical_asymptotics(const std::vector<double>& scaled, int M, int fit_lo,
                                        int fit_hi);

// ratio-test estimate of the dominant singularity from scaled coefficients;
// returns rho_hat * correction, NaN when there is not enough signal
double ratio_rho_estimate(const std::vector<double>& scaled, double rho_hat, int M);

struct SingularityReport {
    bool ok = false;
    std::string failure;
    bool strongly_connected_core = false;
    bool linear_core = false; // simple pole regime instead of square root
    double rho = 0.0, rho_lo = 0.0, rho_hi = 0.0;
    int period = 1;
    std::vector<double> constants; // c_m for the designated variable
    double exponent = -1.5;        // -1.5 for the square-root case
    double residual_fixed_point = 0.0;
    double residual_det = 0.0;
    bool null_space_simple = false;
    double rho_z_cross_check = 0.0;
    std::vector<std::pair<std::string, double>> critical_vector;
    EmpiricalEstimate empirical;
    double empirical_ratio_rho = 0.0;
    std::vector<std::string> notes;
};

struct AnalysisOptions {
    int exact_probe_order = 64;
    int empirical_order = 4000;
    int empirical_fit_lo = 500;
    bool run_empirical = true;
};

// end-to-end analysis of a positive polynomial system around its designated
// variable (the designated component must be reachable-closed below)
SingularityReport analyze_system(const PolySystem& system, const AnalysisOptions& options);

} // namespace catwalk

#endif
