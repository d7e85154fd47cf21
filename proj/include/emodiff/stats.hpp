#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace emodiff {

// Grouped regression data: one row per article, grouped by publisher.
// X holds article-level predictors; Z_pub holds publisher-level columns,
// constant within each group.
struct DesignMatrix {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> x_names;
  std::vector<std::string> group;
  Eigen::MatrixXd Z_pub;  // 0 columns when absent
  std::vector<std::string> z_names;

  // Checks widths, finiteness, and that Z_pub is constant within groups.
  void validate() const;
};

enum class FitMethod { ML, REML, FE };

struct FitResult {
  FitMethod method = FitMethod::REML;
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::VectorXd se;
  Eigen::MatrixXd vcov;            // reported covariance (clustered for FE)
  Eigen::MatrixXd vcov_classical;  // homoskedastic covariance

  double sigma_mu = 0.0;   // between-group intercept SD
  double sigma_eps = 0.0;  // residual SD
  double lambda = 0.0;     // sigma_mu^2 / sigma_eps^2
  double loglik = 0.0;     // value of the maximized criterion

  Eigen::VectorXd re_sd;      // random-effect SDs (random-slope fits)
  Eigen::MatrixXd re_corr;    // random-effect correlations
  std::vector<std::string> re_names;

  std::int64_t n_obs = 0;
  std::int64_t n_groups = 0;
  std::vector<std::string> absorbed;             // group-constant columns dropped by FE
  std::vector<std::string> small_groups;         // groups too small to identify slopes
  int iterations = 0;                            // EM iterations used

  void save(const std::filesystem::path& path) const;
  static FitResult load(const std::filesystem::path& path);
};

struct RandomInterceptOptions {
  FitMethod method = FitMethod::REML;
  // Pins the variance ratio instead of estimating it; 0 gives plain OLS.
  std::optional<double> fixed_lambda;
};

// Gaussian random-intercept model. The variance ratio lambda maximizes the
// profiled (restricted) log-likelihood via a bounded one-dimensional search
// with tolerance 1e-8 on lambda; fixed effects are GLS at the optimum with
// covariance sigma_eps^2 (X' V0^-1 X)^-1.
FitResult fit_random_intercept(const DesignMatrix& design, RandomInterceptOptions options = {});

// Profiled log-likelihood and its analytic derivative in lambda, exposed
// for diagnostics and derivative checks.
double profile_loglik(const DesignMatrix& design, FitMethod method, double lambda);
double profile_score(const DesignMatrix& design, FitMethod method, double lambda);

// Random intercept + random slopes on the named X columns with an
// unstructured covariance, fit by maximum-likelihood EM. Stops when the
// marginal log-likelihood moves less than tol; exceeding max_iterations
// raises NoConvergence.
FitResult fit_random_slopes(const DesignMatrix& design,
                            const std::vector<std::string>& slope_columns,
                            int max_iterations = 2000, double tol = 1e-6);

// Within-group (publisher) fixed effects: group-constant columns are
// absorbed and reported, the rest are demeaned within groups and fit by
// OLS. Reported SEs are cluster-robust by group with small-sample factor
// G/(G-1) * (N-1)/(N-k), where k counts the retained predictors plus the
// absorbed group intercepts.
FitResult fit_fixed_effects(const DesignMatrix& design);

struct HausmanResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// H = d' (V_FE - V_RE)^+ d over the coefficient names common to both fits,
// using the positive eigenvalues of the (symmetrized) difference, so H >= 0
// whether or not the difference is positive definite; dof is the count of
// positive eigenvalues. Classical covariances are used when available.
HausmanResult hausman_test(const FitResult& fe, const FitResult& re);

enum class MediationClass { None, Partial, Complete };

std::string_view mediation_class_name(MediationClass c);

struct MediationEntry {
  std::string emotion;
  double path_a = 0.0, path_a_se = 0.0, path_a_p = 1.0;      // emotion -> mediator
  double total = 0.0, total_se = 0.0, total_p = 1.0;         // outcome on emotions
  double direct = 0.0, direct_se = 0.0, direct_p = 1.0;      // outcome on emotions + mediator
  double mediator_coef = 0.0, mediator_se = 0.0, mediator_p = 1.0;
  MediationClass classification = MediationClass::None;
  // |total - direct - a*b|; exact under OLS, informational under mixed fits.
  double identity_gap = 0.0;
};

struct MediationReport {
  std::string mediator;
  std::vector<MediationEntry> entries;
  std::int64_t dropped_rows = 0;  // rows with a missing mediator value
};

// Three-step mediation over a design whose X contains the mediator column:
// (1) mediator on the remaining predictors, (2) outcome without the
// mediator, (3) outcome with it. Rows with NaN mediator are dropped
// listwise. An emotion classifies Complete when its direct coefficient is
// insignificant at 5% while the total and path-a coefficients are
// significant; Partial when total, direct, and path a are significant with
// |direct| < |total|; None otherwise.
MediationReport mediation_analysis(const DesignMatrix& design, const std::string& mediator_column,
                                   const std::vector<std::string>& emotion_columns,
                                   RandomInterceptOptions options = {});

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
};

// Welch unequal-variance t statistic with Welch-Satterthwaite degrees of
// freedom and a two-sided p-value. Raises DegenerateVariance when both
// samples are constant.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Two-sided normal-approximation p-value for a Wald ratio.
double wald_p(double coef, double se);

}  // namespace emodiff
