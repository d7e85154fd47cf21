#include "emodiff/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emodiff/errors.hpp"
#include "emodiff/prob.hpp"
#include "emodiff/text_table.hpp"

namespace emodiff {

namespace {

using nlohmann::json;

constexpr double kLambdaTol = 1e-8;

struct Groups {
  std::vector<std::string> labels;           // first-appearance order
  std::vector<int> id;                       // per row
  std::vector<std::vector<Eigen::Index>> rows;
};

Groups group_rows(const std::vector<std::string>& group) {
  Groups g;
  std::unordered_map<std::string, int> index;
  g.id.reserve(group.size());
  for (std::size_t r = 0; r < group.size(); ++r) {
    auto [it, inserted] = index.emplace(group[r], static_cast<int>(g.labels.size()));
    if (inserted) {
      g.labels.push_back(group[r]);
      g.rows.emplace_back();
    }
    g.id.push_back(it->second);
    g.rows[static_cast<std::size_t>(it->second)].push_back(static_cast<Eigen::Index>(r));
  }
  return g;
}

struct Assembled {
  Eigen::MatrixXd W;  // [intercept | X | Z_pub]
  std::vector<std::string> names;
};

Assembled assemble(const DesignMatrix& d) {
  const Eigen::Index n = d.y.size();
  const Eigen::Index p = 1 + d.X.cols() + d.Z_pub.cols();
  Assembled a;
  a.W.resize(n, p);
  a.W.col(0).setOnes();
  a.names.push_back("(Intercept)");
  if (d.X.cols() > 0) a.W.middleCols(1, d.X.cols()) = d.X;
  for (const auto& name : d.x_names) a.names.push_back(name);
  if (d.Z_pub.cols() > 0) a.W.rightCols(d.Z_pub.cols()) = d.Z_pub;
  for (const auto& name : d.z_names) a.names.push_back(name);
  return a;
}

// Raises Collinear naming the columns beyond the numerical rank.
void check_rank(const Eigen::MatrixXd& W, const std::vector<std::string>& names,
                const std::string& what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
  const Eigen::Index rank = qr.rank();
  if (rank == W.cols()) return;
  const auto& perm = qr.colsPermutation().indices();
  std::string msg = what + ": rank-deficient design; dependent columns:";
  for (Eigen::Index i = rank; i < W.cols(); ++i)
    msg += " '" + names.at(static_cast<std::size_t>(perm[i])) + "'";
  throw Collinear(msg);
}

// Per-group sufficient statistics for the profiled random-intercept
// likelihood: with V0 = I + lambda * 1 1', every quantity below reduces the
// GLS pieces to O(p^2) work per group for any lambda.
struct ProfileContext {
  std::vector<Eigen::MatrixXd> A;  // W_i' W_i
  std::vector<Eigen::VectorXd> b;  // W_i' y_i
  std::vector<Eigen::VectorXd> s;  // W_i' 1
  std::vector<double> t;           // 1' y_i
  std::vector<double> yy;          // y_i' y_i
  std::vector<double> n;           // group sizes
  Eigen::Index N = 0;
  Eigen::Index p = 0;
};

ProfileContext build_context(const Eigen::MatrixXd& W, const Eigen::VectorXd& y,
                             const Groups& groups) {
  ProfileContext ctx;
  ctx.N = W.rows();
  ctx.p = W.cols();
  const std::size_t G = groups.labels.size();
  ctx.A.resize(G);
  ctx.b.resize(G);
  ctx.s.resize(G);
  ctx.t.resize(G);
  ctx.yy.resize(G);
  ctx.n.resize(G);
  for (std::size_t g = 0; g < G; ++g) {
    const auto& rows = groups.rows[g];
    Eigen::MatrixXd Wg(static_cast<Eigen::Index>(rows.size()), ctx.p);
    Eigen::VectorXd yg(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Wg.row(static_cast<Eigen::Index>(i)) = W.row(rows[i]);
      yg[static_cast<Eigen::Index>(i)] = y[rows[i]];
    }
    ctx.A[g] = Wg.transpose() * Wg;
    ctx.b[g] = Wg.transpose() * yg;
    ctx.s[g] = Wg.colwise().sum().transpose();
    ctx.t[g] = yg.sum();
    ctx.yy[g] = yg.squaredNorm();
    ctx.n[g] = static_cast<double>(rows.size());
  }
  return ctx;
}

struct ProfileEval {
  Eigen::VectorXd beta;
  Eigen::MatrixXd xtvix;
  double Q = 0.0;
  double logdet_v0 = 0.0;
  double sigma2 = 0.0;
  double loglik = -std::numeric_limits<double>::infinity();
};

ProfileEval profile_eval(const ProfileContext& ctx, FitMethod method, double lambda) {
  const std::size_t G = ctx.A.size();
  Eigen::MatrixXd xtvix = Eigen::MatrixXd::Zero(ctx.p, ctx.p);
  Eigen::VectorXd xtviy = Eigen::VectorXd::Zero(ctx.p);
  double ytviy = 0.0;
  double logdet_v0 = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    const double w = lambda / (1.0 + lambda * ctx.n[g]);
    xtvix.noalias() += ctx.A[g] - w * (ctx.s[g] * ctx.s[g].transpose());
    xtviy.noalias() += ctx.b[g] - (w * ctx.t[g]) * ctx.s[g];
    ytviy += ctx.yy[g] - w * ctx.t[g] * ctx.t[g];
    logdet_v0 += std::log1p(lambda * ctx.n[g]);
  }

  ProfileEval ev;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtvix);
  ev.beta = ldlt.solve(xtviy);
  ev.xtvix = std::move(xtvix);
  ev.Q = ytviy - ev.beta.dot(xtviy);
  ev.logdet_v0 = logdet_v0;

  const double N = static_cast<double>(ctx.N);
  const double p = static_cast<double>(ctx.p);
  if (!(ev.Q > 0.0) || !std::isfinite(ev.Q)) return ev;  // loglik stays -inf
  constexpr double kLog2Pi = 1.8378770664093453;
  if (method == FitMethod::ML) {
    ev.sigma2 = ev.Q / N;
    ev.loglik = -0.5 * (N * (kLog2Pi + std::log(ev.sigma2)) + logdet_v0 + N);
  } else {
    if (N - p <= 0.0) throw InvalidInput("restricted likelihood needs more rows than columns");
    ev.sigma2 = ev.Q / (N - p);
    double logdet_x = 0.0;
    for (Eigen::Index i = 0; i < ctx.p; ++i) logdet_x += std::log(ldlt.vectorD()[i]);
    ev.loglik = -0.5 * ((N - p) * (kLog2Pi + std::log(ev.sigma2)) + logdet_v0 + logdet_x + (N - p));
  }
  return ev;
}

double profile_score_impl(const ProfileContext& ctx, FitMethod method, double lambda) {
  ProfileEval ev = profile_eval(ctx, method, lambda);
  const std::size_t G = ctx.A.size();
  double sum_res = 0.0;     // sum of squared residual group sums, shrunk
  double dlogdet_v0 = 0.0;  // d/d lambda of log|V0|
  Eigen::MatrixXd A_acc = Eigen::MatrixXd::Zero(ctx.p, ctx.p);
  for (std::size_t g = 0; g < G; ++g) {
    const double denom = 1.0 + lambda * ctx.n[g];
    const double sr = ctx.t[g] - ctx.s[g].dot(ev.beta);
    sum_res += (sr * sr) / (denom * denom);
    dlogdet_v0 += ctx.n[g] / denom;
    if (method == FitMethod::REML)
      A_acc.noalias() += (ctx.s[g] * ctx.s[g].transpose()) / (denom * denom);
  }
  const double N = static_cast<double>(ctx.N);
  const double p = static_cast<double>(ctx.p);
  if (method == FitMethod::ML) return 0.5 * ((N / ev.Q) * sum_res - dlogdet_v0);
  // The envelope theorem removes the dependence through beta; the extra
  // term is the derivative of -log|X' V0^-1 X|.
  double trace = ev.xtvix.ldlt().solve(A_acc).trace();
  return 0.5 * (((N - p) / ev.Q) * sum_res - dlogdet_v0 + trace);
}

double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 300 && (b - a) > tol; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double optimize_lambda(const ProfileContext& ctx, FitMethod method) {
  auto f = [&](double lam) { return profile_eval(ctx, method, lam).loglik; };

  std::vector<double> grid = {0.0};
  for (double e = -8.0; e <= 6.0 + 1e-9; e += 0.25) grid.push_back(std::pow(10.0, e));

  std::size_t best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> lls(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    lls[i] = f(grid[i]);
    if (lls[i] > best_ll) {
      best_ll = lls[i];
      best = i;
    }
  }
  if (!std::isfinite(best_ll)) {
    std::ostringstream trace;
    trace << "profiled likelihood non-finite on the whole grid; ll(0)=" << lls[0];
    throw NoConvergence(trace.str());
  }

  double hi = grid[std::min(best + 1, grid.size() - 1)];
  if (best == grid.size() - 1) {
    // Best at the top of the grid: extend until the likelihood turns over.
    double cur = grid[best];
    double cur_ll = best_ll;
    while (cur < 1e12) {
      double next = cur * 10.0;
      double next_ll = f(next);
      if (!(next_ll > cur_ll)) break;
      cur = next;
      cur_ll = next_ll;
    }
    hi = cur * 10.0;
  }
  const double lo = best == 0 ? 0.0 : grid[best - 1];
  return golden_max(f, lo, hi, kLambdaTol);
}

FitResult finish_random_intercept(const ProfileContext& ctx, const Assembled& a,
                                  const Groups& groups, FitMethod method, double lambda) {
  ProfileEval ev = profile_eval(ctx, method, lambda);
  if (!std::isfinite(ev.loglik)) {
    std::ostringstream trace;
    trace << "profiled likelihood non-finite at lambda=" << lambda << " (Q=" << ev.Q << ")";
    throw NoConvergence(trace.str());
  }
  FitResult r;
  r.method = method;
  r.names = a.names;
  r.coef = ev.beta;
  r.vcov = ev.sigma2 * ev.xtvix.ldlt().solve(Eigen::MatrixXd::Identity(ctx.p, ctx.p));
  r.vcov = 0.5 * (r.vcov + r.vcov.transpose());
  r.vcov_classical = r.vcov;
  r.se = r.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.sigma_eps = std::sqrt(ev.sigma2);
  r.sigma_mu = std::sqrt(lambda * ev.sigma2);
  r.lambda = lambda;
  r.loglik = ev.loglik;
  r.n_obs = ctx.N;
  r.n_groups = static_cast<std::int64_t>(groups.labels.size());
  return r;
}

}  // namespace

void DesignMatrix::validate() const {
  const Eigen::Index n = y.size();
  if (X.rows() != n) throw InvalidInput("design: X row count does not match y");
  if (static_cast<Eigen::Index>(group.size()) != n)
    throw InvalidInput("design: group labels do not match y");
  if (Z_pub.cols() > 0 && Z_pub.rows() != n)
    throw InvalidInput("design: Z_pub row count does not match y");
  if (static_cast<Eigen::Index>(x_names.size()) != X.cols())
    throw InvalidInput("design: x_names width does not match X");
  if (static_cast<Eigen::Index>(z_names.size()) != Z_pub.cols())
    throw InvalidInput("design: z_names width does not match Z_pub");
  if (!y.allFinite()) throw InvalidInput("design: y has missing or non-finite values");
  if (X.size() > 0 && !X.allFinite())
    throw InvalidInput("design: X has missing or non-finite values");
  if (Z_pub.size() > 0 && !Z_pub.allFinite())
    throw InvalidInput("design: Z_pub has missing or non-finite values");

  if (Z_pub.cols() > 0) {
    std::unordered_map<std::string, Eigen::Index> first;
    for (Eigen::Index r = 0; r < n; ++r) {
      auto [it, inserted] = first.emplace(group[static_cast<std::size_t>(r)], r);
      if (inserted) continue;
      for (Eigen::Index c = 0; c < Z_pub.cols(); ++c) {
        double v0 = Z_pub(it->second, c);
        if (std::abs(Z_pub(r, c) - v0) > 1e-9 * (1.0 + std::abs(v0)))
          throw InvalidInput("design: publisher column '" +
                             z_names[static_cast<std::size_t>(c)] +
                             "' varies within group '" + group[static_cast<std::size_t>(r)] + "'");
      }
    }
  }
}

double profile_loglik(const DesignMatrix& design, FitMethod method, double lambda) {
  design.validate();
  Groups groups = group_rows(design.group);
  Assembled a = assemble(design);
  ProfileContext ctx = build_context(a.W, design.y, groups);
  return profile_eval(ctx, method, lambda).loglik;
}

double profile_score(const DesignMatrix& design, FitMethod method, double lambda) {
  design.validate();
  Groups groups = group_rows(design.group);
  Assembled a = assemble(design);
  ProfileContext ctx = build_context(a.W, design.y, groups);
  return profile_score_impl(ctx, method, lambda);
}

FitResult fit_random_intercept(const DesignMatrix& design, RandomInterceptOptions options) {
  if (options.method == FitMethod::FE)
    throw InvalidInput("fit_random_intercept: method must be ML or REML");
  design.validate();
  Groups groups = group_rows(design.group);
  if (groups.labels.size() < 2)
    throw TooFewGroups("random-intercept fit needs at least 2 groups");
  bool any_multi = false;
  for (const auto& rows : groups.rows)
    if (rows.size() >= 2) any_multi = true;
  if (!any_multi)
    throw TooFewGroups("random-intercept fit needs a group with at least 2 rows");

  Assembled a = assemble(design);
  check_rank(a.W, a.names, "fit_random_intercept");
  ProfileContext ctx = build_context(a.W, design.y, groups);

  double lambda;
  if (options.fixed_lambda) {
    lambda = *options.fixed_lambda;
    if (!(lambda >= 0.0)) throw InvalidInput("fixed lambda must be >= 0");
  } else {
    lambda = optimize_lambda(ctx, options.method);
  }
  return finish_random_intercept(ctx, a, groups, options.method, lambda);
}

FitResult fit_random_slopes(const DesignMatrix& design,
                            const std::vector<std::string>& slope_columns,
                            int max_iterations, double tol) {
  design.validate();
  if (slope_columns.empty())
    throw InvalidInput("fit_random_slopes: need at least one slope column");
  Groups groups = group_rows(design.group);
  const std::size_t G = groups.labels.size();
  if (G < 2) throw TooFewGroups("random-slope fit needs at least 2 groups");

  Assembled a = assemble(design);
  check_rank(a.W, a.names, "fit_random_slopes");

  // Random-effect design: intercept plus the named X columns.
  std::vector<Eigen::Index> slope_idx;
  for (const auto& name : slope_columns) {
    auto it = std::find(design.x_names.begin(), design.x_names.end(), name);
    if (it == design.x_names.end())
      throw InvalidInput("slope column '" + name + "' is not an X column");
    slope_idx.push_back(static_cast<Eigen::Index>(it - design.x_names.begin()));
  }
  const Eigen::Index q = 1 + static_cast<Eigen::Index>(slope_idx.size());
  const Eigen::Index p = a.W.cols();
  const Eigen::Index N = a.W.rows();

  FitResult r;
  r.re_names.push_back("(Intercept)");
  for (const auto& name : slope_columns) r.re_names.push_back(name);

  std::vector<Eigen::MatrixXd> Wg(G), Zg(G);
  std::vector<Eigen::VectorXd> yg(G);
  for (std::size_t g = 0; g < G; ++g) {
    const auto& rows = groups.rows[g];
    const Eigen::Index ng = static_cast<Eigen::Index>(rows.size());
    if (ng < 2 + static_cast<Eigen::Index>(slope_idx.size()))
      r.small_groups.push_back(groups.labels[g]);
    Wg[g].resize(ng, p);
    Zg[g].resize(ng, q);
    yg[g].resize(ng);
    for (Eigen::Index i = 0; i < ng; ++i) {
      Wg[g].row(i) = a.W.row(rows[static_cast<std::size_t>(i)]);
      Zg[g](i, 0) = 1.0;
      for (std::size_t s = 0; s < slope_idx.size(); ++s)
        Zg[g](i, 1 + static_cast<Eigen::Index>(s)) =
            design.X(rows[static_cast<std::size_t>(i)], slope_idx[s]);
      yg[g][i] = design.y[rows[static_cast<std::size_t>(i)]];
    }
  }

  Eigen::MatrixXd WtW = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd Wty = Eigen::VectorXd::Zero(p);
  for (std::size_t g = 0; g < G; ++g) {
    WtW.noalias() += Wg[g].transpose() * Wg[g];
    Wty.noalias() += Wg[g].transpose() * yg[g];
  }
  Eigen::LDLT<Eigen::MatrixXd> wtw_ldlt(WtW);

  // Start from OLS with a modest random-effect covariance.
  Eigen::VectorXd beta = wtw_ldlt.solve(Wty);
  double sse = 0.0;
  for (std::size_t g = 0; g < G; ++g) sse += (yg[g] - Wg[g] * beta).squaredNorm();
  double sigma2 = sse / static_cast<double>(N);
  Eigen::MatrixXd Sigma = Eigen::MatrixXd::Identity(q, q) * (0.25 * sigma2);

  std::vector<Eigen::MatrixXd> C(G);
  std::vector<Eigen::VectorXd> m(G);
  double prev_ll = -std::numeric_limits<double>::infinity();
  double ll = prev_ll;
  bool converged = false;
  int iter = 0;

  for (iter = 1; iter <= max_iterations; ++iter) {
    Eigen::LDLT<Eigen::MatrixXd> sig_ldlt(Sigma);
    Eigen::MatrixXd Sigma_inv = sig_ldlt.solve(Eigen::MatrixXd::Identity(q, q));
    double logdet_sigma = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) logdet_sigma += std::log(sig_ldlt.vectorD()[i]);

    // E-step: posterior mean and covariance of each group's effects; the
    // marginal log-likelihood at the current parameters comes for free.
    ll = 0.0;
    constexpr double kLog2Pi = 1.8378770664093453;
    for (std::size_t g = 0; g < G; ++g) {
      const Eigen::Index ng = yg[g].size();
      Eigen::MatrixXd M = Zg[g].transpose() * Zg[g] / sigma2 + Sigma_inv;
      Eigen::LDLT<Eigen::MatrixXd> m_ldlt(M);
      C[g] = m_ldlt.solve(Eigen::MatrixXd::Identity(q, q));
      Eigen::VectorXd resid = yg[g] - Wg[g] * beta;
      Eigen::VectorXd u = Zg[g].transpose() * resid;
      m[g] = C[g] * u / sigma2;

      double logdet_M = 0.0;
      for (Eigen::Index i = 0; i < q; ++i) logdet_M += std::log(m_ldlt.vectorD()[i]);
      // log|V| = n log sigma2 + log|M| + log|Sigma|; quad via Woodbury.
      double logdet_v = static_cast<double>(ng) * std::log(sigma2) + logdet_M + logdet_sigma;
      double quad = (resid.squaredNorm() - u.dot(C[g] * u) / sigma2) / sigma2;
      ll += -0.5 * (static_cast<double>(ng) * kLog2Pi + logdet_v + quad);
    }

    if (std::isfinite(prev_ll) && std::abs(ll - prev_ll) < tol) {
      converged = true;
      break;
    }
    prev_ll = ll;

    // M-step.
    Eigen::MatrixXd Sigma_new = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (std::size_t g = 0; g < G; ++g) {
      Sigma_new.noalias() += m[g] * m[g].transpose() + C[g];
      rhs.noalias() += Wg[g].transpose() * (yg[g] - Zg[g] * m[g]);
    }
    Sigma = Sigma_new / static_cast<double>(G);
    beta = wtw_ldlt.solve(rhs);
    double acc = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      acc += (yg[g] - Wg[g] * beta - Zg[g] * m[g]).squaredNorm();
      acc += (Zg[g] * C[g]).cwiseProduct(Zg[g]).sum();
    }
    sigma2 = acc / static_cast<double>(N);
  }

  if (!converged) {
    std::ostringstream trace;
    trace << "EM did not converge in " << max_iterations
          << " iterations; last log-likelihood " << ll << ", previous " << prev_ll;
    throw NoConvergence(trace.str());
  }

  // GLS covariance of the fixed effects at the converged parameters.
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t g = 0; g < G; ++g) {
    Eigen::MatrixXd ZtW = Zg[g].transpose() * Wg[g];
    info.noalias() +=
        (Wg[g].transpose() * Wg[g] - ZtW.transpose() * C[g] * ZtW / sigma2) / sigma2;
  }

  r.method = FitMethod::ML;
  r.names = a.names;
  r.coef = beta;
  r.vcov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  r.vcov = 0.5 * (r.vcov + r.vcov.transpose());
  r.vcov_classical = r.vcov;
  r.se = r.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.sigma_eps = std::sqrt(sigma2);
  r.re_sd = Sigma.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.sigma_mu = r.re_sd[0];
  r.lambda = sigma2 > 0.0 ? (r.sigma_mu * r.sigma_mu) / sigma2 : 0.0;
  r.re_corr.resize(q, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < q; ++j) {
      double denom = r.re_sd[i] * r.re_sd[j];
      r.re_corr(i, j) = i == j ? 1.0 : (denom > 0.0 ? Sigma(i, j) / denom : 0.0);
    }
  r.loglik = ll;
  r.n_obs = N;
  r.n_groups = static_cast<std::int64_t>(G);
  r.iterations = iter;
  return r;
}

FitResult fit_fixed_effects(const DesignMatrix& design) {
  design.validate();
  Groups groups = group_rows(design.group);
  const std::size_t G = groups.labels.size();
  if (G < 2) throw TooFewGroups("fixed-effects fit needs at least 2 groups");
  const Eigen::Index N = design.y.size();

  // Candidate columns: X then Z_pub; group-constant ones are absorbed by
  // the group intercepts.
  Eigen::MatrixXd all(N, design.X.cols() + design.Z_pub.cols());
  std::vector<std::string> all_names;
  if (design.X.cols() > 0) all.leftCols(design.X.cols()) = design.X;
  for (const auto& n : design.x_names) all_names.push_back(n);
  if (design.Z_pub.cols() > 0) all.rightCols(design.Z_pub.cols()) = design.Z_pub;
  for (const auto& n : design.z_names) all_names.push_back(n);
  if (all.cols() == 0) throw InvalidInput("fixed-effects fit needs predictors");

  // Group means for every column and for y.
  Eigen::MatrixXd col_means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(G), all.cols());
  Eigen::VectorXd y_means = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(G));
  for (std::size_t g = 0; g < G; ++g) {
    for (Eigen::Index r : groups.rows[g]) {
      col_means.row(static_cast<Eigen::Index>(g)) += all.row(r);
      y_means[static_cast<Eigen::Index>(g)] += design.y[r];
    }
    col_means.row(static_cast<Eigen::Index>(g)) /= static_cast<double>(groups.rows[g].size());
    y_means[static_cast<Eigen::Index>(g)] /= static_cast<double>(groups.rows[g].size());
  }

  FitResult r;
  r.method = FitMethod::FE;
  std::vector<Eigen::Index> retained;
  for (Eigen::Index c = 0; c < all.cols(); ++c) {
    double wss = 0.0;
    for (Eigen::Index row = 0; row < N; ++row) {
      double d = all(row, c) - col_means(groups.id[static_cast<std::size_t>(row)], c);
      wss += d * d;
    }
    if (wss <= 1e-12 * (1.0 + all.col(c).squaredNorm()))
      r.absorbed.push_back(all_names[static_cast<std::size_t>(c)]);
    else
      retained.push_back(c);
  }
  if (retained.empty())
    throw Collinear("every predictor is constant within groups; nothing to estimate");

  const Eigen::Index k = static_cast<Eigen::Index>(retained.size());
  Eigen::MatrixXd Xw(N, k);
  Eigen::VectorXd yw(N);
  for (Eigen::Index row = 0; row < N; ++row) {
    const int g = groups.id[static_cast<std::size_t>(row)];
    for (Eigen::Index j = 0; j < k; ++j)
      Xw(row, j) = all(row, retained[static_cast<std::size_t>(j)]) -
                   col_means(g, retained[static_cast<std::size_t>(j)]);
    yw[row] = design.y[row] - y_means[g];
  }
  std::vector<std::string> names;
  for (Eigen::Index j : retained) names.push_back(all_names[static_cast<std::size_t>(j)]);
  check_rank(Xw, names, "fit_fixed_effects");

  Eigen::MatrixXd XtX = Xw.transpose() * Xw;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(XtX);
  Eigen::VectorXd beta = ldlt.solve(Xw.transpose() * yw);
  Eigen::VectorXd resid = yw - Xw * beta;

  const double dof = static_cast<double>(N) - static_cast<double>(G) - static_cast<double>(k);
  if (dof <= 0.0) throw InvalidInput("fixed-effects fit has no residual degrees of freedom");
  const double rss = resid.squaredNorm();
  const double sigma2 = rss / dof;
  Eigen::MatrixXd bread = ldlt.solve(Eigen::MatrixXd::Identity(k, k));

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t g = 0; g < G; ++g) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(k);
    for (Eigen::Index row : groups.rows[g]) u += Xw.row(row).transpose() * resid[row];
    meat.noalias() += u * u.transpose();
  }
  const double n_d = static_cast<double>(N);
  const double g_d = static_cast<double>(G);
  const double k_total = static_cast<double>(k) + g_d;  // predictors + group intercepts
  if (n_d - k_total <= 0.0)
    throw InvalidInput("fixed-effects fit has no degrees of freedom for clustered errors");
  const double factor = (g_d / (g_d - 1.0)) * ((n_d - 1.0) / (n_d - k_total));

  r.names = std::move(names);
  r.coef = beta;
  r.vcov = factor * (bread * meat * bread);
  r.vcov = 0.5 * (r.vcov + r.vcov.transpose());
  r.vcov_classical = sigma2 * bread;
  r.se = r.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.sigma_eps = std::sqrt(sigma2);
  // Profile Gaussian log-likelihood of the equivalent dummy regression.
  constexpr double kLog2Pi = 1.8378770664093453;
  r.loglik = -0.5 * n_d * (kLog2Pi + std::log(rss / n_d) + 1.0);
  r.n_obs = N;
  r.n_groups = static_cast<std::int64_t>(G);
  return r;
}

HausmanResult hausman_test(const FitResult& fe, const FitResult& re) {
  std::vector<std::string> common;
  std::vector<Eigen::Index> fe_idx, re_idx;
  for (std::size_t i = 0; i < fe.names.size(); ++i) {
    if (fe.names[i] == "(Intercept)") continue;
    auto it = std::find(re.names.begin(), re.names.end(), fe.names[i]);
    if (it == re.names.end()) continue;
    common.push_back(fe.names[i]);
    fe_idx.push_back(static_cast<Eigen::Index>(i));
    re_idx.push_back(static_cast<Eigen::Index>(it - re.names.begin()));
  }
  if (common.empty())
    throw InvalidInput("hausman_test: the fits share no comparable coefficients");

  const Eigen::Index k = static_cast<Eigen::Index>(common.size());
  Eigen::VectorXd d(k);
  Eigen::MatrixXd delta(k, k);
  const Eigen::MatrixXd& vf = fe.vcov_classical.size() > 0 ? fe.vcov_classical : fe.vcov;
  const Eigen::MatrixXd& vr = re.vcov_classical.size() > 0 ? re.vcov_classical : re.vcov;
  for (Eigen::Index i = 0; i < k; ++i) {
    d[i] = fe.coef[fe_idx[static_cast<std::size_t>(i)]] -
           re.coef[re_idx[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = 0; j < k; ++j)
      delta(i, j) = vf(fe_idx[static_cast<std::size_t>(i)], fe_idx[static_cast<std::size_t>(j)]) -
                    vr(re_idx[static_cast<std::size_t>(i)], re_idx[static_cast<std::size_t>(j)]);
  }
  delta = 0.5 * (delta + delta.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(delta);
  const double tol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  HausmanResult h;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double ev = es.eigenvalues()[i];
    if (ev <= tol) continue;
    const double proj = es.eigenvectors().col(i).dot(d);
    h.statistic += proj * proj / ev;
    ++h.dof;
  }
  h.p_value = h.dof > 0 ? chi2_sf(h.statistic, static_cast<double>(h.dof)) : 1.0;
  return h;
}

std::string_view mediation_class_name(MediationClass c) {
  switch (c) {
    case MediationClass::None: return "none";
    case MediationClass::Partial: return "partial";
    case MediationClass::Complete: return "complete";
  }
  throw InvalidInput("unknown mediation class");
}

namespace {

struct CoefView {
  double coef;
  double se;
  double p;
};

CoefView coef_of(const FitResult& fit, const std::string& name) {
  auto it = std::find(fit.names.begin(), fit.names.end(), name);
  if (it == fit.names.end())
    throw InvalidInput("coefficient '" + name + "' missing from fit");
  auto i = static_cast<Eigen::Index>(it - fit.names.begin());
  return {fit.coef[i], fit.se[i], wald_p(fit.coef[i], fit.se[i])};
}

}  // namespace

MediationReport mediation_analysis(const DesignMatrix& design, const std::string& mediator_column,
                                   const std::vector<std::string>& emotion_columns,
                                   RandomInterceptOptions options) {
  auto med_it = std::find(design.x_names.begin(), design.x_names.end(), mediator_column);
  if (med_it == design.x_names.end())
    throw InvalidInput("mediator column '" + mediator_column + "' is not an X column");
  const Eigen::Index med = static_cast<Eigen::Index>(med_it - design.x_names.begin());
  for (const auto& e : emotion_columns) {
    if (e == mediator_column)
      throw InvalidInput("emotion column '" + e + "' equals the mediator");
    if (std::find(design.x_names.begin(), design.x_names.end(), e) == design.x_names.end())
      throw InvalidInput("emotion column '" + e + "' is not an X column");
  }

  // Listwise deletion on the mediator; other columns must be complete.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < design.y.size(); ++r)
    if (std::isfinite(design.X(r, med))) keep.push_back(r);
  MediationReport report;
  report.mediator = mediator_column;
  report.dropped_rows = design.y.size() - static_cast<Eigen::Index>(keep.size());
  if (keep.empty()) throw InvalidInput("every row is missing the mediator");

  const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
  DesignMatrix full;
  full.x_names = design.x_names;
  full.z_names = design.z_names;
  full.y.resize(n);
  full.X.resize(n, design.X.cols());
  full.Z_pub.resize(n, design.Z_pub.cols());
  full.group.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    full.y[i] = design.y[keep[static_cast<std::size_t>(i)]];
    full.X.row(i) = design.X.row(keep[static_cast<std::size_t>(i)]);
    if (design.Z_pub.cols() > 0)
      full.Z_pub.row(i) = design.Z_pub.row(keep[static_cast<std::size_t>(i)]);
    full.group.push_back(design.group[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])]);
  }

  DesignMatrix base = full;  // X without the mediator column
  base.X.resize(n, full.X.cols() - 1);
  base.x_names.clear();
  Eigen::Index out = 0;
  for (Eigen::Index c = 0; c < full.X.cols(); ++c) {
    if (c == med) continue;
    base.X.col(out++) = full.X.col(c);
    base.x_names.push_back(full.x_names[static_cast<std::size_t>(c)]);
  }

  DesignMatrix med_design = base;  // mediator regressed on the rest
  med_design.y = full.X.col(med);

  FitResult step1 = fit_random_intercept(med_design, options);
  FitResult step2 = fit_random_intercept(base, options);
  FitResult step3 = fit_random_intercept(full, options);
  CoefView b = coef_of(step3, mediator_column);

  for (const auto& emotion : emotion_columns) {
    MediationEntry e;
    e.emotion = emotion;
    CoefView a = coef_of(step1, emotion);
    CoefView total = coef_of(step2, emotion);
    CoefView direct = coef_of(step3, emotion);
    e.path_a = a.coef;
    e.path_a_se = a.se;
    e.path_a_p = a.p;
    e.total = total.coef;
    e.total_se = total.se;
    e.total_p = total.p;
    e.direct = direct.coef;
    e.direct_se = direct.se;
    e.direct_p = direct.p;
    e.mediator_coef = b.coef;
    e.mediator_se = b.se;
    e.mediator_p = b.p;

    const bool sig_a = a.p < 0.05;
    const bool sig_total = total.p < 0.05;
    const bool sig_direct = direct.p < 0.05;
    if (sig_a && sig_total && !sig_direct)
      e.classification = MediationClass::Complete;
    else if (sig_a && sig_total && sig_direct && std::abs(direct.coef) < std::abs(total.coef))
      e.classification = MediationClass::Partial;
    else
      e.classification = MediationClass::None;

    e.identity_gap = std::abs(e.total - (e.direct + e.path_a * e.mediator_coef));
    report.entries.push_back(std::move(e));
  }
  return report;
}

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw InvalidInput("welch_t_test: each sample needs at least 2 values");
  auto stats = [](const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair<double, double>{mean, ss / (n - 1.0)};
  };
  auto [ma, va] = stats(a);
  auto [mb, vb] = stats(b);
  if (va == 0.0 && vb == 0.0)
    throw DegenerateVariance("welch_t_test: both samples have zero variance");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  TTestResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  r.dof = se2 * se2 /
          ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  r.p = student_t_two_sided_p(r.t, r.dof);
  return r;
}

double wald_p(double coef, double se) {
  if (!(se > 0.0)) return 1.0;
  return norm_two_sided_p(coef / se);
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInput("expected a matrix (array of arrays)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

std::string method_name(FitMethod m) {
  switch (m) {
    case FitMethod::ML: return "ML";
    case FitMethod::REML: return "REML";
    case FitMethod::FE: return "FE";
  }
  throw InvalidInput("unknown fit method");
}

FitMethod method_from_name(const std::string& s) {
  if (s == "ML") return FitMethod::ML;
  if (s == "REML") return FitMethod::REML;
  if (s == "FE") return FitMethod::FE;
  throw InvalidInput("unknown fit method '" + s + "'");
}

}  // namespace

void FitResult::save(const std::filesystem::path& path) const {
  json j{{"method", method_name(method)},
         {"names", names},
         {"coef", vector_to_json(coef)},
         {"se", vector_to_json(se)},
         {"vcov", matrix_to_json(vcov)},
         {"vcov_classical", matrix_to_json(vcov_classical)},
         {"sigma_mu", sigma_mu},
         {"sigma_eps", sigma_eps},
         {"lambda", lambda},
         {"loglik", loglik},
         {"re_sd", vector_to_json(re_sd)},
         {"re_corr", matrix_to_json(re_corr)},
         {"re_names", re_names},
         {"n_obs", n_obs},
         {"n_groups", n_groups},
         {"absorbed", absorbed},
         {"small_groups", small_groups},
         {"iterations", iterations}};
  write_text_file(path, j.dump(2) + "\n");
}

FitResult FitResult::load(const std::filesystem::path& path) {
  json j = json::parse(read_text_file(path));
  FitResult r;
  r.method = method_from_name(j.at("method").get<std::string>());
  r.names = j.at("names").get<std::vector<std::string>>();
  r.coef = vector_from_json(j.at("coef"));
  r.se = vector_from_json(j.at("se"));
  r.vcov = matrix_from_json(j.at("vcov"));
  r.vcov_classical = matrix_from_json(j.at("vcov_classical"));
  r.sigma_mu = j.at("sigma_mu").get<double>();
  r.sigma_eps = j.at("sigma_eps").get<double>();
  r.lambda = j.at("lambda").get<double>();
  r.loglik = j.at("loglik").get<double>();
  r.re_sd = vector_from_json(j.at("re_sd"));
  r.re_corr = matrix_from_json(j.at("re_corr"));
  r.re_names = j.at("re_names").get<std::vector<std::string>>();
  r.n_obs = j.at("n_obs").get<std::int64_t>();
  r.n_groups = j.at("n_groups").get<std::int64_t>();
  r.absorbed = j.at("absorbed").get<std::vector<std::string>>();
  r.small_groups = j.at("small_groups").get<std::vector<std::string>>();
  r.iterations = j.at("iterations").get<int>();
  return r;
}

}  // namespace emodiff
