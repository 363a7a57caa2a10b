#include "vrg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vrg/errors.hpp"
#include "vrg/io.hpp"

namespace vrg {

namespace {

// Per-step quantities along a candidate. complement[k] = 1 - alpha_bar_k is
// carried by its own recursion so levels near 1 keep full precision.
struct StepTerms {
  std::vector<double> alpha_bar;
  std::vector<double> complement;
  std::vector<double> weight;
  std::vector<double> root_sum;  // sqrt(c_k) + sqrt(alpha_k c_{k-1})
};

StepTerms step_terms(const AlphaVector& candidate) {
  const std::size_t K = candidate.size();
  StepTerms s;
  s.alpha_bar.resize(K);
  s.complement.resize(K);
  s.weight.resize(K);
  s.root_sum.resize(K);
  double ab = 1.0;
  double comp = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double a = candidate.alpha[k];
    if (!(a > 0.0 && a < 1.0)) {
      fail(ErrorKind::domain, "objective: alpha[" + std::to_string(k + 1) + "] = " + format_double(a) +
                                  " is outside (0, 1)");
    }
    const double v = a * comp;
    ab *= a;
    comp = (1.0 - a) + v;
    if (!(ab > 0.0)) {
      fail(ErrorKind::numerical, "objective: cumulative product underflowed at step " +
                                     std::to_string(k + 1));
    }
    // (sqrt(1 - ab) - sqrt(a - ab))^2 / ab, rewritten without cancellation
    const double root_sum = std::sqrt(comp) + std::sqrt(v);
    s.alpha_bar[k] = ab;
    s.complement[k] = comp;
    s.root_sum[k] = root_sum;
    s.weight[k] = (1.0 - a) * (1.0 - a) / (root_sum * root_sum * ab);
  }
  return s;
}

void check_lengths(const AlphaVector& candidate, const Trajectory& base) {
  if (candidate.size() != base.size() || candidate.size() == 0) {
    fail(ErrorKind::invalid_argument, "objective: candidate has " + std::to_string(candidate.size()) +
                                          " steps but the base trajectory has " +
                                          std::to_string(base.size()));
  }
}

// alpha_bar*_K - alpha_bar_K as alpha_bar_K (prod alpha*_k / alpha_k - 1), which
// is exactly zero at the base. Also returns alpha_bar_K prod alpha*_k / alpha_k.
std::pair<double, double> terminal_gap(const AlphaVector& candidate, const Trajectory& base) {
  const AlphaVector base_alpha = alpha_from_alphabar(base);
  double ratio = 1.0;
  for (std::size_t k = 0; k < candidate.size(); ++k) ratio *= candidate.alpha[k] / base_alpha.alpha[k];
  const double end = base.alpha_bar.back();
  return {end * (ratio - 1.0), end * ratio};
}

}  // namespace

VrgConfig VrgConfig::for_steps(std::size_t K) {
  VrgConfig c;
  c.gamma = K <= 10 ? 0.1 : 0.01;
  return c;
}

void VrgConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail(ErrorKind::invalid_argument, "gamma must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorKind::invalid_argument, "lambda must be >= 0");
  if (!(step_size > 0.0)) fail(ErrorKind::invalid_argument, "step size must be > 0");
  if (max_iters < 1) fail(ErrorKind::invalid_argument, "max_iters must be >= 1");
  if (!(grad_tolerance > 0.0)) fail(ErrorKind::invalid_argument, "grad tolerance must be > 0");
  if (!(eps_open > 0.0 && eps_open <= 1e-3)) {
    fail(ErrorKind::invalid_argument, "eps_open must lie in (0, 1e-3]");
  }
}

ObjectiveBreakdown objective(const AlphaVector& candidate, const Trajectory& base,
                             const ErrorProfile& profile, double lambda) {
  check_lengths(candidate, base);
  const StepTerms s = step_terms(candidate);
  ObjectiveBreakdown out;
  out.per_step.resize(candidate.size());
  for (std::size_t k = 0; k < candidate.size(); ++k) {
    out.per_step[k] = s.weight[k] * profile.f_delta(s.alpha_bar[k]);
    out.cpe += out.per_step[k];
  }
  const double gap = terminal_gap(candidate, base).first;
  out.reg = lambda * gap * gap;
  out.total = out.cpe + out.reg;
  return out;
}

std::vector<double> objective_gradient(const AlphaVector& candidate, const Trajectory& base,
                                       const ErrorProfile& profile, double lambda) {
  check_lengths(candidate, base);
  const std::size_t K = candidate.size();
  const StepTerms s = step_terms(candidate);
  const auto& a = candidate.alpha;
  std::vector<double> grad(K, 0.0);

  for (std::size_t k = 0; k < K; ++k) {
    const double ab = s.alpha_bar[k];
    const double prev_ab = k == 0 ? 1.0 : s.alpha_bar[k - 1];
    const double prev_comp = k == 0 ? 0.0 : s.complement[k - 1];
    const double root_c = std::sqrt(s.complement[k]);
    const double root_v = std::sqrt(a[k] * prev_comp);
    const double f = profile.f_delta(ab);
    const double slope = profile.f_delta_slope(ab);
    const double w = s.weight[k];

    // d log w_k / d alpha_k
    {
      const double d_root_sum = -prev_ab / (2.0 * root_c) + std::sqrt(prev_comp) / (2.0 * std::sqrt(a[k]));
      const double dlog = -2.0 / (1.0 - a[k]) - 2.0 * d_root_sum / s.root_sum[k] - 1.0 / a[k];
      grad[k] += w * dlog * f + w * slope * prev_ab;
    }
    // d log w_k / d alpha_j for j < k
    for (std::size_t j = 0; j < k; ++j) {
      const double dab = ab / a[j];
      const double d_root_sum = -dab * (0.5 / root_c + 0.5 / root_v);
      const double dlog = -2.0 * d_root_sum / s.root_sum[k] - 1.0 / a[j];
      grad[j] += w * dlog * f + w * slope * dab;
    }
  }

  const auto [gap, end] = terminal_gap(candidate, base);
  for (std::size_t j = 0; j < K; ++j) grad[j] += 2.0 * lambda * gap * end / a[j];
  return grad;
}

double cumulative_prediction_error(const Trajectory& traj, const ErrorProfile& profile) {
  return objective(alpha_from_alphabar(traj), traj, profile, 0.0).cpe;
}

AlphaVector project(const AlphaVector& candidate, const AlphaVector& base_alpha, double gamma,
                    double eps_open) {
  if (candidate.size() != base_alpha.size()) fail(ErrorKind::invalid_argument, "project: length mismatch");
  AlphaVector out = candidate;
  for (std::size_t k = 0; k < candidate.size(); ++k) {
    const double lo = std::max(eps_open, base_alpha.alpha[k] - gamma);
    const double hi = std::min(1.0 - eps_open, base_alpha.alpha[k] + gamma);
    if (lo > hi) {
      fail(ErrorKind::domain, "project: empty feasible interval at step " + std::to_string(k + 1) +
                                  " (base alpha " + format_double(base_alpha.alpha[k]) +
                                  " lies within eps_open of the boundary)");
    }
    out.alpha[k] = std::clamp(candidate.alpha[k], lo, hi);
  }
  return out;
}

OptimizeResult optimize(const Trajectory& base, const ErrorProfile& profile, const VrgConfig& config) {
  config.validate();
  const AlphaVector base_alpha = alpha_from_alphabar(base);
  const std::size_t K = base_alpha.size();

  OptimizeResult result;
  AlphaVector x = project(base_alpha, base_alpha, config.gamma, config.eps_open);
  result.base_objective = objective(base_alpha, base, profile, config.lambda);
  ObjectiveBreakdown current = objective(x, base, profile, config.lambda);
  result.trace.push_back(current);
  AlphaVector best = x;
  result.best_objective = current;

  auto check_finite = [&](const ObjectiveBreakdown& o, std::size_t iter) {
    if (!std::isfinite(o.total)) {
      std::ostringstream msg;
      msg << "optimize: non-finite objective at iteration " << iter << "; trace:";
      for (std::size_t i = 0; i < result.trace.size(); ++i) msg << ' ' << format_double(result.trace[i].total);
      fail(ErrorKind::numerical, msg.str());
    }
  };
  check_finite(current, 0);

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const auto grad = objective_gradient(x, base, profile, config.lambda);
    AlphaVector stepped = x;
    for (std::size_t k = 0; k < K; ++k) stepped.alpha[k] -= config.step_size * grad[k];
    const AlphaVector next = project(stepped, base_alpha, config.gamma, config.eps_open);

    double moved = 0.0;
    for (std::size_t k = 0; k < K; ++k) moved += (next.alpha[k] - x.alpha[k]) * (next.alpha[k] - x.alpha[k]);
    if (std::sqrt(moved) / config.step_size < config.grad_tolerance) {
      result.converged = true;
      break;
    }
    x = next;
    current = objective(x, base, profile, config.lambda);
    check_finite(current, static_cast<std::size_t>(iter));
    result.trace.push_back(current);
    result.iterations = static_cast<std::size_t>(iter);
    if (current.total < result.best_objective.total) {
      best = x;
      result.best_objective = current;
      result.best_iteration = static_cast<std::size_t>(iter);
    }
  }

  result.alpha = best;
  if (best == base_alpha) {
    result.trajectory = base;
  } else {
    result.trajectory = alphabar_from_alpha(best, base.label + "-vrg", ScheduleKind::custom);
  }
  return result;
}

void save_trace(const std::filesystem::path& path, const std::vector<ObjectiveBreakdown>& trace) {
  std::ostringstream csv;
  csv << "iter,cpe,reg,total\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    csv << i << ',' << format_double(trace[i].cpe) << ',' << format_double(trace[i].reg) << ','
        << format_double(trace[i].total) << '\n';
  }
  write_text(path, csv.str());
}

nlohmann::json config_to_json(const VrgConfig& c) {
  return {{"gamma", c.gamma},           {"lambda", c.lambda},
          {"step_size", c.step_size},   {"max_iters", c.max_iters},
          {"grad_tolerance", c.grad_tolerance}, {"eps_open", c.eps_open}};
}

}  // namespace vrg
