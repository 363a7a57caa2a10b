#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "vrg/data.hpp"
#include "vrg/denoiser.hpp"
#include "vrg/errors.hpp"
#include "vrg/eval.hpp"
#include "vrg/io.hpp"
#include "vrg/mlp.hpp"
#include "vrg/optimizer.hpp"
#include "vrg/profiler.hpp"
#include "vrg/rng.hpp"
#include "vrg/sampler.hpp"
#include "vrg/schedule.hpp"
#include "vrg/trajectory.hpp"

#ifndef VRG_VERSION
#define VRG_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  unexpected internal error\n"
    "  2  invalid_argument: bad flag value or flag combination\n"
    "  3  domain_error: value outside a function's domain\n"
    "  4  invalid_trajectory: trajectory is not strictly decreasing in (0, 1)\n"
    "  5  schema_error: input or config file does not match its schema\n"
    "  6  numerical_error: non-finite value during computation\n"
    "  7  io_error: file missing, unreadable or unwritable\n"
    "On failure a JSON object {\"error\": {...}} is written to stderr.";

// Flat JSON object of option names (without dashes) to values for the
// selected subcommand. Arrays map to multi-value options.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json out = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        out[name] = opt->results().size() == 1 ? json(opt->results().front()) : json(opt->results());
      } else if (default_also && !opt->get_default_str().empty()) {
        out[name] = opt->get_default_str();
      }
    }
    return out.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config must be a JSON object");
    const auto selected = root_->get_subcommands();
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      if (!selected.empty()) item.parents.push_back(selected.front()->get_name());
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return vrg::format_double(v.get<double>());
    if (v.is_boolean() || v.is_number()) return v.dump();
    throw CLI::ConfigError("config values must be scalars or arrays of scalars");
  }

  const CLI::App* root_;
};

struct ScheduleOptions {
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  void add(CLI::App* app) {
    app->add_option("--T", T, "Diffusion length of the linear beta schedule")->check(CLI::PositiveNumber);
    app->add_option("--beta-start", beta_start, "First beta of the schedule");
    app->add_option("--beta-end", beta_end, "Last beta of the schedule");
  }
  vrg::NoiseSchedule build() const { return vrg::linear_beta_schedule(T, beta_start, beta_end); }
};

struct TrainOptions {
  int steps = 20000;
  int batch = 256;
  double lr = 2e-3;
  std::vector<int> hidden{64, 64, 64};
  std::size_t n_train = 10000;

  void add(CLI::App* app) {
    app->add_option("--train-steps", steps, "Adam steps")->check(CLI::NonNegativeNumber);
    app->add_option("--batch", batch, "Minibatch size")->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "Peak learning rate")->check(CLI::PositiveNumber);
    app->add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',');
    app->add_option("--n-train", n_train, "Training samples drawn from a data spec")->check(CLI::PositiveNumber);
  }
  vrg::MlpTrainConfig build(std::uint64_t seed) const {
    vrg::MlpTrainConfig c;
    c.hidden = hidden;
    c.steps = steps;
    c.batch_size = batch;
    c.learning_rate = lr;
    c.seed = seed;
    return c;
  }
};

struct Context {
  std::string out_dir = ".";

  fs::path output(const std::string& path) const {
    fs::path p(path);
    if (p.is_relative()) p = fs::path(out_dir) / p;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
  }
};

void add_common(CLI::App* app, Context& ctx) {
  app->add_option("--out-dir", ctx.out_dir, "Directory for relative output paths")->envname("VRG_OUT_DIR");
}

json resolved_options(const CLI::App* app) {
  json out = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    std::vector<std::string> values = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
    if (values.empty()) {
      if (opt->get_default_str().empty()) continue;
      values.push_back(opt->get_default_str());
    }
    out[name] = values.size() == 1 ? json(values.front()) : json(values);
  }
  return out;
}

void write_manifest(const fs::path& path, const CLI::App* app, json resolved, const std::vector<fs::path>& artifacts) {
  json m;
  m["tool"] = "vrg";
  m["version"] = VRG_VERSION;
  m["subcommand"] = app->get_name();
  m["options"] = resolved_options(app);
  m["resolved"] = std::move(resolved);
  json files = json::array();
  for (const auto& a : artifacts) files.push_back(a.filename().string());
  m["artifacts"] = files;
  vrg::write_json(path, m);
}

fs::path manifest_for(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

// A sample batch (.bin) is used as is; anything else is a data spec to draw n
// samples from.
vrg::Batch load_dataset(const std::string& path, std::size_t n, std::uint64_t seed) {
  if (fs::path(path).extension() == ".bin") return vrg::load_batch(path).samples;
  return vrg::draw_samples(vrg::load_data_spec(path), n, seed);
}

vrg::VrgConfig vrg_config(std::size_t K, std::optional<double> gamma, double lambda, double step,
                          int iters, double tol, double eps) {
  vrg::VrgConfig c = vrg::VrgConfig::for_steps(K);
  if (gamma) c.gamma = *gamma;
  c.lambda = lambda;
  c.step_size = step;
  c.max_iters = iters;
  c.grad_tolerance = tol;
  c.eps_open = eps;
  c.validate();
  return c;
}

struct OptimizerOptions {
  std::optional<double> gamma;
  double lambda = 1.0;
  double step = 1e-3;
  int iters = 2000;
  double tol = 1e-9;
  double eps = 1e-6;

  void add(CLI::App* app, bool with_gamma = true) {
    if (with_gamma) {
      app->add_option("--gamma", gamma, "Learning portion (box radius); default 0.1 for K <= 10, else 0.01")
          ->check(CLI::NonNegativeNumber);
    }
    app->add_option("--lambda", lambda, "Terminal-level regularizer weight")->check(CLI::NonNegativeNumber);
    app->add_option("--step-size", step, "Gradient step size")->check(CLI::PositiveNumber);
    app->add_option("--iters", iters, "Maximum iterations")->check(CLI::PositiveNumber);
    app->add_option("--tol", tol, "Stop when the projected step norm over the step size falls below this");
    app->add_option("--eps", eps, "Keep every alpha in [eps, 1 - eps]");
  }
  vrg::VrgConfig build(std::size_t K) const { return vrg_config(K, gamma, lambda, step, iters, tol, eps); }
};

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) { return vrg::derive_seed(seed, tag); }

enum SeedTag : std::uint64_t { kData = 1, kTrain = 2, kProfile = 3, kSample = 4, kReference = 5, kSimulate = 6, kEval = 7 };

int run(int argc, char** argv) {
  CLI::App app{"Variance-reduction guided trajectory optimization for few-step diffusion sampling"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string("vrg ") + VRG_VERSION);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file of option values for the subcommand; explicit flags take precedence");
  Context ctx;

  // make-traj
  std::string mt_kind = "quadratic";
  int mt_steps = 10;
  std::string mt_out = "trajectory.json";
  ScheduleOptions mt_sched;
  auto* make_traj = app.add_subcommand("make-traj", "Build a base trajectory from a noise schedule");
  add_common(make_traj, ctx);
  make_traj->add_option("--kind", mt_kind, "uniform, quadratic or logSNR");
  make_traj->add_option("--steps,-K", mt_steps, "Number of sampling steps")->check(CLI::PositiveNumber);
  make_traj->add_option("--out", mt_out, "Output trajectory JSON");
  mt_sched.add(make_traj);
  make_traj->callback([&] {
    const auto traj = vrg::make_trajectory(mt_sched.build(), vrg::schedule_kind_from_string(mt_kind), mt_steps);
    const auto out = ctx.output(mt_out);
    vrg::save_trajectory(out, traj);
    write_manifest(manifest_for(out), make_traj, {{"schedule", vrg::schedule_to_json(mt_sched.build())}}, {out});
  });

  // train-denoiser
  std::string tr_data;
  std::uint64_t tr_seed = 0;
  std::string tr_out = "denoiser.bin";
  TrainOptions tr_opts;
  ScheduleOptions tr_sched;
  auto* train = app.add_subcommand("train-denoiser", "Train an MLP noise predictor");
  add_common(train, ctx);
  train->add_option("--data", tr_data, "Data spec JSON or sample batch (.bin)")->required();
  train->add_option("--seed", tr_seed, "Root seed");
  train->add_option("--out", tr_out, "Output weights file");
  tr_opts.add(train);
  tr_sched.add(train);
  train->callback([&] {
    const auto data = load_dataset(tr_data, tr_opts.n_train, sub_seed(tr_seed, kData));
    vrg::TrainReport report;
    const auto net = vrg::train_mlp_denoiser(data, tr_sched.build(), tr_opts.build(sub_seed(tr_seed, kTrain)), &report);
    const auto out = ctx.output(tr_out);
    vrg::save_mlp(out, net);
    json resolved;
    resolved["final_loss"] = report.loss.empty() ? 0.0 : report.loss.back();
    write_manifest(manifest_for(out), train, resolved, {out});
  });

  // profile
  std::string pr_denoiser, pr_data, pr_out = "profile.csv";
  std::size_t pr_grid = 64, pr_draws = 8, pr_n = 10000;
  std::uint64_t pr_seed = 0;
  ScheduleOptions pr_sched;
  auto* prof = app.add_subcommand("profile", "Measure the denoiser's prediction error across noise levels");
  add_common(prof, ctx);
  prof->add_option("--denoiser", pr_denoiser, "Denoiser JSON or MLP weights (.bin)")->required();
  prof->add_option("--data", pr_data, "Data spec JSON or sample batch (.bin)")->required();
  prof->add_option("--n-data", pr_n, "Samples drawn when --data is a spec")->check(CLI::PositiveNumber);
  prof->add_option("--grid", pr_grid, "Number of profile knots")->check(CLI::Range(2, 100000));
  prof->add_option("--draws", pr_draws, "Noise draws per sample and knot")->check(CLI::PositiveNumber);
  prof->add_option("--seed", pr_seed, "Root seed");
  prof->add_option("--out", pr_out, "Output profile CSV (metadata in <out>.json)");
  pr_sched.add(prof);
  prof->callback([&] {
    const auto den = vrg::load_denoiser(pr_denoiser);
    const auto data = load_dataset(pr_data, pr_n, sub_seed(pr_seed, kData));
    vrg::ProfileMetadata meta;
    meta.dataset_id = fs::path(pr_data).filename().string();
    const auto p = vrg::profile(*den, data, vrg::default_profile_grid(pr_sched.build(), pr_grid), pr_draws,
                                sub_seed(pr_seed, kProfile), meta);
    const auto out = ctx.output(pr_out);
    vrg::save_profile(out, p);
    write_manifest(manifest_for(out), prof, json::object(), {out, fs::path(out.string() + ".json")});
  });

  // optimize
  std::string op_traj, op_profile, op_out = "optimized.json", op_trace;
  OptimizerOptions op_opts;
  auto* opt = app.add_subcommand("optimize", "Optimize a trajectory against an error profile");
  add_common(opt, ctx);
  opt->add_option("--traj", op_traj, "Base trajectory JSON")->required();
  opt->add_option("--profile", op_profile, "Error profile CSV")->required();
  opt->add_option("--out", op_out, "Output trajectory JSON");
  opt->add_option("--trace", op_trace, "Optional CSV of per-iteration objective values");
  op_opts.add(opt);
  opt->callback([&] {
    const auto base = vrg::load_trajectory(op_traj);
    const auto p = vrg::load_profile(op_profile);
    const auto config = op_opts.build(base.size());
    const auto result = vrg::optimize(base, p, config);
    const auto out = ctx.output(op_out);
    vrg::save_trajectory(out, result.trajectory);
    std::vector<fs::path> artifacts{out};
    if (!op_trace.empty()) {
      const auto trace = ctx.output(op_trace);
      vrg::save_trace(trace, result.trace);
      artifacts.push_back(trace);
    }
    json resolved;
    resolved["config"] = vrg::config_to_json(config);
    resolved["base_objective"] = result.base_objective.total;
    resolved["best_objective"] = result.best_objective.total;
    resolved["iterations"] = result.iterations;
    resolved["converged"] = result.converged;
    write_manifest(manifest_for(out), opt, resolved, artifacts);
  });

  // sample
  std::string sa_traj, sa_denoiser, sa_out = "samples.bin";
  std::size_t sa_n = 10000, sa_d = 2;
  std::uint64_t sa_seed = 0;
  auto* samp = app.add_subcommand("sample", "Generate samples along a trajectory");
  add_common(samp, ctx);
  samp->add_option("--traj", sa_traj, "Trajectory JSON")->required();
  samp->add_option("--denoiser", sa_denoiser, "Denoiser JSON or MLP weights (.bin)")->required();
  samp->add_option("--n", sa_n, "Number of samples")->check(CLI::PositiveNumber);
  samp->add_option("--d", sa_d, "Data dimension")->check(CLI::PositiveNumber);
  samp->add_option("--seed", sa_seed, "Root seed");
  samp->add_option("--out", sa_out, "Output sample batch");
  samp->callback([&] {
    const auto den = vrg::load_denoiser(sa_denoiser);
    const auto batch = vrg::sample(*den, vrg::load_trajectory(sa_traj), sa_n, sa_d, sub_seed(sa_seed, kSample));
    const auto out = ctx.output(sa_out);
    vrg::save_batch(out, batch);
    write_manifest(manifest_for(out), samp, json::object(), {out});
  });

  // simulate
  std::string si_traj, si_profile, si_out = "simulate.json";
  std::size_t si_runs = 1000000, si_d = 1;
  std::uint64_t si_seed = 0;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo check of final-sample error variance");
  add_common(sim, ctx);
  sim->add_option("--traj", si_traj, "Trajectory JSON")->required();
  sim->add_option("--profile", si_profile, "Error profile CSV")->required();
  sim->add_option("--runs", si_runs, "Monte Carlo runs")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
  sim->add_option("--d", si_d, "Dimension per run")->check(CLI::PositiveNumber);
  sim->add_option("--seed", si_seed, "Root seed");
  sim->add_option("--out", si_out, "Output report JSON");
  sim->callback([&] {
    const auto p = vrg::load_profile(si_profile);
    const auto report = vrg::propagate_error_mc(
        vrg::load_trajectory(si_traj), [&](double ab) { return p.f_delta(ab); }, si_runs, si_d,
        sub_seed(si_seed, kSimulate));
    const auto out = ctx.output(si_out);
    vrg::write_json(out, vrg::report_to_json(report));
    write_manifest(manifest_for(out), sim, json::object(), {out});
  });

  // eval
  std::string ev_batch, ev_ref, ev_against, ev_out = "eval.json";
  std::size_t ev_proj = 128, ev_n_ref = 0;
  std::uint64_t ev_seed = 0;
  auto* ev = app.add_subcommand("eval", "Sliced-Wasserstein and moment diagnostics of a sample batch");
  add_common(ev, ctx);
  ev->add_option("--batch", ev_batch, "Sample batch to evaluate")->required();
  ev->add_option("--ref", ev_ref, "Reference data spec JSON")->required();
  auto* against = ev->add_option("--against", ev_against, "Compare with this batch instead of fresh reference draws");
  ev->add_option("--n-ref", ev_n_ref, "Reference draws; default the batch size")->excludes(against);
  ev->add_option("--projections", ev_proj, "Random projections")->check(CLI::PositiveNumber);
  ev->add_option("--seed", ev_seed, "Root seed");
  ev->add_option("--out", ev_out, "Output report JSON");
  ev->callback([&] {
    const auto batch = vrg::load_batch(ev_batch).samples;
    const auto spec = vrg::load_data_spec(ev_ref);
    const vrg::Batch other = ev_against.empty()
                                 ? vrg::draw_samples(spec, ev_n_ref ? ev_n_ref : batch.n, sub_seed(ev_seed, kReference))
                                 : vrg::load_batch(ev_against).samples;
    vrg::EvalReport r;
    r.swd = vrg::sliced_wasserstein(batch, other, ev_proj, sub_seed(ev_seed, kEval));
    const auto m = vrg::moment_diagnostics(batch, spec);
    r.mean_error = m.mean_error;
    r.cov_error = m.cov_error;
    r.n_a = batch.n;
    r.n_b = other.n;
    r.n_projections = ev_proj;
    r.seed = ev_seed;
    const auto out = ctx.output(ev_out);
    vrg::write_json(out, vrg::eval_report_to_json(r));
    write_manifest(manifest_for(out), ev, json::object(), {out});
  });

  // sweep
  std::string sw_data, sw_denoiser, sw_out = "sweep.csv";
  std::vector<double> sw_gammas{0.0, 0.01, 0.05, 0.1}, sw_lambdas{1.0};
  std::vector<std::string> sw_kinds{"quadratic"};
  std::vector<int> sw_steps{10};
  std::size_t sw_n_data = 10000, sw_grid = 64, sw_draws = 8, sw_n_samples = 10000, sw_proj = 128;
  std::uint64_t sw_seed = 0;
  OptimizerOptions sw_opts;
  TrainOptions sw_train;
  ScheduleOptions sw_sched;
  auto* sweep = app.add_subcommand("sweep", "Grid over gamma, lambda, base kind and step count");
  add_common(sweep, ctx);
  sweep->add_option("--data", sw_data, "Data spec JSON")->required();
  sweep->add_option("--denoiser", sw_denoiser, "Denoiser JSON or weights; trains an MLP when omitted");
  sweep->add_option("--gammas", sw_gammas, "Learning portions")->delimiter(',');
  sweep->add_option("--lambdas", sw_lambdas, "Regularizer weights")->delimiter(',');
  sweep->add_option("--kinds", sw_kinds, "Base trajectory kinds")->delimiter(',');
  sweep->add_option("--steps,-K", sw_steps, "Step counts")->delimiter(',');
  sweep->add_option("--n-data", sw_n_data, "Profiling samples")->check(CLI::PositiveNumber);
  sweep->add_option("--grid", sw_grid, "Profile knots")->check(CLI::Range(2, 100000));
  sweep->add_option("--draws", sw_draws, "Noise draws per sample and knot")->check(CLI::PositiveNumber);
  sweep->add_option("--n-samples", sw_n_samples, "Generated and reference samples")->check(CLI::PositiveNumber);
  sweep->add_option("--projections", sw_proj, "Random projections")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sw_seed, "Root seed");
  sweep->add_option("--out", sw_out, "Output CSV");
  sw_opts.add(sweep, false);
  sw_train.add(sweep);
  sw_sched.add(sweep);
  sweep->callback([&] {
    const auto spec = vrg::load_data_spec(sw_data);
    const auto schedule = sw_sched.build();
    const std::size_t d = vrg::dimension(spec);
    std::shared_ptr<const vrg::Denoiser> den;
    if (sw_denoiser.empty()) {
      const auto train_data = vrg::draw_samples(spec, sw_train.n_train, sub_seed(sw_seed, kTrain));
      den = std::make_shared<vrg::MlpDenoiser>(
          vrg::train_mlp_denoiser(train_data, schedule, sw_train.build(sub_seed(sw_seed, kTrain))));
    } else {
      den = vrg::load_denoiser(sw_denoiser);
    }
    const auto data = vrg::draw_samples(spec, sw_n_data, sub_seed(sw_seed, kData));
    const auto p = vrg::profile(*den, data, vrg::default_profile_grid(schedule, sw_grid), sw_draws,
                                sub_seed(sw_seed, kProfile));
    const auto reference = vrg::draw_samples(spec, sw_n_samples, sub_seed(sw_seed, kReference));
    auto swd_of = [&](const vrg::Trajectory& t) {
      const auto b = vrg::sample(*den, t, sw_n_samples, d, sub_seed(sw_seed, kSample));
      return vrg::sliced_wasserstein(b.samples, reference, sw_proj, sub_seed(sw_seed, kEval));
    };
    std::ostringstream csv;
    csv << "gamma,lambda,kind,K,cpe_base,cpe_opt,swd_base,swd_opt\n";
    for (double lambda : sw_lambdas) {
      for (const auto& kind_name : sw_kinds) {
        const auto kind = vrg::schedule_kind_from_string(kind_name);
        for (int K : sw_steps) {
          const auto base = vrg::make_trajectory(schedule, kind, K);
          const double cpe_base = vrg::cpe(base, p);
          const double swd_base = swd_of(base);
          for (double gamma : sw_gammas) {
            auto options = sw_opts;
            options.gamma = gamma;
            options.lambda = lambda;
            const auto result = vrg::optimize(base, p, options.build(base.size()));
            csv << vrg::format_double(gamma) << ',' << vrg::format_double(lambda) << ',' << vrg::to_string(kind)
                << ',' << K << ',' << vrg::format_double(cpe_base) << ','
                << vrg::format_double(vrg::cpe(result.trajectory, p)) << ',' << vrg::format_double(swd_base)
                << ',' << vrg::format_double(result.trajectory == base ? swd_base : swd_of(result.trajectory))
                << '\n';
          }
        }
      }
    }
    const auto out = ctx.output(sw_out);
    vrg::write_text(out, csv.str());
    write_manifest(manifest_for(out), sweep, json::object(), {out});
  });

  // pipeline
  std::string pi_data, pi_denoiser, pi_kind = "quadratic";
  int pi_steps = 10;
  std::size_t pi_n_data = 10000, pi_grid = 64, pi_draws = 8, pi_n_samples = 10000, pi_runs = 100000, pi_proj = 128;
  std::uint64_t pi_seed = 0;
  OptimizerOptions pi_opts;
  TrainOptions pi_train;
  ScheduleOptions pi_sched;
  auto* pipe = app.add_subcommand("pipeline", "profile, optimize, sample, simulate and eval in one run");
  add_common(pipe, ctx);
  pipe->add_option("--data", pi_data, "Data spec JSON")->required();
  pipe->add_option("--denoiser", pi_denoiser, "Denoiser JSON or weights; trains an MLP when omitted");
  pipe->add_option("--kind", pi_kind, "Base trajectory kind");
  pipe->add_option("--steps,-K", pi_steps, "Number of sampling steps")->check(CLI::PositiveNumber);
  pipe->add_option("--n-data", pi_n_data, "Profiling samples")->check(CLI::PositiveNumber);
  pipe->add_option("--grid", pi_grid, "Profile knots")->check(CLI::Range(2, 100000));
  pipe->add_option("--draws", pi_draws, "Noise draws per sample and knot")->check(CLI::PositiveNumber);
  pipe->add_option("--n-samples", pi_n_samples, "Generated and reference samples")->check(CLI::PositiveNumber);
  pipe->add_option("--runs", pi_runs, "Monte Carlo runs for simulate")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
  pipe->add_option("--projections", pi_proj, "Random projections")->check(CLI::PositiveNumber);
  pipe->add_option("--seed", pi_seed, "Root seed");
  pi_opts.add(pipe);
  pi_train.add(pipe);
  pi_sched.add(pipe);
  pipe->callback([&] {
    const auto spec = vrg::load_data_spec(pi_data);
    const auto schedule = pi_sched.build();
    const std::size_t d = vrg::dimension(spec);
    std::vector<fs::path> artifacts;
    std::shared_ptr<const vrg::Denoiser> den;
    if (pi_denoiser.empty()) {
      const auto train_data = vrg::draw_samples(spec, pi_train.n_train, sub_seed(pi_seed, kTrain));
      auto net = vrg::train_mlp_denoiser(train_data, schedule, pi_train.build(sub_seed(pi_seed, kTrain)));
      const auto weights = ctx.output("denoiser.bin");
      vrg::save_mlp(weights, net);
      artifacts.push_back(weights);
      den = std::make_shared<vrg::MlpDenoiser>(std::move(net));
    } else {
      den = vrg::load_denoiser(pi_denoiser);
    }

    const auto base = vrg::make_trajectory(schedule, vrg::schedule_kind_from_string(pi_kind), pi_steps);
    const auto base_path = ctx.output("base.json");
    vrg::save_trajectory(base_path, base);

    const auto data = vrg::draw_samples(spec, pi_n_data, sub_seed(pi_seed, kData));
    vrg::ProfileMetadata meta;
    meta.dataset_id = fs::path(pi_data).filename().string();
    const auto p = vrg::profile(*den, data, vrg::default_profile_grid(schedule, pi_grid), pi_draws,
                                sub_seed(pi_seed, kProfile), meta);
    const auto profile_path = ctx.output("profile.csv");
    vrg::save_profile(profile_path, p);

    const auto config = pi_opts.build(base.size());
    const auto result = vrg::optimize(base, p, config);
    const auto opt_path = ctx.output("optimized.json");
    const auto trace_path = ctx.output("trace.csv");
    vrg::save_trajectory(opt_path, result.trajectory);
    vrg::save_trace(trace_path, result.trace);

    const auto batch = vrg::sample(*den, result.trajectory, pi_n_samples, d, sub_seed(pi_seed, kSample));
    const auto samples_path = ctx.output("samples.bin");
    vrg::save_batch(samples_path, batch);

    const auto report = vrg::propagate_error_mc(
        result.trajectory, [&](double ab) { return p.f_delta(ab); }, pi_runs, 1, sub_seed(pi_seed, kSimulate));
    const auto sim_path = ctx.output("simulate.json");
    vrg::write_json(sim_path, vrg::report_to_json(report));

    const auto reference = vrg::draw_samples(spec, pi_n_samples, sub_seed(pi_seed, kReference));
    vrg::EvalReport r;
    r.swd = vrg::sliced_wasserstein(batch.samples, reference, pi_proj, sub_seed(pi_seed, kEval));
    const auto m = vrg::moment_diagnostics(batch.samples, spec);
    r.mean_error = m.mean_error;
    r.cov_error = m.cov_error;
    r.n_a = batch.samples.n;
    r.n_b = reference.n;
    r.n_projections = pi_proj;
    r.seed = pi_seed;
    const auto eval_path = ctx.output("eval.json");
    vrg::write_json(eval_path, vrg::eval_report_to_json(r));

    artifacts.insert(artifacts.end(), {base_path, profile_path, fs::path(profile_path.string() + ".json"), opt_path,
                                       trace_path, samples_path, sim_path, eval_path});
    json resolved;
    resolved["config"] = vrg::config_to_json(config);
    resolved["schedule"] = vrg::schedule_to_json(schedule);
    resolved["denoiser"] = den->describe();
    resolved["cpe_base"] = result.base_objective.cpe;
    resolved["cpe_optimized"] = result.best_objective.cpe;
    write_manifest(ctx.output("manifest.json"), pipe, resolved, artifacts);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const bool config = dynamic_cast<const CLI::ConfigError*>(&e) != nullptr;
    const bool missing = dynamic_cast<const CLI::FileError*>(&e) != nullptr;
    throw vrg::Error(config ? vrg::ErrorKind::schema : missing ? vrg::ErrorKind::io : vrg::ErrorKind::invalid_argument,
                     e.what());
  }
  return 0;
}

void report_error(std::string_view kind, int code, const std::string& message) {
  json err;
  err["error"] = {{"kind", kind}, {"exit_code", code}, {"message", message}};
  std::cerr << err.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vrg::Error& e) {
    const int code = vrg::exit_code(e.kind());
    report_error(vrg::to_string(e.kind()), code, e.what());
    return code;
  } catch (const json::exception& e) {
    const int code = vrg::exit_code(vrg::ErrorKind::schema);
    report_error(vrg::to_string(vrg::ErrorKind::schema), code, e.what());
    return code;
  } catch (const fs::filesystem_error& e) {
    const int code = vrg::exit_code(vrg::ErrorKind::io);
    report_error(vrg::to_string(vrg::ErrorKind::io), code, e.what());
    return code;
  } catch (const std::exception& e) {
    report_error("internal", 1, e.what());
    return 1;
  }
}
