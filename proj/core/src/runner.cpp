/*
 * Copyright 2026 the arock authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "arock/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "arock/engine.hpp"
#include "arock/format.hpp"
#include "arock/live.hpp"
#include "arock/rates.hpp"
#include "arock/timing.hpp"
#include "arock/trace.hpp"

namespace arock {
namespace {

namespace fs = std::filesystem;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string out_file(const std::string& out_dir, const char* name) {
  fs::create_directories(out_dir);
  return (fs::path(out_dir) / name).string();
}

std::string config_dir(const Config& cfg) {
  const fs::path dir = fs::path(cfg.name()).parent_path();
  return dir.empty() ? std::string(".") : dir.string();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).string();
}

/// Marks every remaining key of the given sections as consumed. Config files
/// are shared between subcommands, so sections owned by another subcommand
/// are not errors here.
void discard_sections(Config& cfg, std::initializer_list<const char*> sections) {
  for (const char* s : sections) {
    for (const auto& key : cfg.section_keys(s)) cfg.get_string(std::string(s) + "." + key);
  }
}

using KvList = std::vector<std::pair<std::string, std::string>>;

void write_kv_file(const std::string& path, const KvList& kv) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
}

void print_kv(std::ostream& os, const KvList& kv) {
  for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
}

void write_coeffs_csv(const std::string& path, const LyapunovCoefficients& coeffs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "i,c_i,s_i\n";
  for (std::size_t i = 0; i < coeffs.c.size(); ++i) {
    os << fmt_u64(i + 1) << "," << fmt_double(coeffs.c[i]) << "," << fmt_double(coeffs.s[i])
       << "\n";
  }
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

InitKind parse_init(Config& cfg, const std::string& key) {
  const std::string s = cfg.get_string(key, "ones");
  if (s == "ones") return InitKind::Ones;
  if (s == "random_sphere") return InitKind::RandomSphere;
  throw std::runtime_error(cfg.name() + ": key '" + key + "': unknown init '" + s + "'");
}

StepPolicy parse_policy(Config& cfg, const std::string& key) {
  const std::string s = cfg.get_string(key, "fixed");
  if (s == "fixed") return StepPolicy::Fixed;
  if (s == "stochastic_plan") return StepPolicy::PlanStochastic;
  if (s == "deterministic_plan") return StepPolicy::PlanDeterministic;
  throw std::runtime_error(cfg.name() + ": key '" + key + "': unknown policy '" + s + "'");
}

StochasticRatePlan stochastic_plan_from_config(Config& cfg, const Operator& op,
                                               const DelayModel& delays) {
  return stochastic_plan(op.blocks(), op.contraction_factor(), delays,
                         cfg.get_double("plan.tol", 1e-12));
}

DeterministicRatePlan deterministic_plan_from_config(Config& cfg, const Operator& op) {
  return deterministic_plan(op.blocks(), op.contraction_factor(), cfg.get_double("plan.q"),
                            cfg.get_double("plan.b", 1.0), cfg.get_double("plan.c", 1.0),
                            cfg.get_double("plan.d", 0.0), cfg.get_double("plan.tol", 1e-12));
}

/// A fitted rate must not beat its prediction's gap to 1 by more than half:
/// a loose band that still catches broken step sizes without tripping on
/// sampling noise in honest runs.
bool rate_within_prediction(double fitted, double predicted) {
  if (!std::isfinite(fitted) || !std::isfinite(predicted)) return true;
  return fitted <= predicted + 0.5 * (1.0 - predicted);
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    const std::size_t eq = sv.find('=');
    if (eq == std::string_view::npos) throw std::runtime_error(path + ": expected 'key = value'");
    kv[std::string(trim(sv.substr(0, eq)))] = std::string(trim(sv.substr(eq + 1)));
  }
  return kv;
}

struct TimingData {
  std::map<std::string, std::string> meta;
  struct Row {
    std::uint64_t p = 0;
    std::string mode;
    double mean = 0.0, std_error = 0.0, harmonic_bound = 0.0;
  };
  std::vector<Row> rows;
};

TimingData read_timing_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  TimingData data;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    const std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      const std::string_view body = trim(sv.substr(1));
      const std::size_t eq = body.find('=');
      if (eq != std::string_view::npos) {
        data.meta[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
      }
      continue;
    }
    if (!saw_header) {
      if (sv != "p,mode,mean,stderr,harmonic_bound")
        throw std::runtime_error(path + ": unexpected header '" + std::string(sv) + "'");
      saw_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    const std::string row(sv);
    while (start <= row.size()) {
      std::size_t comma = row.find(',', start);
      if (comma == std::string::npos) comma = row.size();
      fields.emplace_back(row.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 5) throw std::runtime_error(path + ": malformed row '" + row + "'");
    TimingData::Row r;
    r.p = static_cast<std::uint64_t>(parse_i64(fields[0], "timing p"));
    r.mode = fields[1];
    r.mean = parse_double(fields[2], "timing mean");
    r.std_error = parse_double(fields[3], "timing stderr");
    r.harmonic_bound = parse_double(fields[4], "timing harmonic_bound");
    data.rows.push_back(r);
  }
  if (!saw_header) throw std::runtime_error(path + ": missing header");
  return data;
}

}  // namespace

Operator operator_from_config(Config& cfg) {
  const std::string kind = cfg.get_string("operator.kind");
  const std::size_t dim = cfg.get_u64("operator.dim");
  const std::size_t blocks = cfg.get_u64("operator.blocks", dim);
  if (blocks == 0 || dim == 0 || dim % blocks != 0) {
    throw std::runtime_error(cfg.name() +
                             ": [operator] blocks must divide dim (dim = " + fmt_u64(dim) +
                             ", blocks = " + fmt_u64(blocks) + ")");
  }
  BlockPartition part = BlockPartition::uniform(blocks, dim / blocks);
  if (kind == "scaled_identity" || kind == "negated_scaled_identity") {
    const double r = cfg.get_double("operator.r");
    return kind == "scaled_identity" ? Operator::scaled_identity(r, std::move(part))
                                     : Operator::negated_scaled_identity(r, std::move(part));
  }
  if (kind == "gradient_step" || kind == "prox_gradient_step") {
    const double mu = cfg.get_double("operator.mu");
    const double lip = cfg.get_double("operator.lipschitz");
    std::vector<double> diag =
        cfg.has("operator.diag") ? cfg.get_double_list("operator.diag") : linspace(mu, lip, dim);
    if (kind == "gradient_step")
      return make_gd_operator(std::move(diag), mu, lip, std::move(part));
    const double threshold = cfg.get_double("operator.threshold");
    return make_prox_gd_operator(std::move(diag), mu, lip, threshold, std::move(part));
  }
  throw std::runtime_error(cfg.name() + ": [operator] unknown kind '" + kind + "'");
}

DelayModel delay_from_config(Config& cfg, const std::string& base_dir) {
  if (!cfg.has("delay.model")) return DelayModel::zero();
  const std::string model = cfg.get_string("delay.model");
  std::optional<DelaySampling> sampling;
  if (cfg.has("delay.sampling")) {
    const std::string s = cfg.get_string("delay.sampling");
    if (s == "per_block") {
      sampling = DelaySampling::PerBlock;
    } else if (s == "shared_age") {
      sampling = DelaySampling::SharedAge;
    } else {
      throw std::runtime_error(cfg.name() + ": [delay] unknown sampling '" + s + "'");
    }
  }
  if (model == "zero" || model == "schedule") {
    if (sampling.has_value())
      throw std::runtime_error(cfg.name() + ": [delay] model '" + model +
                               "' does not take a sampling choice");
    if (model == "zero") return DelayModel::zero();
    return DelayModel::schedule(cfg.get_u32_list("delay.ages"));
  }
  if (model == "fixed") {
    const auto tau = static_cast<std::uint32_t>(cfg.get_u64("delay.tau"));
    return DelayModel::fixed_age(tau, sampling.value_or(DelaySampling::SharedAge));
  }
  if (model == "geometric") {
    return DelayModel::geometric(cfg.get_double("delay.pbar"),
                                 sampling.value_or(DelaySampling::PerBlock));
  }
  if (model == "bounded_uniform") {
    const auto tau = static_cast<std::uint32_t>(cfg.get_u64("delay.tau"));
    return DelayModel::bounded_uniform(tau, sampling.value_or(DelaySampling::PerBlock));
  }
  if (model == "empirical") {
    const std::string file = resolve(base_dir, cfg.get_string("delay.file"));
    return DelayModel::empirical(load_histogram(file),
                                 sampling.value_or(DelaySampling::SharedAge));
  }
  throw std::runtime_error(cfg.name() + ": [delay] unknown model '" + model + "'");
}

bool plan_from_config(Config cfg, const std::string& out_dir, std::ostream& os) {
  const Operator op = operator_from_config(cfg);
  const std::size_t m = op.blocks();
  const double r = op.contraction_factor();
  const std::string type = cfg.get_string("plan.type");

  KvList kv;
  kv.emplace_back("type", type);
  kv.emplace_back("operator", op.describe());
  kv.emplace_back("m", fmt_u64(m));
  kv.emplace_back("r", fmt_double(r));

  const LyapunovCoefficients* coeffs = nullptr;
  std::optional<StochasticRatePlan> sp;
  std::optional<DeterministicRatePlan> dp;
  if (type == "stochastic") {
    const DelayModel delays = delay_from_config(cfg, config_dir(cfg));
    sp = stochastic_plan_from_config(cfg, op, delays);
    kv.emplace_back("delay_model", delays.describe());
    kv.emplace_back("rho", fmt_double(sp->rho));
    kv.emplace_back("m1", fmt_double(sp->M1));
    kv.emplace_back("m2", fmt_double(sp->M2));
    kv.emplace_back("eta1", fmt_double(sp->eta1));
    kv.emplace_back("eta2", fmt_double(sp->eta2));
    kv.emplace_back("rate", fmt_double(sp->rate));
    coeffs = &sp->coeffs;
  } else if (type == "deterministic") {
    dp = deterministic_plan_from_config(cfg, op);
    kv.emplace_back("rho", fmt_double(dp->rho));
    kv.emplace_back("q", fmt_double(dp->q));
    kv.emplace_back("b", fmt_double(dp->b));
    kv.emplace_back("c", fmt_double(dp->c));
    kv.emplace_back("d", fmt_double(dp->d));
    kv.emplace_back("horizon", fmt_double(dp->horizon));
    kv.emplace_back("gamma", fmt_double(dp->gamma));
    kv.emplace_back("step_at_0", fmt_double(dp->H1(0.0)));
    kv.emplace_back("step_at_horizon", fmt_double(dp->H1(dp->horizon)));
    kv.emplace_back("boundary_rate", fmt_double(dp->boundary_rate));
    kv.emplace_back("penalty", fmt_double(dp->penalty));
    coeffs = &dp->coeffs;
  } else if (type == "sync") {
    const std::size_t p = cfg.get_u64("plan.p", 1);
    const double eta = cfg.get_double("plan.eta", 1.0);
    const SynchronousRate sr = synchronous_rate(m, p, r, eta);
    kv.emplace_back("p", fmt_u64(p));
    kv.emplace_back("eta", fmt_double(eta));
    kv.emplace_back("ratio", fmt_double(sr.ratio));
    kv.emplace_back("rate", fmt_double(sr.rate));
    kv.emplace_back("kappa", fmt_double(sr.kappa));
    kv.emplace_back("complexity_lo", fmt_double(sr.complexity_lo));
    kv.emplace_back("complexity_hi", fmt_double(sr.complexity_hi));
  } else {
    throw std::runtime_error(cfg.name() + ": [plan] unknown type '" + type + "'");
  }
  if (coeffs != nullptr) {
    kv.emplace_back("coeff_count", fmt_u64(coeffs->c.size()));
    kv.emplace_back("coeff_tail_bound", fmt_double(coeffs->tail_bound));
  }

  discard_sections(cfg, {"run", "timing", "live", "delay"});
  cfg.done();

  write_kv_file(out_file(out_dir, "plan.txt"), kv);
  if (coeffs != nullptr) write_coeffs_csv(out_file(out_dir, "coeffs.csv"), *coeffs);
  print_kv(os, kv);
  return true;
}

bool simulate_from_config(Config cfg, const std::string& out_dir, const CliOverrides& ov,
                          std::ostream& os) {
  RunSpec spec(operator_from_config(cfg));
  spec.delays = delay_from_config(cfg, config_dir(cfg));
  const std::string mode = cfg.get_string("run.mode", "arock");
  if (mode == "sync") {
    spec.mode = RunMode::Sync;
  } else if (mode == "arock") {
    spec.mode = RunMode::Arock;
  } else {
    throw std::runtime_error(cfg.name() + ": [run] unknown mode '" + mode + "'");
  }
  spec.p = cfg.get_u64("run.p", 1);
  spec.iterations = cfg.get_u64("run.iterations");
  spec.seed = ov.seed.value_or(cfg.get_u64("run.seed"));
  spec.policy = parse_policy(cfg, "run.policy");
  spec.eta = cfg.get_double("run.eta", 1.0);
  spec.init = parse_init(cfg, "run.init");
  spec.depth_cap = cfg.get_u64("run.depth_cap", 100000);
  spec.tail_tol = cfg.get_double("run.tail_tol", 1e-9);
  if (spec.policy == StepPolicy::PlanStochastic)
    spec.stochastic = stochastic_plan_from_config(cfg, spec.op, spec.delays);
  if (spec.policy == StepPolicy::PlanDeterministic)
    spec.deterministic = deterministic_plan_from_config(cfg, spec.op);

  discard_sections(cfg, {"timing", "live", "plan"});
  cfg.done();

  const Trace trace = run_experiment(spec);
  trace.save(out_file(out_dir, "trace.csv"));

  bool ok = true;
  std::string problem;
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const TraceRow& row = trace.rows[i];
    if (row.k != i) {
      ok = false;
      problem = "trace rows are not contiguous";
      break;
    }
    if (!std::isfinite(row.sq_error) || row.sq_error < 0.0 || !std::isfinite(row.lyapunov) ||
        row.lyapunov + 1e-12 * std::max(1.0, row.sq_error) < row.sq_error) {
      ok = false;
      problem = "row " + fmt_u64(row.k) + " has an inconsistent error/Lyapunov pair";
      break;
    }
  }
  const bool has_fit = trace.meta.count("fitted_rate") != 0;
  const bool has_pred = trace.meta.count("predicted_rate") != 0;
  const double fitted = has_fit ? trace.meta_double("fitted_rate") : kNan;
  const double predicted = has_pred ? trace.meta_double("predicted_rate") : kNan;
  if (ok && trace.rows.size() >= 100 && !rate_within_prediction(fitted, predicted)) {
    ok = false;
    problem = "fitted rate " + fmt_double(fitted) + " exceeds the predicted rate " +
              fmt_double(predicted) + " by more than half its gap to 1";
  }

  KvList kv;
  for (const char* key : {"mode", "operator", "m", "p", "delay_model", "eta_policy", "eta",
                          "iterations", "seed", "final_sq_error", "fitted_rate",
                          "predicted_rate", "plan_rate", "boundary_rate"}) {
    const auto it = trace.meta.find(key);
    if (it != trace.meta.end()) kv.emplace_back(key, it->second);
  }
  if (has_fit && has_pred) kv.emplace_back("fitted_minus_predicted", fmt_double(fitted - predicted));
  kv.emplace_back("check", ok ? "pass" : "fail: " + problem);
  write_kv_file(out_file(out_dir, "summary.txt"), kv);
  print_kv(os, kv);
  return ok;
}

bool timing_from_config(Config cfg, const std::string& out_dir, const CliOverrides& ov,
                        std::ostream& os) {
  const std::vector<std::uint32_t> ps = cfg.get_u32_list("timing.p");
  const double lambda = cfg.get_double("timing.lambda", 0.0);
  const std::vector<double> cost =
      cfg.has("timing.cost") ? cfg.get_double_list("timing.cost") : std::vector<double>{1.0};
  const std::size_t m = cfg.get_u64("timing.m", cost.size());
  const std::size_t epochs = cfg.get_u64("timing.epochs", 1);
  const std::size_t trials = ov.trials.value_or(cfg.get_u64("timing.trials"));
  const std::uint64_t seed = ov.seed.value_or(cfg.get_u64("timing.seed"));
  const std::string mode = cfg.get_string("timing.mode", "both");
  std::vector<TimingMode> modes;
  if (mode == "sync" || mode == "both") modes.push_back(TimingMode::Sync);
  if (mode == "async" || mode == "both") modes.push_back(TimingMode::Async);
  if (modes.empty())
    throw std::runtime_error(cfg.name() + ": [timing] unknown mode '" + mode + "'");

  discard_sections(cfg, {"operator", "delay", "run", "plan", "live"});
  cfg.done();

  TimingModel base;
  base.m = m;
  base.lambda = lambda;
  base.cost = cost;

  std::ofstream csv(out_file(out_dir, "timing.csv"));
  if (!csv) throw std::runtime_error("cannot write timing.csv");
  csv << "# version = 1\n";
  csv << "# epochs = " << fmt_u64(epochs) << "\n";
  csv << "# m = " << fmt_u64(m) << "\n";
  csv << "# lambda = " << fmt_double(lambda) << "\n";
  csv << "# trials = " << fmt_u64(trials) << "\n";
  csv << "# cost_max = " << fmt_double(base.cost_max()) << "\n";
  csv << "# cost_mean = " << fmt_double(base.cost_mean()) << "\n";
  csv << "p,mode,mean,stderr,harmonic_bound\n";

  for (const std::uint32_t p : ps) {
    TimingModel model = base;
    model.p = p;
    for (const TimingMode tm : modes) {
      const ThroughputResult res = simulate_throughput(model, tm, epochs, trials, seed);
      double bound = kNan;
      if (tm == TimingMode::Sync && model.constant_cost()) {
        const std::size_t rounds = (epochs * m + p - 1) / p;
        bound = static_cast<double>(rounds) * sync_iteration_time_bound(model).bound;
      }
      const char* mode_name = tm == TimingMode::Sync ? "sync" : "async";
      csv << fmt_u64(p) << "," << mode_name << "," << fmt_double(res.mean) << ","
          << fmt_double(res.std_error) << "," << fmt_double(bound) << "\n";
      os << "p = " << fmt_u64(p) << "  " << mode_name << "  mean = " << fmt_double(res.mean)
         << "  stderr = " << fmt_double(res.std_error);
      if (std::isfinite(bound)) os << "  bound >= " << fmt_double(bound);
      os << "\n";
    }
  }
  if (cost.size() > 1) {
    const HeteroLimits lim = hetero_limits(cost);
    os << "large-p iteration-time limits: sync -> " << fmt_double(lim.sync_limit)
       << ", async mean -> " << fmt_double(lim.async_mean) << "\n";
  }
  return true;
}

bool live_from_config(Config cfg, const std::string& out_dir, const CliOverrides& ov,
                      std::ostream& os) {
  // Snapshot the raw [operator] section before consuming it, so the fitted
  // model config can reproduce it verbatim.
  KvList op_section;
  for (const auto& key : cfg.section_keys("operator"))
    op_section.emplace_back(key, cfg.get_string("operator." + key));

  LiveConfig lc(operator_from_config(cfg));
  lc.workers = cfg.get_u64("live.workers");
  lc.budget = cfg.get_u64("live.budget");
  lc.seed = ov.seed.value_or(cfg.get_u64("live.seed"));
  lc.jitter_mean = cfg.get_double("live.jitter_mean", 0.0);
  lc.policy = parse_policy(cfg, "live.policy");
  lc.eta = cfg.get_double("live.eta", 1.0);
  lc.init = parse_init(cfg, "live.init");
  lc.depth_cap = cfg.get_u64("live.depth_cap", 100000);
  lc.tail_tol = cfg.get_double("live.tail_tol", 1e-9);
  const double plan_tol = cfg.get_double("plan.tol", 1e-12);
  if (lc.policy == StepPolicy::PlanStochastic) {
    const DelayModel delays = delay_from_config(cfg, config_dir(cfg));
    lc.stochastic = stochastic_plan(lc.op.blocks(), lc.op.contraction_factor(), delays, plan_tol);
  }
  if (lc.policy == StepPolicy::PlanDeterministic)
    lc.deterministic = deterministic_plan_from_config(cfg, lc.op);

  discard_sections(cfg, {"run", "timing", "delay", "plan"});
  cfg.done();

  const LiveResult res = run_live(lc);
  res.trace.save(out_file(out_dir, "trace.csv"));
  save_histogram(res.delay_histogram, out_file(out_dir, "histogram.csv"));
  {
    std::ofstream ts(out_file(out_dir, "timestamps.csv"));
    if (!ts) throw std::runtime_error("cannot write timestamps.csv");
    ts << "k,seconds\n";
    for (std::size_t k = 0; k < res.apply_times.size(); ++k)
      ts << fmt_u64(k) << "," << fmt_double(res.apply_times[k]) << "\n";
  }
  {
    std::ofstream fm(out_file(out_dir, "fitted_model.cfg"));
    if (!fm) throw std::runtime_error("cannot write fitted_model.cfg");
    fm << "version = 1\n\n[operator]\n";
    for (const auto& [k, v] : op_section) fm << k << " = " << v << "\n";
    fm << "\n[delay]\nmodel = empirical\nfile = histogram.csv\nsampling = shared_age\n";
    fm << "\n[plan]\ntype = stochastic\ntol = " << fmt_double(plan_tol) << "\n";
  }

  KvList kv;
  for (const char* key : {"mode", "operator", "m", "p", "eta_policy", "eta", "iterations",
                          "seed", "jitter_mean", "final_sq_error", "fitted_rate",
                          "predicted_rate"}) {
    const auto it = res.trace.meta.find(key);
    if (it != res.trace.meta.end()) kv.emplace_back(key, it->second);
  }
  kv.emplace_back("applied", fmt_u64(res.applied));
  if (!res.apply_times.empty()) {
    const double total = res.apply_times.back();
    kv.emplace_back("wall_seconds", fmt_double(total));
    if (total > 0.0)
      kv.emplace_back("updates_per_second", fmt_double(static_cast<double>(res.applied) / total));
  }
  std::uint32_t max_delay = 0;
  for (const auto& [age, count] : res.delay_histogram) max_delay = std::max(max_delay, age);
  kv.emplace_back("max_delay", fmt_u64(max_delay));
  if (res.completed && res.applied > 0) {
    const StochasticRatePlan fitted = stochastic_plan(
        lc.op.blocks(), lc.op.contraction_factor(), fit_delay_model(res), plan_tol);
    kv.emplace_back("fitted_plan_eta1", fmt_double(fitted.eta1));
    kv.emplace_back("fitted_plan_rate", fmt_double(fitted.rate));
  }
  kv.emplace_back("check", res.completed ? "pass" : "fail: " + res.error);
  write_kv_file(out_file(out_dir, "summary.txt"), kv);
  print_kv(os, kv);
  return res.completed;
}

bool emit_report(const ReportInputs& in, const std::string& out_dir, std::ostream& os) {
  if (in.trace_paths.empty()) throw std::runtime_error("report: need at least one trace");
  if (!(in.eps > 0.0 && in.eps < 1.0))
    throw std::runtime_error("report: eps must lie in (0, 1)");

  std::vector<Trace> traces;
  traces.reserve(in.trace_paths.size());
  for (const std::string& path : in.trace_paths) traces.push_back(Trace::load(path));
  const std::string op0 = traces.front().meta_str("operator");
  for (std::size_t t = 0; t < traces.size(); ++t) {
    if (traces[t].meta_str("operator") != op0) {
      throw std::runtime_error("report: " + in.trace_paths[t] +
                               " describes a different operator than " + in.trace_paths.front());
    }
    if (traces[t].rows.size() < 10)
      throw std::runtime_error("report: " + in.trace_paths[t] + " has fewer than 10 rows");
  }

  std::optional<double> plan_rate;
  std::map<std::string, std::string> plan_kv;
  if (!in.plan_path.empty()) {
    plan_kv = read_kv_file(in.plan_path);
    for (const char* key : {"rate", "boundary_rate", "ratio"}) {
      const auto it = plan_kv.find(key);
      if (it != plan_kv.end()) {
        plan_rate = parse_double(it->second, key);
        break;
      }
    }
  }

  std::optional<TimingData> timing;
  if (!in.timing_path.empty()) timing = read_timing_csv(in.timing_path);

  std::ostringstream text;
  std::ofstream csv(out_file(out_dir, "report.csv"));
  if (!csv) throw std::runtime_error("cannot write report.csv");
  csv << "trace,mode,p,rows,fitted_rate,predicted_rate,epochs_to_eps,epochs_per_unit_time,"
         "time_to_eps\n";

  text << "operator: " << op0 << "\n";
  text << "target squared-error reduction: " << fmt_double(in.eps) << "\n";
  if (plan_rate.has_value())
    text << "plan rate (" << in.plan_path << "): " << fmt_double(*plan_rate) << "\n";
  text << "\n";

  bool ok = true;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const Trace& trace = traces[t];
    const std::string mode = trace.meta_str("mode");
    const std::uint64_t p =
        trace.meta.count("p") != 0 ? static_cast<std::uint64_t>(trace.meta_double("p")) : 1;
    const std::uint64_t m = static_cast<std::uint64_t>(trace.meta_double("m"));

    // The report's fit is always on the squared error, independent of what
    // the run used internally, so traces are comparable across policies.
    double fitted = kNan;
    {
      std::vector<double> ys(trace.rows.size());
      for (std::size_t i = 0; i < trace.rows.size(); ++i) ys[i] = trace.rows[i].sq_error;
      try {
        fitted = fit_geometric_rate(ys);
      } catch (const std::exception&) {
        // Degenerate series (too few positive entries): no usable fit.
      }
    }
    double predicted = kNan;
    if (trace.meta.count("predicted_rate") != 0) {
      predicted = trace.meta_double("predicted_rate");
    } else if (plan_rate.has_value()) {
      predicted = *plan_rate;
    }

    const double updates_per_row = mode == "sync" ? static_cast<double>(p) : 1.0;
    double epochs_to_eps = kNan;
    if (std::isfinite(fitted) && fitted > 0.0 && fitted < 1.0) {
      const double iters = std::log(in.eps) / std::log(fitted);
      epochs_to_eps = iters * updates_per_row / static_cast<double>(m);
    }

    double epochs_per_unit_time = kNan;
    double time_to_eps = kNan;
    if (timing.has_value()) {
      const std::string want = mode == "sync" ? "sync" : "async";
      const TimingData::Row* row = nullptr;
      for (const auto& r : timing->rows) {
        if (r.mode != want) continue;
        if (row == nullptr || r.p == p) row = &r;
        if (r.p == p) break;
      }
      const auto it = timing->meta.find("epochs");
      if (row != nullptr && it != timing->meta.end() && row->mean > 0.0) {
        const double sim_epochs = parse_double(it->second, "timing epochs");
        epochs_per_unit_time = sim_epochs / row->mean;
        if (std::isfinite(epochs_to_eps)) time_to_eps = epochs_to_eps / epochs_per_unit_time;
      }
    }

    if (trace.rows.size() >= 100 && !rate_within_prediction(fitted, predicted)) {
      ok = false;
      text << "CHECK FAILED for " << in.trace_paths[t] << ": fitted rate " << fmt_double(fitted)
           << " exceeds predicted rate " << fmt_double(predicted)
           << " by more than half its gap to 1\n";
    }

    csv << in.trace_paths[t] << "," << mode << "," << fmt_u64(p) << ","
        << fmt_u64(trace.rows.size()) << "," << fmt_double(fitted) << ","
        << fmt_double(predicted) << "," << fmt_double(epochs_to_eps) << ","
        << fmt_double(epochs_per_unit_time) << "," << fmt_double(time_to_eps) << "\n";

    text << in.trace_paths[t] << ":\n";
    text << "  mode = " << mode << ", p = " << fmt_u64(p) << ", rows = "
         << fmt_u64(trace.rows.size()) << "\n";
    text << "  fitted rate   = " << fmt_double(fitted) << "\n";
    text << "  predicted rate = " << fmt_double(predicted) << "\n";
    text << "  epochs to target = " << fmt_double(epochs_to_eps) << "\n";
    if (timing.has_value()) {
      text << "  epochs per unit time = " << fmt_double(epochs_per_unit_time) << "\n";
      text << "  projected time to target = " << fmt_double(time_to_eps) << "\n";
    }
    text << "\n";
  }
  text << (ok ? "all checks passed\n" : "one or more checks failed\n");

  std::ofstream txt(out_file(out_dir, "report.txt"));
  if (!txt) throw std::runtime_error("cannot write report.txt");
  txt << text.str();
  os << text.str();
  return ok;
}

}  // namespace arock
