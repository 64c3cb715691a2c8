#include "s5id/harness.hpp"

#include "s5id/error.hpp"
#include "s5id/io.hpp"
#include "s5id/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace s5id {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kToolName = "s5id";
constexpr const char* kToolVersion = "0.1.0";

[[noreturn]] void bad_config(const std::string& msg) { throw Error(ErrorCode::ParseError, "config: " + msg); }

std::string init_name(InitMode m) {
  switch (m) {
    case InitMode::Stationary: return "stationary";
    case InitMode::Zero: return "zero";
    case InitMode::BurnIn: return "burn_in";
  }
  return "stationary";
}

InitMode parse_init(const std::string& s) {
  if (s == "stationary") return InitMode::Stationary;
  if (s == "zero") return InitMode::Zero;
  if (s == "burn_in") return InitMode::BurnIn;
  bad_config("unknown init '" + s + "' (stationary | zero | burn_in)");
}

std::string noise_name(NoiseDistribution n) { return n == NoiseDistribution::Uniform ? "uniform" : "gaussian"; }

NoiseDistribution parse_noise(const std::string& s) {
  if (s == "gaussian") return NoiseDistribution::Gaussian;
  if (s == "uniform") return NoiseDistribution::Uniform;
  bad_config("unknown noise '" + s + "' (gaussian | uniform)");
}

json parse_document(const std::string& text, const char* what) {
  try {
    json doc = json::parse(text);
    if (!doc.is_object()) throw Error(ErrorCode::ParseError, std::string(what) + " must be a JSON object");
    return doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

template <class T>
T get_field(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Statistics

std::vector<double> metric_values(const GroupResult& g, const std::function<double(const RepeatRow&)>& get) {
  std::vector<double> out;
  for (const auto& r : g.rows) {
    if (r.ok && r.s5_run) out.push_back(get(r));
  }
  return out;
}

json stats_to_json(const SummaryStats& s) {
  return json{{"count", s.count}, {"median", s.median}, {"q1", s.q1}, {"q3", s.q3},
              {"min", s.min},     {"max", s.max},       {"mean", s.mean}};
}

double loglog_slope(const std::vector<Index>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  if (k < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += std::log(static_cast<double>(x[i]));
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = std::log(static_cast<double>(x[i])) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return v.size() >= 2;
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] <= v[i - 1])) return false;
  }
  return v.size() >= 2;
}

// ---------------------------------------------------------------------------
// Record (de)serialization

json config_json(const ExperimentConfig& c) {
  json j;
  j["mode"] = to_string(c.mode);
  j["orders"] = c.orders;
  if (c.Tbar_rule.empty()) {
    j["Tbar_values"] = c.Tbar_values;
  } else {
    j["Tbar_rule"] = c.Tbar_rule;
  }
  j["f_rule"] = c.f_rule;
  j["p_rule"] = c.p_rule;
  j["target_unstable_count"] = c.target_unstable_count;
  j["repeats"] = c.repeats;
  j["max_attempts"] = c.max_attempts;
  j["base_seed"] = c.base_seed;
  j["output_path"] = c.output_path;
  if (!c.model_path.empty()) j["model_path"] = c.model_path;
  j["grid_points"] = c.grid_points;
  j["bode_points"] = c.bode_points;
  j["bode_repeats"] = c.bode_repeats;
  j["init"] = init_name(c.init);
  j["noise"] = noise_name(c.noise);
  return j;
}

ExperimentConfig config_from(const json& doc) {
  ExperimentMode mode = ExperimentMode::LowDim;
  if (doc.contains("mode")) mode = parse_mode(get_field<std::string>(doc, "mode"));
  ExperimentConfig c = ExperimentConfig::defaults(mode);
  for (const auto& [key, value] : doc.items()) {
    if (key == "mode") continue;
    if (key == "orders") {
      c.orders = get_field<std::vector<Index>>(doc, "orders");
    } else if (key == "Tbar_values") {
      c.Tbar_values = get_field<std::vector<Index>>(doc, "Tbar_values");
      c.Tbar_rule.clear();
    } else if (key == "Tbar_rule") {
      c.Tbar_rule = get_field<std::string>(doc, "Tbar_rule");
      c.Tbar_values.clear();
    } else if (key == "f_rule") {
      c.f_rule = get_field<std::string>(doc, "f_rule");
    } else if (key == "p_rule") {
      c.p_rule = get_field<std::string>(doc, "p_rule");
    } else if (key == "target_unstable_count") {
      c.target_unstable_count = get_field<Index>(doc, "target_unstable_count");
    } else if (key == "repeats") {
      c.repeats = get_field<Index>(doc, "repeats");
    } else if (key == "max_attempts") {
      c.max_attempts = get_field<Index>(doc, "max_attempts");
    } else if (key == "base_seed") {
      c.base_seed = get_field<std::uint64_t>(doc, "base_seed");
    } else if (key == "output_path") {
      c.output_path = get_field<std::string>(doc, "output_path");
    } else if (key == "model_path") {
      c.model_path = get_field<std::string>(doc, "model_path");
    } else if (key == "grid_points") {
      c.grid_points = get_field<Index>(doc, "grid_points");
    } else if (key == "bode_points") {
      c.bode_points = get_field<Index>(doc, "bode_points");
    } else if (key == "bode_repeats") {
      c.bode_repeats = get_field<Index>(doc, "bode_repeats");
    } else if (key == "init") {
      c.init = parse_init(get_field<std::string>(doc, "init"));
    } else if (key == "noise") {
      c.noise = parse_noise(get_field<std::string>(doc, "noise"));
    } else {
      bad_config("unknown field '" + key + "'");
    }
  }
  return c;
}

json row_to_json(const RepeatRow& r, bool include_timings) {
  json j;
  j["attempt"] = r.attempt;
  j["seed"] = r.seed;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["failure"] = {{"stage", r.failure_stage}, {"code", r.failure_code}, {"message", r.failure_message}};
  }
  j["rho_A_star"] = r.rho_A_star;
  j["unstable_ls"] = r.unstable_ls;
  j["s5_run"] = r.s5_run;
  if (r.ok && r.s5_run) {
    j["rho_A_hat"] = r.rho_A_hat;
    j["rho_Au_hat"] = r.rho_Au_hat;
    j["sigma_R"] = r.sigma_R;
    j["sylvester_residual"] = r.sylvester_residual;
    j["hinf_hard"] = r.hinf_hard;
    j["hinf_soft"] = r.hinf_soft;
    j["hinf_argmax"] = r.hinf_argmax;
    j["au_error"] = r.au_error;
    j["eig_distance"] = r.eig_distance;
    j["pole_magnitudes"] = r.pole_magnitudes;
  }
  json fact = json::object();
  for (const auto& s : r.stages) fact[s.name] = s.factorizations;
  j["factorizations"] = fact;
  if (include_timings) {
    json t = json::object();
    for (const auto& s : r.stages) t[s.name] = s.seconds;
    j["timings"] = {{"stages", t}, {"total_seconds", r.total_seconds}};
  }
  return j;
}

RepeatRow row_from_json(const json& j) {
  RepeatRow r;
  r.attempt = get_field<Index>(j, "attempt");
  r.seed = get_field<std::uint64_t>(j, "seed");
  r.ok = get_field<bool>(j, "ok");
  if (!r.ok) {
    const json& f = j.at("failure");
    r.failure_stage = get_field<std::string>(f, "stage");
    r.failure_code = get_field<std::string>(f, "code");
    r.failure_message = get_field<std::string>(f, "message");
  }
  r.rho_A_star = get_field<double>(j, "rho_A_star");
  r.unstable_ls = get_field<bool>(j, "unstable_ls");
  r.s5_run = get_field<bool>(j, "s5_run");
  if (r.ok && r.s5_run) {
    r.rho_A_hat = get_field<double>(j, "rho_A_hat");
    r.rho_Au_hat = get_field<double>(j, "rho_Au_hat");
    r.sigma_R = get_field<double>(j, "sigma_R");
    r.sylvester_residual = get_field<double>(j, "sylvester_residual");
    r.hinf_hard = get_field<double>(j, "hinf_hard");
    r.hinf_soft = get_field<double>(j, "hinf_soft");
    r.hinf_argmax = get_field<double>(j, "hinf_argmax");
    r.au_error = get_field<double>(j, "au_error");
    r.eig_distance = get_field<double>(j, "eig_distance");
    r.pole_magnitudes = get_field<std::vector<double>>(j, "pole_magnitudes");
  }
  std::map<std::string, StageRecord> stages;
  std::vector<std::string> order;
  if (j.contains("factorizations")) {
    for (const auto& [name, v] : j.at("factorizations").items()) {
      stages[name].name = name;
      stages[name].factorizations = v.get<std::uint64_t>();
      order.push_back(name);
    }
  }
  if (j.contains("timings")) {
    const json& t = j.at("timings");
    r.total_seconds = get_field<double>(t, "total_seconds");
    for (const auto& [name, v] : t.at("stages").items()) {
      if (!stages.count(name)) order.push_back(name);
      stages[name].name = name;
      stages[name].seconds = v.get<double>();
    }
  }
  for (const auto& name : order) r.stages.push_back(stages[name]);
  return r;
}

json aggregate_to_json(const GroupAggregate& a, bool include_timings) {
  json j;
  j["unstable_incidence"] = a.unstable_incidence;
  j["kept"] = a.kept;
  j["all_stable"] = a.all_stable;
  json stats = json::object();
  for (const auto& [name, s] : a.stats) stats[name] = stats_to_json(s);
  j["stats"] = stats;
  if (include_timings) {
    j["timing_summary"] = {{"mean_stage_seconds", a.mean_stage_seconds},
                           {"mean_total_seconds", a.mean_total_seconds},
                           {"sum_total_seconds", a.sum_total_seconds}};
  }
  return j;
}

json analysis_to_json(const ExperimentRecord& rec) {
  json out = json::object();
  std::vector<Index> orders;
  for (const auto& g : rec.groups) {
    if (std::find(orders.begin(), orders.end(), g.n) == orders.end()) orders.push_back(g.n);
  }
  json per_order = json::array();
  for (Index n : orders) {
    const ConsistencyAnalysis c = analyze(rec, n);
    if (c.Tbar.size() < 2) continue;
    per_order.push_back({{"n", n},
                         {"Tbar", c.Tbar},
                         {"median_au_error", c.median_au_error},
                         {"median_eig_distance", c.median_eig_distance},
                         {"median_hinf_soft", c.median_hinf_soft},
                         {"median_hinf_hard", c.median_hinf_hard},
                         {"au_error_decreasing", c.au_error_decreasing},
                         {"eig_distance_decreasing", c.eig_distance_decreasing},
                         {"hinf_soft_decreasing", c.hinf_soft_decreasing},
                         {"hinf_hard_nonincreasing", c.hinf_hard_nonincreasing},
                         {"au_error_loglog_slope", c.au_error_loglog_slope}});
  }
  out["by_order"] = per_order;
  bool stable = true;
  Index runs = 0;
  for (const auto& g : rec.groups) {
    const auto a = aggregate(g);
    stable = stable && a.all_stable;
    runs += a.kept;
  }
  out["all_stable"] = stable;
  out["s5_runs"] = runs;
  return out;
}

json group_to_json(const GroupResult& g, bool include_timings) {
  json j;
  j["n"] = g.n;
  j["Tbar"] = g.Tbar;
  j["f"] = g.f;
  j["p"] = g.p;
  j["attempts"] = g.attempts;
  j["unstable_count"] = g.unstable_count;
  j["failures"] = g.failures;
  j["status"] = g.status;
  j["true_pole_magnitudes"] = g.true_pole_magnitudes;
  json rows = json::array();
  for (const auto& r : g.rows) rows.push_back(row_to_json(r, include_timings));
  j["rows"] = std::move(rows);
  j["aggregate"] = aggregate_to_json(aggregate(g), include_timings);
  return j;
}

// ---------------------------------------------------------------------------
// Execution

struct GroupSetup {
  ExampleSystem system;
  Index n = 0;
  Index Tbar = 0;
  Index f = 0;
  Index p = 0;
};

void emit(const RunOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

ExampleSystem system_for(const ExperimentConfig& cfg, Index n, Index p) {
  switch (cfg.mode) {
    case ExperimentMode::LowDim:
    case ExperimentMode::Consistency:
      return build_lowdim_example();
    case ExperimentMode::HighDim:
      return build_highdim_example(n, p);
    case ExperimentMode::Custom: {
      std::optional<Var1Model> law;
      ExampleSystem sys;
      sys.model = io::read_model(cfg.model_path, &law);
      if (!law) throw Error(ErrorCode::ParseError, "custom model document needs an 'input_law' entry");
      sys.input_law = *law;
      return sys;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown mode");
}

std::vector<GroupSetup> plan_groups(const ExperimentConfig& cfg) {
  std::vector<Index> orders = cfg.orders;
  if (cfg.mode == ExperimentMode::LowDim || cfg.mode == ExperimentMode::Consistency) orders = {5};
  std::optional<ExampleSystem> custom;
  if (cfg.mode == ExperimentMode::Custom) {
    custom = system_for(cfg, 0, 0);
    orders = {custom->model.order()};
  }
  const IntegerRule f_rule = IntegerRule::parse(cfg.f_rule);
  const IntegerRule p_rule = IntegerRule::parse(cfg.p_rule);
  std::vector<GroupSetup> out;
  for (Index n : orders) {
    std::vector<Index> tbars = cfg.Tbar_values;
    const Index m = custom ? custom->model.inputs() : 2;
    if (!cfg.Tbar_rule.empty()) {
      const Index f0 = f_rule.evaluate(n, 0, m, 0);
      tbars = {IntegerRule::parse(cfg.Tbar_rule).evaluate(n, 0, m, f0)};
    }
    for (Index tbar : tbars) {
      GroupSetup s;
      s.n = n;
      s.Tbar = tbar;
      s.f = f_rule.evaluate(n, tbar, m, 0);
      s.p = p_rule.evaluate(n, tbar, m, s.f);
      s.system = custom ? *custom : system_for(cfg, n, s.p);
      out.push_back(std::move(s));
    }
  }
  return out;
}

struct GroupContext {
  const ExperimentConfig& cfg;
  const GroupSetup& setup;
  SystemSimulator simulator;
  FrequencyResponseEvaluator truth;
  std::vector<double> true_poles;
  std::vector<double> bode_omegas;
  bool rejection;
};

RepeatRow run_attempt(const GroupContext& ctx, Index attempt) {
  const auto& s = ctx.setup;
  RepeatRow row;
  row.attempt = attempt;
  row.seed = rng::derive_seed(ctx.cfg.base_seed, {static_cast<std::uint64_t>(s.n), static_cast<std::uint64_t>(s.Tbar),
                                                  static_cast<std::uint64_t>(attempt)});
  auto fail = [&](const Error& e) {
    row.ok = false;
    row.failure_stage = e.stage();
    row.failure_code = std::string(to_string(e.code()));
    row.failure_message = e.detail();
  };
  const SubspaceConfig sc{s.f, s.p, s.n};
  Dataset data;
  std::optional<SubspaceFit> fit;
  try {
    data = ctx.simulator.simulate(s.Tbar + 1, row.seed);
    fit = subspace_identify(data, sc);
  } catch (const Error& e) {
    fail(e.stage().empty() ? e.at_stage("simulate") : e);
    return row;
  }
  row.rho_A_star = fit->rho_A_star;
  row.unstable_ls = fit->rho_A_star >= 1.0;
  if (ctx.rejection && !row.unstable_ls) return row;

  row.s5_run = true;
  try {
    const S5Result res = s5_from_subspace(data, std::move(*fit));
    row.rho_A_hat = res.diagnostics.rho_A_hat;
    row.rho_Au_hat = res.diagnostics.rho_Au_hat;
    row.sigma_R = res.diagnostics.sigma_R;
    row.sylvester_residual = res.diagnostics.sylvester_residual;
    row.stages = res.diagnostics.stages;
    row.total_seconds = res.diagnostics.total_seconds;

    const FrequencyResponseEvaluator est(res.model());
    const HinfReport h = hinf_report(ctx.truth, est, ctx.cfg.grid_points);
    row.hinf_hard = h.hard_error;
    row.hinf_soft = h.soft_error;
    row.hinf_argmax = h.argmax_omega;
    row.pole_magnitudes = pole_magnitudes(res.A_hat);
    row.au_error = linalg::largest_singular_value(res.A_u_hat - ctx.simulator.input_law().transition);
    row.eig_distance = 0.0;
    const std::size_t k = std::min(row.pole_magnitudes.size(), ctx.true_poles.size());
    for (std::size_t i = 0; i < k; ++i) {
      row.eig_distance = std::max(row.eig_distance, std::abs(row.pole_magnitudes[i] - ctx.true_poles[i]));
    }
    if (!ctx.bode_omegas.empty()) row.bode = response_magnitudes(est, ctx.bode_omegas);
  } catch (const Error& e) {
    fail(e);
  }
  return row;
}

std::vector<RepeatRow> run_batch(const GroupContext& ctx, Index first, Index count, unsigned jobs) {
  std::vector<RepeatRow> out(static_cast<std::size_t>(count));
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (workers == 1) {
    for (Index i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = run_attempt(ctx, first + i);
    return out;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (true) {
      const Index i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[static_cast<std::size_t>(i)] = run_attempt(ctx, first + i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

GroupResult run_group(const ExperimentConfig& cfg, const GroupSetup& setup, const RunOptions& options) {
  const bool rejection = cfg.target_unstable_count > 0;
  std::vector<double> bode_omegas;
  if (cfg.bode_points >= 2 && cfg.bode_repeats > 0) bode_omegas = frequency_grid(kSoftOmegaMax, cfg.bode_points);
  SimulationOptions sim_opts;
  sim_opts.init = cfg.init;
  sim_opts.noise = cfg.noise;
  GroupContext ctx{cfg,
                   setup,
                   SystemSimulator(setup.system.model, setup.system.input_law, sim_opts),
                   FrequencyResponseEvaluator(setup.system.model),
                   pole_magnitudes(setup.system.model.A),
                   bode_omegas,
                   rejection};

  GroupResult g;
  g.n = setup.n;
  g.Tbar = setup.Tbar;
  g.f = setup.f;
  g.p = setup.p;
  g.true_pole_magnitudes = ctx.true_poles;
  g.bode_omegas = bode_omegas;
  g.bode_columns = ctx.truth.columns();
  if (!bode_omegas.empty()) g.true_bode = response_magnitudes(ctx.truth, bode_omegas);

  // Memory per draw grows like n^2 T; big systems run one draw at a time.
  const unsigned jobs = setup.n >= 512 ? 1u : std::max(1u, options.jobs);
  emit(options, "group n=" + std::to_string(g.n) + " Tbar=" + std::to_string(g.Tbar) + " f=" + std::to_string(g.f) +
                    " p=" + std::to_string(g.p));

  if (!rejection) {
    const auto rows = run_batch(ctx, 0, cfg.repeats, jobs);
    g.attempts = cfg.repeats;
    for (const auto& r : rows) {
      g.unstable_count += r.unstable_ls ? 1 : 0;
      g.failures += r.ok ? 0 : 1;
    }
    g.rows = rows;
    return g;
  }

  const Index batch = static_cast<Index>(jobs) * (setup.n >= 256 ? 1 : 32);
  Index next = 0;
  Index counted = 0;
  Index last_report = 0;
  while (next < cfg.max_attempts && g.unstable_count < cfg.target_unstable_count) {
    const Index count = std::min(batch, cfg.max_attempts - next);
    auto rows = run_batch(ctx, next, count, jobs);
    for (auto& r : rows) {
      if (g.unstable_count >= cfg.target_unstable_count) break;
      counted = r.attempt + 1;
      if (r.unstable_ls) {
        ++g.unstable_count;
        g.failures += r.ok ? 0 : 1;
        g.rows.push_back(std::move(r));
      } else if (!r.ok) {
        ++g.failures;
        g.rows.push_back(std::move(r));
      }
    }
    next += count;
    if (next - last_report >= 10000) {
      last_report = next;
      emit(options, "  " + std::to_string(next) + " attempts, " + std::to_string(g.unstable_count) + " unstable");
    }
  }
  g.attempts = counted;
  if (g.unstable_count < cfg.target_unstable_count) {
    g.status = std::string(to_string(ErrorCode::AttemptBudgetExhausted));
    emit(options, "  warning: attempt budget exhausted after " + std::to_string(g.attempts) + " draws (" +
                      std::to_string(g.unstable_count) + " unstable LS estimates)");
  }
  return g;
}

ExperimentRecord run_checked(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  if (cfg.mode == ExperimentMode::LowDim && cfg.target_unstable_count > 0) {
    for (Index t : cfg.Tbar_values) {
      if (t >= 1280) {
        emit(options, "warning: Tbar=" + std::to_string(t) +
                          " has an unstable-LS incidence near 0.07%; expect about 1450 draws per kept repeat");
      }
    }
  }
  ExperimentRecord rec;
  rec.config = cfg;
  for (const auto& setup : plan_groups(cfg)) rec.groups.push_back(run_group(cfg, setup, options));
  return rec;
}

void require_mode(const ExperimentConfig& cfg, ExperimentMode mode) {
  if (cfg.mode != mode) {
    throw Error(ErrorCode::InvalidArgument, "config mode is '" + to_string(cfg.mode) + "', expected '" +
                                                to_string(mode) + "'");
  }
}

std::string csv_line(std::initializer_list<std::string> fields) {
  std::string out;
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out += ',';
    out += f;
    first = false;
  }
  out += '\n';
  return out;
}

std::string num(double v) { return io::format_double(v); }
std::string num(Index v) { return std::to_string(v); }

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::LowDim: return "lowdim";
    case ExperimentMode::HighDim: return "highdim";
    case ExperimentMode::Consistency: return "consistency";
    case ExperimentMode::Custom: return "custom";
  }
  return "lowdim";
}

ExperimentMode parse_mode(const std::string& text) {
  if (text == "lowdim") return ExperimentMode::LowDim;
  if (text == "highdim") return ExperimentMode::HighDim;
  if (text == "consistency") return ExperimentMode::Consistency;
  if (text == "custom") return ExperimentMode::Custom;
  bad_config("unknown mode '" + text + "' (lowdim | highdim | consistency | custom)");
}

IntegerRule IntegerRule::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      bad_config("rule '" + text + "' has a malformed number '" + s + "'");
    }
  };
  IntegerRule r;
  if (parts.size() == 2 && parts[0] == "const") {
    r.kind = Kind::Const;
  } else if (parts.size() == 2 && parts[0] == "order_plus") {
    r.kind = Kind::OrderPlus;
  } else if (parts.size() == 2 && parts[0] == "log_tbar") {
    r.kind = Kind::LogTbar;
  } else if (parts.size() == 3 && parts[0] == "excitation") {
    r.kind = Kind::Excitation;
    r.offset = number(parts[2]);
  } else {
    bad_config("malformed rule '" + text + "' (const:k | order_plus:k | log_tbar:c | excitation:c:offset)");
  }
  r.scale = number(parts[1]);
  return r;
}

std::string IntegerRule::to_string() const {
  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  switch (kind) {
    case Kind::Const: return "const:" + fmt(scale);
    case Kind::OrderPlus: return "order_plus:" + fmt(scale);
    case Kind::LogTbar: return "log_tbar:" + fmt(scale);
    case Kind::Excitation: return "excitation:" + fmt(scale) + ":" + fmt(offset);
  }
  return {};
}

Index IntegerRule::evaluate(Index order, Index tbar, Index inputs, Index future_lag) const {
  switch (kind) {
    case Kind::Const: return static_cast<Index>(std::llround(scale));
    case Kind::OrderPlus: return order + static_cast<Index>(std::llround(scale));
    case Kind::LogTbar:
      if (tbar < 2) bad_config("log_tbar rule needs a known Tbar");
      return static_cast<Index>(std::ceil(scale * std::log(static_cast<double>(tbar))));
    case Kind::Excitation:
      return static_cast<Index>(
          std::ceil(scale * static_cast<double>(inputs + 2) * static_cast<double>(future_lag) + offset));
  }
  return 0;
}

ExperimentConfig ExperimentConfig::defaults(ExperimentMode mode) {
  ExperimentConfig c;
  c.mode = mode;
  c.max_attempts = 2'000'000;
  switch (mode) {
    case ExperimentMode::LowDim:
      c.orders = {5};
      c.Tbar_values = {320, 640, 1280};
      c.f_rule = "const:10";
      c.p_rule = "log_tbar:5";
      c.target_unstable_count = 100;
      break;
    case ExperimentMode::HighDim:
      c.orders = {16, 64, 256, 1024};
      c.Tbar_rule = "excitation:5:500";
      c.f_rule = "order_plus:10";
      c.p_rule = "order_plus:10";
      c.target_unstable_count = 50;
      break;
    case ExperimentMode::Consistency:
      c.orders = {5};
      c.Tbar_values = {320, 1280, 5120};
      c.f_rule = "const:10";
      c.p_rule = "log_tbar:5";
      c.repeats = 200;
      break;
    case ExperimentMode::Custom:
      c.Tbar_values = {1280};
      c.f_rule = "const:10";
      c.p_rule = "log_tbar:5";
      c.repeats = 100;
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (Tbar_rule.empty() == Tbar_values.empty()) bad_config("give exactly one of Tbar_values and Tbar_rule");
  for (Index t : Tbar_values) {
    if (t < 2) bad_config("Tbar values must be at least 2");
  }
  if (!Tbar_rule.empty()) {
    if (IntegerRule::parse(Tbar_rule).kind != IntegerRule::Kind::Excitation) {
      bad_config("Tbar_rule must be an excitation rule");
    }
    if (IntegerRule::parse(f_rule).kind == IntegerRule::Kind::LogTbar) {
      bad_config("f_rule cannot depend on Tbar when Tbar comes from a rule");
    }
  }
  const auto f = IntegerRule::parse(f_rule);
  const auto p = IntegerRule::parse(p_rule);
  if (f.kind == IntegerRule::Kind::Excitation || p.kind == IntegerRule::Kind::Excitation) {
    bad_config("lag rules cannot be excitation rules");
  }
  if (mode == ExperimentMode::HighDim) {
    if (orders.empty()) bad_config("orders must not be empty");
    for (Index n : orders) {
      if (n < 4 || n % 2) bad_config("high-dimensional orders must be even and >= 4");
    }
  }
  if (mode == ExperimentMode::Custom && model_path.empty()) bad_config("custom mode needs model_path");
  if (target_unstable_count < 0 || repeats < 0 || max_attempts < 0) bad_config("counts must be non-negative");
  if (target_unstable_count == 0 && repeats == 0) bad_config("set target_unstable_count or repeats");
  if (target_unstable_count > 0 && max_attempts < 1) bad_config("max_attempts must be positive");
  if (grid_points < 2) bad_config("grid_points must be at least 2");
}

ExperimentConfig config_from_json(const std::string& text) {
  return config_from(parse_document(text, "experiment config"));
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

SummaryStats summarize(std::vector<double> values) {
  SummaryStats s;
  s.count = static_cast<Index>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const std::size_t last = values.size() - 1;
  s.min = values.front();
  s.max = values.back();
  s.median = values[last / 2];
  s.q1 = values[last / 4];
  s.q3 = values[(3 * last) / 4];
  return s;
}

GroupAggregate aggregate(const GroupResult& g) {
  GroupAggregate a;
  a.unstable_incidence =
      g.attempts > 0 ? static_cast<double>(g.unstable_count) / static_cast<double>(g.attempts) : 0.0;
  for (const auto& r : g.rows) {
    if (!r.ok || !r.s5_run) continue;
    ++a.kept;
    if (!(r.rho_A_hat < 1.0) || !(r.rho_Au_hat < 1.0)) a.all_stable = false;
  }
  a.stats["hinf_hard"] = summarize(metric_values(g, [](const RepeatRow& r) { return r.hinf_hard; }));
  a.stats["hinf_soft"] = summarize(metric_values(g, [](const RepeatRow& r) { return r.hinf_soft; }));
  a.stats["au_error"] = summarize(metric_values(g, [](const RepeatRow& r) { return r.au_error; }));
  a.stats["eig_distance"] = summarize(metric_values(g, [](const RepeatRow& r) { return r.eig_distance; }));
  a.stats["rho_A_hat"] = summarize(metric_values(g, [](const RepeatRow& r) { return r.rho_A_hat; }));
  a.stats["rho_A_star"] = summarize(metric_values(g, [](const RepeatRow& r) { return r.rho_A_star; }));
  a.stats["dominant_pole"] = summarize(metric_values(
      g, [](const RepeatRow& r) { return r.pole_magnitudes.empty() ? 0.0 : r.pole_magnitudes.front(); }));

  std::map<std::string, double> sums;
  Index timed_rows = 0;
  for (const auto& r : g.rows) {
    if (!r.ok || !r.s5_run) continue;
    ++timed_rows;
    a.sum_total_seconds += r.total_seconds;
    for (const auto& s : r.stages) sums[s.name] += s.seconds;
  }
  if (timed_rows > 0) {
    a.mean_total_seconds = a.sum_total_seconds / static_cast<double>(timed_rows);
    for (const auto& [name, v] : sums) a.mean_stage_seconds[name] = v / static_cast<double>(timed_rows);
  }
  return a;
}

ConsistencyAnalysis analyze(const ExperimentRecord& record, Index order) {
  ConsistencyAnalysis c;
  for (const auto& g : record.groups) {
    if (g.n != order) continue;
    const auto a = aggregate(g);
    c.Tbar.push_back(g.Tbar);
    c.median_au_error.push_back(a.stats.at("au_error").median);
    c.median_eig_distance.push_back(a.stats.at("eig_distance").median);
    c.median_hinf_soft.push_back(a.stats.at("hinf_soft").median);
    c.median_hinf_hard.push_back(a.stats.at("hinf_hard").median);
  }
  c.au_error_decreasing = strictly_decreasing(c.median_au_error);
  c.eig_distance_decreasing = strictly_decreasing(c.median_eig_distance);
  c.hinf_soft_decreasing = strictly_decreasing(c.median_hinf_soft);
  c.hinf_hard_nonincreasing = nonincreasing(c.median_hinf_hard);
  bool positive = !c.median_au_error.empty();
  for (double v : c.median_au_error) positive = positive && v > 0.0;
  if (positive) c.au_error_loglog_slope = loglog_slope(c.Tbar, c.median_au_error);
  return c;
}

ExperimentRecord run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  return run_checked(cfg, options);
}

ExperimentRecord run_lowdim(const ExperimentConfig& cfg, const RunOptions& options) {
  require_mode(cfg, ExperimentMode::LowDim);
  return run_checked(cfg, options);
}

ExperimentRecord run_highdim(const ExperimentConfig& cfg, const RunOptions& options) {
  require_mode(cfg, ExperimentMode::HighDim);
  return run_checked(cfg, options);
}

ExperimentRecord run_consistency(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.mode != ExperimentMode::Consistency && cfg.mode != ExperimentMode::Custom) {
    require_mode(cfg, ExperimentMode::Consistency);
  }
  return run_checked(cfg, options);
}

std::string record_to_json(const ExperimentRecord& record, bool include_timings) {
  json doc;
  doc["format"] = "s5id-experiment-record";
  doc["version"] = 1;
  doc["metadata"] = {
      {"tool", kToolName},
      {"tool_version", kToolVersion},
      {"base_seed", record.config.base_seed},
      {"seed_derivation", "splitmix64 chain of (base_seed, n, Tbar, attempt)"},
      {"median_convention", "lower of the two middle values for even counts"},
      {"quartile_convention", "sorted[floor((N-1) q)]"},
      {"frequency_grid", "inclusive equally spaced grid_points samples; soft over [0, 3], hard over [0, pi] "
                         "joined with the soft grid"},
      {"incidence", "unstable_count / attempts, attempts counted up to the last kept draw"},
      {"timings_included", include_timings}};
  doc["config"] = config_json(record.config);
  json groups = json::array();
  for (const auto& g : record.groups) groups.push_back(group_to_json(g, include_timings));
  doc["groups"] = std::move(groups);
  doc["analysis"] = analysis_to_json(record);
  return doc.dump(1) + "\n";
}

ExperimentRecord record_from_json(const std::string& text) {
  const json doc = parse_document(text, "experiment record");
  if (doc.value("format", std::string()) != "s5id-experiment-record") {
    throw Error(ErrorCode::ParseError, "not an experiment record");
  }
  ExperimentRecord rec;
  rec.config = config_from(doc.at("config"));
  const bool include_timings = doc.at("metadata").value("timings_included", true);
  for (const json& gj : doc.at("groups")) {
    GroupResult g;
    g.n = get_field<Index>(gj, "n");
    g.Tbar = get_field<Index>(gj, "Tbar");
    g.f = get_field<Index>(gj, "f");
    g.p = get_field<Index>(gj, "p");
    g.attempts = get_field<Index>(gj, "attempts");
    g.unstable_count = get_field<Index>(gj, "unstable_count");
    g.failures = get_field<Index>(gj, "failures");
    g.status = get_field<std::string>(gj, "status");
    g.true_pole_magnitudes = get_field<std::vector<double>>(gj, "true_pole_magnitudes");
    for (const json& rj : gj.at("rows")) g.rows.push_back(row_from_json(rj));
    const json recomputed = aggregate_to_json(aggregate(g), include_timings);
    if (recomputed != gj.at("aggregate")) {
      throw Error(ErrorCode::ParseError, "aggregate of group n=" + std::to_string(g.n) + " Tbar=" +
                                             std::to_string(g.Tbar) + " does not match its rows");
    }
    rec.groups.push_back(std::move(g));
  }
  if (analysis_to_json(rec) != doc.at("analysis")) {
    throw Error(ErrorCode::ParseError, "analysis section does not match the rows");
  }
  return rec;
}

void write_csv_exports(const ExperimentRecord& record, const std::filesystem::path& dir) {
  std::string poles = "n,Tbar,source,attempt,rank,magnitude\n";
  std::string hinf = "n,Tbar,f,p,attempt,seed,unstable_ls,rho_A_star,rho_A_hat,hinf_hard,hinf_soft\n";
  std::string timings = "n,Tbar,attempt,stage,seconds,factorizations\n";
  std::string bode = "n,Tbar,source,attempt,omega,output,input,magnitude\n";
  for (const auto& g : record.groups) {
    const std::string key = num(g.n) + "," + num(g.Tbar);
    for (std::size_t k = 0; k < g.true_pole_magnitudes.size(); ++k) {
      poles += csv_line({key, "true", "-1", std::to_string(k), num(g.true_pole_magnitudes[k])});
    }
    Index bode_written = 0;
    auto bode_rows = [&](const Matrix& mags, const std::string& source, Index attempt) {
      if (mags.rows() != static_cast<Index>(g.bode_omegas.size())) return;
      const Index width = std::max<Index>(g.bode_columns, 1);
      for (Index w = 0; w < mags.rows(); ++w) {
        for (Index c = 0; c < mags.cols(); ++c) {
          bode += csv_line({key, source, num(attempt), num(g.bode_omegas[static_cast<std::size_t>(w)]),
                            std::to_string(c / width + 1), std::to_string(c % width + 1), num(mags(w, c))});
        }
      }
    };
    bode_rows(g.true_bode, "true", -1);
    for (const auto& r : g.rows) {
      if (!r.ok || !r.s5_run) continue;
      for (std::size_t k = 0; k < r.pole_magnitudes.size(); ++k) {
        poles += csv_line({key, "s5", num(r.attempt), std::to_string(k), num(r.pole_magnitudes[k])});
      }
      hinf += csv_line({key, num(g.f), num(g.p), num(r.attempt), std::to_string(r.seed), r.unstable_ls ? "1" : "0",
                        num(r.rho_A_star), num(r.rho_A_hat), num(r.hinf_hard), num(r.hinf_soft)});
      for (const auto& s : r.stages) {
        timings += csv_line({key, num(r.attempt), s.name, num(s.seconds), std::to_string(s.factorizations)});
      }
      timings += csv_line({key, num(r.attempt), "total", num(r.total_seconds), ""});
      if (bode_written < record.config.bode_repeats && r.bode.size() > 0) {
        bode_rows(r.bode, "s5", r.attempt);
        ++bode_written;
      }
    }
  }
  io::write_text(dir / "poles.csv", poles);
  io::write_text(dir / "hinf.csv", hinf);
  io::write_text(dir / "timings.csv", timings);
  io::write_text(dir / "bode.csv", bode);
}

void write_outputs(const ExperimentRecord& record, const std::filesystem::path& dir) {
  io::write_text(dir / "record.json", record_to_json(record));
  write_csv_exports(record, dir);
}

SubspaceConfig IdentifyConfig::resolve(const Dataset& data) const {
  if (order < 1) bad_config("identify needs a positive 'order'");
  SubspaceConfig sc;
  sc.order = order;
  const Index m = data.inputs.rows();
  sc.future_lag = future_lag ? *future_lag : IntegerRule::parse(f_rule).evaluate(order, data.horizon(), m, 0);
  sc.past_lag =
      past_lag ? *past_lag : IntegerRule::parse(p_rule).evaluate(order, data.horizon(), m, sc.future_lag);
  sc.validate();
  return sc;
}

IdentifyConfig identify_config_from_json(const std::string& text) {
  const json doc = parse_document(text, "identify config");
  IdentifyConfig c;
  for (const auto& [key, value] : doc.items()) {
    if (key == "order") {
      c.order = get_field<Index>(doc, "order");
    } else if (key == "f_rule") {
      c.f_rule = get_field<std::string>(doc, "f_rule");
    } else if (key == "p_rule") {
      c.p_rule = get_field<std::string>(doc, "p_rule");
    } else if (key == "future_lag") {
      c.future_lag = get_field<Index>(doc, "future_lag");
    } else if (key == "past_lag") {
      c.past_lag = get_field<Index>(doc, "past_lag");
    } else {
      bad_config("unknown field '" + key + "'");
    }
  }
  return c;
}

std::string identification_to_json(const S5Result& result, bool include_timings) {
  auto matrix = [](const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  const auto& dg = result.diagnostics;
  json doc;
  doc["format"] = "s5id-identification";
  doc["version"] = 1;
  doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  doc["config"] = {{"order", result.config.order},
                   {"future_lag", result.config.future_lag},
                   {"past_lag", result.config.past_lag}};
  doc["model"] = json::parse(io::model_to_json(result.model()));
  doc["A_star"] = matrix(result.ls.A_star);
  doc["A_u_hat"] = matrix(result.A_u_hat);
  doc["M_hat"] = matrix(result.M_hat);
  doc["canonical_correlations"] = std::vector<double>(result.singular_values.data(),
                                                      result.singular_values.data() + result.singular_values.size());
  doc["pole_magnitudes"] = pole_magnitudes(result.A_hat);
  json fact = json::object();
  for (const auto& s : dg.stages) fact[s.name] = s.factorizations;
  doc["diagnostics"] = {{"rho_A_star", dg.rho_A_star},
                        {"rho_A_hat", dg.rho_A_hat},
                        {"rho_Au_hat", dg.rho_Au_hat},
                        {"sigma_R", dg.sigma_R},
                        {"sigma_R_input", dg.sigma_R_input},
                        {"sylvester_residual", dg.sylvester_residual},
                        {"factorizations", fact},
                        {"total_factorizations", dg.total_factorizations}};
  if (include_timings) {
    json t = json::object();
    for (const auto& s : dg.stages) t[s.name] = s.seconds;
    doc["diagnostics"]["timings"] = {{"stages", t}, {"total_seconds", dg.total_seconds}};
  }
  return doc.dump(2) + "\n";
}

std::string identify_from_file(const std::filesystem::path& data_path, const IdentifyConfig& cfg,
                               bool include_timings) {
  const Dataset data = io::read_dataset(data_path);
  return identification_to_json(s5_identify(data, cfg.resolve(data)), include_timings);
}

SimulateConfig simulate_config_from_json(const std::string& text) {
  const json doc = parse_document(text, "simulate config");
  SimulateConfig c;
  for (const auto& [key, value] : doc.items()) {
    if (key == "system") {
      c.system = get_field<std::string>(doc, "system");
    } else if (key == "order") {
      c.order = get_field<Index>(doc, "order");
    } else if (key == "past_lag") {
      c.past_lag = get_field<Index>(doc, "past_lag");
    } else if (key == "Tbar") {
      c.Tbar = get_field<Index>(doc, "Tbar");
    } else if (key == "init") {
      c.init = parse_init(get_field<std::string>(doc, "init"));
    } else if (key == "noise") {
      c.noise = parse_noise(get_field<std::string>(doc, "noise"));
    } else {
      bad_config("unknown field '" + key + "'");
    }
  }
  if (c.Tbar < 1) bad_config("Tbar must be positive");
  return c;
}

ExampleSystem load_system(const SimulateConfig& cfg) {
  if (cfg.system == "lowdim") return build_lowdim_example();
  if (cfg.system == "highdim") return build_highdim_example(cfg.order, cfg.past_lag);
  std::optional<Var1Model> law;
  ExampleSystem sys;
  sys.model = io::read_model(cfg.system, &law);
  if (!law) throw Error(ErrorCode::ParseError, "model document '" + cfg.system + "' has no 'input_law'");
  sys.input_law = *law;
  return sys;
}

}  // namespace s5id
