// waemdp: simulate, train, certify, check, and export latent-space models.
//
// Exit codes: 0 success, 1 internal error, 2 configuration or parse error,
// 3 training diverged, 4 extraction budget exceeded.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "waemdp/certify/property.hpp"
#include "waemdp/certify/value_iteration.hpp"
#include "waemdp/env/environments.hpp"
#include "waemdp/env/trace_io.hpp"
#include "waemdp/latent/certification.hpp"
#include "waemdp/latent/explicit.hpp"
#include "waemdp/latent/model_file.hpp"
#include "waemdp/wae/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace waemdp;

namespace {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string log_level = "info";
  std::string format = "text";

  [[nodiscard]] Level level() const {
    if (log_level == "error") return Level::Error;
    if (log_level == "warn") return Level::Warn;
    if (log_level == "debug") return Level::Debug;
    return Level::Info;
  }
  [[nodiscard]] std::string path(const std::string& name) const { return (fs::path(out_dir) / name).string(); }
  [[nodiscard]] json to_json() const { return {{"seed", seed}, {"out_dir", out_dir}, {"log_level", log_level}, {"format", format}}; }
};

Globals g;

void log(Level l, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (l <= g.level()) std::cerr << "[" << names[static_cast<int>(l)] << "] " << msg << '\n';
}

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream o;
  o << std::put_time(std::gmtime(&t), "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// Records the command line and resolved configuration so the run can be re-executed.
void write_run_file(const std::string& command, const std::vector<std::string>& argv, const json& config, const json& outputs) {
  write_json(g.path("run.json"), {{"command", command},
                                  {"argv", argv},
                                  {"globals", g.to_json()},
                                  {"config", config},
                                  {"outputs", outputs},
                                  {"timestamp", timestamp()}});
}

void emit(const json& j, const std::string& text) {
  if (g.format == "json")
    std::cout << j.dump(2) << '\n';
  else
    std::cout << text;
}

env::PolicyPtr make_policy(const std::string& name, const env::EnvironmentBundle& bundle, const env::EpsilonResetMdp& wrapped) {
  if (name == "scripted") return bundle.scripted;
  if (name == "uniform") return env::uniform_policy(wrapped.action_space());
  throw ConfigError("unknown policy '" + name + "' (known: scripted, uniform)");
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string env;
  std::string policy = "scripted";
  std::string model;
  int episodes = 100;
  long max_steps = 1000;
  double reset_epsilon = 0.5;
  std::string trace;

  [[nodiscard]] json to_json() const {
    return {{"env", env}, {"policy", policy}, {"model", model}, {"episodes", episodes}, {"max_steps", max_steps},
            {"reset_epsilon", reset_epsilon}, {"trace", trace}};
  }
};

int cmd_simulate(SimulateArgs a, const std::vector<std::string>& argv) {
  if (a.episodes < 1) throw ConfigError("episodes must be positive");
  if (a.trace.empty()) a.trace = g.path("trace.jsonl");
  const auto bundle = env::make_environment(a.env);
  auto wrapped = std::make_shared<env::EpsilonResetMdp>(bundle.env, a.reset_epsilon);
  env::PolicyPtr pi;
  if (!a.model.empty()) {
    const auto f = latent::ModelFile::load(a.model);
    pi = std::make_shared<latent::LatentFlowPolicy>(f.model, wrapped);
    a.policy = "latent";
  } else {
    pi = make_policy(a.policy, bundle, *wrapped);
  }
  log(Level::Info, "simulating " + std::to_string(a.episodes) + " episodes of " + a.env + " under " + a.policy);
  Rng rng(g.seed);
  std::ofstream out(a.trace);
  if (!out) throw ConfigError("cannot write " + a.trace);
  double total_return = 0.0;
  long total_steps = 0;
  for (int ep = 0; ep < a.episodes; ++ep) {
    const env::Episode e = env::run_episode(*wrapped, *pi, rng, ep, a.max_steps);
    for (const auto& x : e.steps) out << env::to_json(x).dump() << '\n';
    total_return += e.ret;
    total_steps += static_cast<long>(e.steps.size());
  }
  const json summary{{"episodes", a.episodes},
                     {"policy", a.policy},
                     {"mean_return", total_return / a.episodes},
                     {"mean_length", static_cast<double>(total_steps) / a.episodes},
                     {"transitions", total_steps},
                     {"trace", a.trace}};
  write_run_file("simulate", argv, a.to_json(), {{"trace", a.trace}});
  std::ostringstream text;
  text << "episodes     " << a.episodes << "\nmean return  " << summary["mean_return"].get<double>() << "\nmean length  "
       << summary["mean_length"].get<double>() << "\ntrace        " << a.trace << '\n';
  emit(summary, text.str());
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string env;
  std::string policy = "scripted";
  int n_bits = 6;
  int latent_actions = 0;
  int hidden = 64;
  double reset_epsilon = 0.5;
  std::optional<double> beta;
  wae::TrainingConfig training;
  latent::Temperatures temps;
  double lr = 1e-3;
  long checkpoint_every = 0;
  bool plot = false;
  std::string out;
  std::string metrics;
  std::string checkpoint;
  std::string resume;
  bool steps_given = false;

  [[nodiscard]] json to_json() const {
    return {{"env", env}, {"policy", policy}, {"n_bits", n_bits}, {"latent_actions", latent_actions}, {"hidden", hidden},
            {"reset_epsilon", reset_epsilon}, {"training", training.to_json()}, {"temperatures", temps.to_json()},
            {"checkpoint_every", checkpoint_every}, {"out", out}, {"metrics", metrics}, {"checkpoint", checkpoint},
            {"resume", resume}};
  }
};

void write_gnuplot(const std::string& metrics, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'step'\n"
      << "plot '" << metrics << "' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines\n";
}

int cmd_train(TrainArgs a, const std::vector<std::string>& argv) {
  if (a.out.empty()) a.out = g.path("model.json");
  if (a.metrics.empty()) a.metrics = g.path("metrics.csv");
  if (a.checkpoint.empty()) a.checkpoint = g.path("checkpoint.json");
  if (a.checkpoint_every < 0) throw ConfigError("checkpoint interval must be nonnegative");

  std::unique_ptr<wae::Trainer> trainer;
  std::shared_ptr<const env::EpsilonResetMdp> wrapped;
  if (!a.resume.empty()) {
    const json cp = read_json(a.resume);
    try {
      a.env = cp.at("env");
      a.policy = cp.at("policy");
      a.reset_epsilon = cp.at("reset_epsilon");
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
    const auto bundle = env::make_environment(a.env);
    wrapped = std::make_shared<env::EpsilonResetMdp>(bundle.env, a.reset_epsilon);
    trainer = wae::Trainer::resume(cp.at("trainer"), wrapped, make_policy(a.policy, bundle, *wrapped),
                                   a.steps_given ? std::optional<long>(a.training.steps) : std::nullopt);
    a.training = trainer->config();
    log(Level::Info, "resumed " + a.resume + " at step " + std::to_string(trainer->step_count()));
  } else {
    if (a.beta) a.training.beta_ss = a.training.beta_trans = *a.beta;
    a.training.seed = g.seed;
    a.training.min_adam.lr = a.lr;
    a.training.critic.hidden = {a.hidden, a.hidden};
    a.training.validate();
    const auto bundle = env::make_environment(a.env);
    wrapped = std::make_shared<env::EpsilonResetMdp>(bundle.env, a.reset_epsilon);
    latent::LatentConfig c;
    c.n_bits = a.n_bits;
    c.atomic_props = wrapped->atomic_props();
    c.state_dim = wrapped->state_dim();
    c.actions = wrapped->action_space();
    c.latent_actions = a.latent_actions;
    c.hidden = c.made_hidden = {a.hidden, a.hidden};
    c.temps = a.temps;
    trainer = std::make_unique<wae::Trainer>(latent::LatentModel(c, g.seed), wrapped, make_policy(a.policy, bundle, *wrapped), a.training);
  }
  for (double lambda : {a.temps.encoder, a.temps.transition, a.temps.prior}) {
    const double need = wae::TrainingConfig::min_beta_for_metric(lambda);
    if (std::min(a.training.beta_ss, a.training.beta_trans) < need)
      log(Level::Warn, "beta below 1/lambda = " + std::to_string(need) + "; the latent-metric guarantee does not apply");
  }

  auto save_checkpoint = [&](const std::string& path) {
    write_json(path, {{"env", a.env}, {"policy", a.policy}, {"reset_epsilon", a.reset_epsilon}, {"trainer", trainer->checkpoint()}});
  };
  std::ofstream metrics(a.metrics);
  if (!metrics) throw ConfigError("cannot write " + a.metrics);
  wae::write_metrics_header(metrics);
  const json outputs{{"model", a.out}, {"metrics", a.metrics}, {"checkpoint", a.checkpoint}};
  write_run_file("train", argv, a.to_json(), outputs);

  log(Level::Info, "training " + std::to_string(a.training.steps) + " steps on " + a.env);
  try {
    // The divergence checkpoint holds the last good state in the trainer's own format.
    const std::string last_good = a.checkpoint + ".last_good";
    trainer->set_divergence_checkpoint(last_good);
    trainer->run([&](const wae::MetricsRow& r) {
      wae::write_metrics_row(metrics, r);
      if (r.step % 1000 == 0) log(Level::Debug, "step " + std::to_string(r.step) + " recon " + std::to_string(r.recon));
      if (a.checkpoint_every > 0 && (r.step + 1) % a.checkpoint_every == 0) save_checkpoint(a.checkpoint);
    });
  } catch (const DivergenceDetected&) {
    metrics.flush();
    save_checkpoint(a.checkpoint);
    throw;
  }
  save_checkpoint(a.checkpoint);
  latent::ModelFile::neural(latent::LatentModel::from_json(trainer->model().to_json()), a.env, a.reset_epsilon).save(a.out);
  if (a.plot) write_gnuplot(a.metrics, g.path("metrics.gp"));

  const json summary{{"steps", trainer->step_count()}, {"min_updates", trainer->min_updates()}, {"max_updates", trainer->max_updates()},
                     {"model", a.out}, {"metrics", a.metrics}, {"checkpoint", a.checkpoint}};
  std::ostringstream text;
  text << "steps        " << trainer->step_count() << "\nmodel        " << a.out << "\nmetrics      " << a.metrics << '\n';
  emit(summary, text.str());
  return 0;
}

// ---------------------------------------------------------------- certify / check / export

struct ModelArgs {
  std::string model;
  std::string env;  // overrides the model file's environment
  std::size_t budget = 1 << 16;

  [[nodiscard]] latent::ModelFile load() const {
    latent::ModelFile f = latent::ModelFile::load(model);
    if (!env.empty()) f.env = env;
    return f;
  }
  [[nodiscard]] latent::ExtractOptions extract() const {
    latent::ExtractOptions o;
    o.budget = budget;
    o.seed = g.seed;
    return o;
  }
};

struct CertifyArgs {
  ModelArgs m;
  double epsilon = 0.01;
  double delta = 0.045;
  double gamma = 0.99;
  long samples = 0;
  std::string trace;
  std::string trace_policy = "scripted";
  bool no_strict = false;
  std::vector<std::string> properties;
  int value_episodes = 100;
  std::string report;

  [[nodiscard]] json to_json() const {
    return {{"model", m.model}, {"env", m.env}, {"budget", m.budget}, {"epsilon", epsilon}, {"delta", delta}, {"gamma", gamma},
            {"samples", samples}, {"trace", trace}, {"trace_policy", trace_policy}, {"strict", !no_strict},
            {"properties", properties}, {"value_episodes", value_episodes}, {"report", report}};
  }
};

int cmd_certify(CertifyArgs a, const std::vector<std::string>& argv) {
  if (a.report.empty()) a.report = g.path("report.json");
  const latent::ModelFile f = a.m.load();
  latent::CertifyOptions o;
  o.pac = {a.epsilon, a.delta, a.gamma};
  o.strict = !a.no_strict;
  o.samples = a.samples;
  o.extract = a.m.extract();
  o.properties = a.properties;
  o.value_episodes = a.value_episodes;
  o.seed = g.seed;
  std::vector<env::TransitionSample> trace;
  if (!a.trace.empty()) trace = env::read_trace(a.trace);
  const latent::CertificationReport rep =
      latent::certify_model(f.model, f.environment(), o, a.trace.empty() ? nullptr : &trace, env::policy_kind_from_string(a.trace_policy));
  json j = rep.to_json();
  j["model"] = a.m.model;
  j["env"] = f.env;
  write_json(a.report, j);
  write_run_file("certify", argv, a.to_json(), {{"report", a.report}});
  emit(j, rep.summary());
  return 0;
}

struct CheckArgs {
  ModelArgs m;
  std::string property;
  double gamma = 0.99;
  std::string dump_values;

  [[nodiscard]] json to_json() const {
    return {{"model", m.model}, {"budget", m.budget}, {"property", property}, {"gamma", gamma}, {"dump_values", dump_values}};
  }
};

std::string bit_string(std::uint64_t code, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s.push_back(((code >> (n - 1 - i)) & 1) != 0 ? '1' : '0');
  return s;
}

int cmd_check(const CheckArgs& a, const std::vector<std::string>& argv) {
  const latent::ModelFile f = a.m.load();
  const certify::Property prop = certify::parse_property(a.property, f.model->atomic_props());
  if (!(a.gamma >= 0.0 && a.gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  const latent::ExplicitLatentMdp x = latent::extract_explicit(*f.model, a.m.extract());
  const Eigen::VectorXd v = certify::value_iteration(x.mdp, x.policy, prop, a.gamma);
  const double value = v(x.mdp.s_init);
  if (!a.dump_values.empty()) {
    std::ofstream out(a.dump_values);
    if (!out) throw ConfigError("cannot write " + a.dump_values);
    out << "code,bits,value\n" << std::setprecision(17);
    for (int i = 0; i < x.mdp.n_states; ++i)
      out << x.codes[static_cast<std::size_t>(i)] << ',' << bit_string(x.codes[static_cast<std::size_t>(i)], f.model->n_bits()) << ','
          << v(i) << '\n';
  }
  write_run_file("check", argv, a.to_json(), {{"dump_values", a.dump_values}});
  const json j{{"property", a.property}, {"gamma", a.gamma}, {"value", value}, {"latent_states", x.mdp.n_states},
               {"initial_state", x.codes[static_cast<std::size_t>(x.mdp.s_init)]}, {"warnings", x.warnings}};
  std::ostringstream text;
  text << std::setprecision(12) << "V(" << a.property << ") at the latent initial state = " << value << "  (" << x.mdp.n_states
       << " latent states)\n";
  for (const auto& w : x.warnings) text << "warning: " << w << '\n';
  emit(j, text.str());
  return 0;
}

struct ExportArgs {
  ModelArgs m;
  std::string format = "tabular";
  std::string out;
};

int cmd_export(ExportArgs a, const std::vector<std::string>& argv) {
  if (a.format != "tabular") throw ConfigError("unknown export format '" + a.format + "' (known: tabular)");
  if (a.out.empty()) a.out = g.path("latent_mdp.json");
  const latent::ModelFile f = a.m.load();
  const latent::ExplicitLatentMdp x = latent::extract_explicit(*f.model, a.m.extract());
  write_json(a.out, x.to_json());
  write_run_file("export", argv, {{"model", a.m.model}, {"budget", a.m.budget}, {"format", a.format}, {"out", a.out}}, {{"latent_mdp", a.out}});
  emit({{"latent_states", x.mdp.n_states}, {"out", a.out}}, "exported " + std::to_string(x.mdp.n_states) + " latent states to " + a.out + '\n');
  return 0;
}

void add_model_options(CLI::App* sub, ModelArgs& m) {
  sub->add_option("--model", m.model, "Model file")->required();
  sub->add_option("--budget", m.budget, "Maximum number of latent states to extract");
}

int run(int argc, char** argv);

int rerun(const std::string& run_file, const std::string& out_dir) {
  const json r = read_json(run_file);
  std::vector<std::string> args = r.at("argv");
  if (!out_dir.empty()) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--out-dir") {
        ++i;
        continue;
      }
      if (args[i].rfind("--out-dir=", 0) == 0) continue;
      kept.push_back(args[i]);
    }
    args.assign({"--out-dir", out_dir});
    args.insert(args.end(), kept.begin(), kept.end());
  }
  std::vector<char*> ptrs{const_cast<char*>("waemdp")};
  for (auto& s : args) ptrs.push_back(s.data());
  return run(static_cast<int>(ptrs.size()), ptrs.data());
}

int run(int argc, char** argv) {
  g = Globals{};
  const std::vector<std::string> args(argv + 1, argv + argc);
  CLI::App app{"Wasserstein auto-encoded MDPs: learn, distill, and certify latent-space models"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out-dir", g.out_dir, "Directory for run outputs");
  app.add_option("--log-level", g.log_level, "Logging verbosity")->check(CLI::IsMember({"error", "warn", "info", "debug"}));
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "text"}));

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run a policy and write a JSONL trace");
  s->add_option("--env", sim.env, "Environment name or tabular MDP JSON")->required();
  s->add_option("--policy", sim.policy, "scripted or uniform");
  s->add_option("--model", sim.model, "Run the latent policy of this model instead");
  s->add_option("--episodes", sim.episodes, "Number of episodes");
  s->add_option("--max-steps", sim.max_steps, "Episode step limit");
  s->add_option("--reset-epsilon", sim.reset_epsilon, "Reset probability of the reset wrapper");
  s->add_option("--trace", sim.trace, "Trace path (default OUT_DIR/trace.jsonl)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a latent-space model");
  t->add_option("--env", tr.env, "Environment name or tabular MDP JSON");
  t->add_option("--policy", tr.policy, "Policy to distill: scripted or uniform");
  t->add_option("--n-bits", tr.n_bits, "Latent state bits");
  t->add_option("--latent-actions", tr.latent_actions, "Latent actions (0 keeps the ground actions)");
  t->add_option("--hidden", tr.hidden, "Hidden layer width");
  t->add_option("--batch", tr.training.batch, "Batch size");
  auto* steps_opt = t->add_option("--steps", tr.training.steps, "Training steps");
  t->add_option("--m", tr.training.m, "Max-player updates per min-player update");
  t->add_option("--beta", tr.beta, "Scale of both regularizers");
  t->add_option("--beta-ss", tr.training.beta_ss, "Steady-state regularizer scale");
  t->add_option("--beta-trans", tr.training.beta_trans, "Transition regularizer scale");
  t->add_option("--gp-coef", tr.training.gp_coef, "Gradient penalty coefficient");
  t->add_option("--lr", tr.lr, "Model learning rate");
  t->add_option("--temp-encoder", tr.temps.encoder, "Encoder temperature");
  t->add_option("--temp-transition", tr.temps.transition, "Transition temperature");
  t->add_option("--temp-prior", tr.temps.prior, "Prior temperature");
  t->add_option("--temp-policy", tr.temps.policy, "Policy temperature (0: automatic)");
  t->add_option("--temp-action-encoder", tr.temps.action_encoder, "Action encoder temperature (0: automatic)");
  t->add_option("--reset-epsilon", tr.reset_epsilon, "Reset probability of the reset wrapper");
  t->add_option("--checkpoint-every", tr.checkpoint_every, "Checkpoint interval in steps (0: only at the end)");
  t->add_option("--checkpoint", tr.checkpoint, "Checkpoint path (default OUT_DIR/checkpoint.json)");
  t->add_option("--resume", tr.resume, "Resume from a checkpoint");
  t->add_option("--out", tr.out, "Model path (default OUT_DIR/model.json)");
  t->add_option("--metrics", tr.metrics, "Metrics CSV (default OUT_DIR/metrics.csv)");
  t->add_flag("--plot", tr.plot, "Also write a gnuplot script for the metrics");

  CertifyArgs ce;
  auto* c = app.add_subcommand("certify", "Estimate local losses and bounds for a model");
  add_model_options(c, ce.m);
  c->add_option("--env", ce.m.env, "Environment (default: the model's)");
  c->add_option("--epsilon", ce.epsilon, "PAC error");
  c->add_option("--delta", ce.delta, "PAC failure probability");
  c->add_option("--gamma", ce.gamma, "Discount factor");
  c->add_option("--samples", ce.samples, "Trace length (0: the PAC requirement)");
  c->add_option("--trace", ce.trace, "Estimate from this JSONL trace instead of sampling the latent policy");
  c->add_option("--trace-policy", ce.trace_policy, "Policy that produced --trace: scripted, tabular or latent");
  c->add_flag("--no-strict", ce.no_strict, "Estimate even when the guarantees do not apply");
  c->add_option("--property", ce.properties, "Property to evaluate (repeatable)");
  c->add_option("--value-episodes", ce.value_episodes, "Episodes for the Monte-Carlo value difference");
  c->add_option("--report", ce.report, "Report path (default OUT_DIR/report.json)");

  CheckArgs ch;
  auto* k = app.add_subcommand("check", "Model check a property on the latent MDP");
  add_model_options(k, ch.m);
  k->add_option("--property", ch.property, "'C U T', 'F T' or 'F (A & X B)'")->required();
  k->add_option("--gamma", ch.gamma, "Discount factor");
  k->add_option("--dump-values", ch.dump_values, "Write per-state values to this CSV");

  ExportArgs ex;
  auto* e = app.add_subcommand("export", "Write the explicit latent MDP");
  add_model_options(e, ex.m);
  e->add_option("--format", ex.format, "Export format: tabular");
  e->add_option("--out", ex.out, "Output path (default OUT_DIR/latent_mdp.json)");

  std::string run_file, rerun_dir;
  auto* r = app.add_subcommand("rerun", "Re-execute a recorded run");
  r->add_option("run", run_file, "run.json of the run")->required();
  r->add_option("--into", rerun_dir, "Output directory for the new run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }

  try {
    if (*r) return rerun(run_file, rerun_dir);
    fs::create_directories(g.out_dir);
    if (*s) return cmd_simulate(sim, args);
    if (*t) {
      tr.steps_given = steps_opt->count() > 0;
      if (tr.resume.empty() && tr.env.empty()) throw ConfigError("--env is required unless resuming");
      return cmd_train(tr, args);
    }
    if (*c) return cmd_certify(ce, args);
    if (*k) return cmd_check(ch, args);
    if (*e) return cmd_export(ex, args);
  } catch (const DivergenceDetected& ex) {
    log(Level::Error, ex.what());
    return 3;
  } catch (const BudgetExceeded& ex) {
    log(Level::Error, ex.what());
    return 4;
  } catch (const RewardOutOfRange& ex) {
    log(Level::Error, std::string(ex.what()) + " (rescale rewards into [-1/2, 1/2], e.g. with a reward scaler)");
    return 2;
  } catch (const Error& ex) {
    log(Level::Error, ex.what());
    return 2;
  } catch (const std::exception& ex) {
    log(Level::Error, std::string("internal error: ") + ex.what());
    return 1;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
