#include "s2cgan/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "s2cgan/baselines.hpp"
#include "s2cgan/checkpoint.hpp"
#include "s2cgan/error.hpp"
#include "s2cgan/gradcheck.hpp"
#include "s2cgan/oracle.hpp"
#include "s2cgan/report.hpp"

namespace s2cgan {

namespace fs = std::filesystem;

namespace {

// Bad user input that is not a config error.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  for (char ch : text) {
    if (ch < '0' || ch > '9') throw InvalidArgument("expected digits, got '" + std::string(1, ch) + "'");
    out.push_back(ch - '0');
  }
  return out;
}

std::size_t parse_index(std::string_view s) {
  if (s.empty()) throw InvalidArgument("edit: missing number");
  std::size_t v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') throw InvalidArgument("edit: '" + std::string(s) + "' is not a number");
    v = v * 10 + static_cast<std::size_t>(ch - '0');
  }
  return v;
}

struct Common {
  std::string config_path;
  std::string task;
  std::vector<std::uint64_t> seeds;
  long steps = -1;
  std::string out_dir;
};

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) {
    cfg = parse_config_file(c.config_path);
  } else {
    cfg = default_config(c.task == "b" ? TaskKind::b : TaskKind::a);
  }
  if (!c.task.empty() && c.config_path.empty() == false) {
    const TaskKind want = c.task == "b" ? TaskKind::b : TaskKind::a;
    if (want != cfg.task.kind) throw UsageError("--task disagrees with the config file");
  }
  if (!c.seeds.empty()) cfg.seeds = c.seeds;
  if (c.steps >= 0) cfg.optimizer.steps = static_cast<std::size_t>(c.steps);
  if (const char* env = std::getenv("S2CGAN_OUT"); env && *env) cfg.output_dir = env;
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool seeds = true) {
  app->add_option("--config", c.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app->add_option("--task", c.task, "task when no config is given")->check(CLI::IsMember({"a", "b"}));
  if (seeds) app->add_option("--seeds", c.seeds, "run seeds (overrides config)")->delimiter(',');
  app->add_option("--steps", c.steps, "training steps (overrides config)");
  app->add_option("--out", c.out_dir, "output directory (overrides config and S2CGAN_OUT)");
}

const char* task_name(const ExperimentConfig& cfg) { return cfg.task.kind == TaskKind::a ? "a" : "b"; }

fs::path run_dir(const ExperimentConfig& cfg, const std::string& kind, std::uint64_t seed) {
  return fs::path(cfg.output_dir) / (kind + "-task" + task_name(cfg)) / ("seed" + std::to_string(seed));
}

void write_run_files(const fs::path& dir, const ExperimentConfig& cfg, const std::vector<MetricsRecord>& history) {
  write_file_atomic(dir / "config.json", to_json(cfg).dump(2) + "\n");
  emit_metrics_csv(history, dir / "metrics.csv");
}

void print_final(std::ostream& out, const std::string& kind, std::uint64_t seed,
                 const std::vector<MetricsRecord>& history, const fs::path& dir) {
  out << kind << " seed " << seed;
  if (!history.empty()) {
    const MetricsRecord& r = history.back();
    out << ": step " << r.step << " label_agreement " << format_double(r.label_agreement) << " mean_iou "
        << format_double(r.mean_iou) << " mmd2 " << format_double(r.mmd2);
    if (r.marginal_tv) out << " marginal_tv " << format_double(*r.marginal_tv);
    if (r.pseudo_label_acc) out << " pseudo_label_acc " << format_double(*r.pseudo_label_acc);
  }
  out << " -> " << dir.string() << "\n";
}

TrainHooks checkpoint_hooks(const fs::path& dir) {
  TrainHooks hooks;
  hooks.on_checkpoint = [dir](const TrainState& st) { save_checkpoint(st, dir / "checkpoint.s2cg"); };
  return hooks;
}

int cmd_train(const Common& c, std::ostream& out) {
  const ExperimentConfig cfg = load_config(c);
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = run_dir(cfg, "s2cgan", seed);
    TrainResult r = train(cfg, seed, checkpoint_hooks(dir));
    if (cfg.optimizer.steps == 0) save_checkpoint(r.state, dir / "checkpoint.s2cg");
    write_run_files(dir, cfg, r.history);
    print_final(out, "s2cgan", seed, r.history, dir);
  }
  return 0;
}

int cmd_baseline(const Common& c, const std::string& kind, std::ostream& out) {
  const ExperimentConfig cfg = load_config(c);
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = run_dir(cfg, "baseline-" + kind, seed);
    const DatasetSplit split = make_run_split(cfg, seed);
    BaselineResult r = kind == "full" ? run_baseline_full(cfg, split, seed, checkpoint_hooks(dir))
                                      : run_baseline_naive(cfg, split, seed, checkpoint_hooks(dir));
    write_run_files(dir, r.run.state.config, r.run.history);
    if (kind == "naive") {
      std::string labels;
      for (const auto& item : r.pseudo_labels) labels += grid_to_string(item) + "\n";
      write_file_atomic(dir / "pseudo_labels.txt", labels);
    }
    print_final(out, "baseline-" + kind, seed, r.run.history, dir);
  }
  return 0;
}

// Networks from a checkpoint, checked against the config's architecture.
TrainState load_model(const ExperimentConfig& cfg, const std::string& path, std::uint64_t seed,
                      std::ostream& err) {
  TrainState state = init_train_state(cfg, seed);
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.config_hash != config_hash(cfg)) {
    err << "warning: " << path << " was written under a different config\n";
  }
  Checkpoint relaxed = ckpt;
  relaxed.config_hash = config_hash(cfg);
  relaxed.moments.reset();
  restore_state(state, relaxed);
  return state;
}

int cmd_eval(const Common& c, const std::string& ckpt, std::size_t passes, const std::string& metrics_out,
             std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = load_config(c);
  const std::uint64_t seed = cfg.seeds.front();
  const TrainState st = load_model(cfg, ckpt, seed, err);
  const DatasetSplit split = make_run_split(cfg, seed);
  const EvalContext ctx = make_eval_context(split, cfg);
  Rng rng = derive_rng(seed, 5);
  const bool labeller = labeller_trained(cfg) || passes == 2;
  MetricsRecord rec = evaluate_model(ctx, st.generator.params, labeller ? &st.labeller.params : nullptr, passes, rng);
  rec.step = cfg.optimizer.steps;
  out << "label_agreement " << format_double(rec.label_agreement) << "\nmean_iou " << format_double(rec.mean_iou)
      << "\nmmd2 " << format_double(rec.mmd2) << "\n";
  if (rec.marginal_tv) out << "marginal_tv " << format_double(*rec.marginal_tv) << "\n";
  if (!metrics_out.empty()) emit_metrics_csv(std::vector<MetricsRecord>{rec}, metrics_out);
  return 0;
}

Tensor synthesize(const TrainState& st, const Condition& cond, std::size_t passes, Rng& rng,
                  std::optional<Tensor> z = std::nullopt) {
  InferenceRequest req{cond, z ? NoiseMode::fixed : NoiseMode::fresh, std::move(z), true};
  return passes == 2 ? infer_two_pass(st.generator.params, st.labeller.params, req, rng).x_final
                     : infer_one_pass(st.generator.params, req, rng);
}

std::string format_row(std::span<const double> row) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3);
  for (std::size_t i = 0; i < row.size(); ++i) s << (i ? " " : "") << row[i];
  return s.str();
}

int cmd_infer(const Common& c, const std::string& ckpt, std::optional<int> cls, const std::string& grid,
              std::size_t passes, std::size_t count, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = load_config(c);
  const ConditionLayout layout = cfg.task.layout();
  std::vector<int> one;
  if (cfg.task.kind == TaskKind::a) {
    if (!cls) throw UsageError("infer: task a needs --class");
    if (*cls < 0 || static_cast<std::size_t>(*cls) >= layout.labels) {
      throw UsageError("infer: --class must be in [0, " + std::to_string(layout.labels) + ")");
    }
    one = {*cls};
  } else {
    if (grid.empty()) throw UsageError("infer: task b needs --grid");
    one = parse_grid_literal(grid, layout.cells, layout.labels);
  }
  if (count < 1) throw UsageError("infer: --count must be at least 1");
  const std::uint64_t seed = cfg.seeds.front();
  const TrainState st = load_model(cfg, ckpt, seed, err);
  std::vector<int> labels;
  for (std::size_t i = 0; i < count; ++i) labels.insert(labels.end(), one.begin(), one.end());
  Rng rng = derive_rng(seed, 6);
  const Tensor x = synthesize(st, Condition::from_labels(layout, labels), passes, rng);
  const std::vector<int> oracle = bayes_oracle_labels(cfg.task, x);

  fs::path dir = fs::path(cfg.output_dir) / "infer";
  std::string csv;
  for (std::size_t j = 0; j < x.cols(); ++j) csv += (j ? ",x" : "x") + std::to_string(j);
  csv += ",oracle\n";
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const std::vector<int> item(oracle.begin() + static_cast<std::ptrdiff_t>(i * layout.cells),
                                oracle.begin() + static_cast<std::ptrdiff_t>((i + 1) * layout.cells));
    out << format_row(x.row(i)) << "  oracle " << grid_to_string(item) << "\n";
    for (double v : x.row(i)) csv += format_double(v) + ",";
    csv += grid_to_string(item) + "\n";
  }
  write_file_atomic(dir / "samples.csv", csv);
  if (cfg.task.kind == TaskKind::a) {
    const DatasetSplit split = make_run_split(cfg, seed);
    const std::vector<int> fake_labels(x.rows(), one.front());
    emit_scatter_svg(samples_x(split.test), samples_condition(cfg.task, split.test).labels(), x, fake_labels,
                     dir / "samples.svg");
  }
  out << "wrote " << (dir / "samples.csv").string() << "\n";
  return 0;
}

int cmd_edit_infer(const Common& c, const std::string& ckpt, const std::string& grid, std::istream& in,
                   std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = load_config(c);
  if (cfg.task.kind != TaskKind::b) throw UsageError("edit-infer: needs a task b config");
  const ConditionLayout layout = cfg.task.layout();
  const std::uint64_t seed = cfg.seeds.front();
  const TrainState st = load_model(cfg, ckpt, seed, err);
  std::vector<int> labels;
  if (grid.empty()) {
    labels = make_run_split(cfg, seed).test.front().labels;
  } else {
    labels = parse_grid_literal(grid, layout.cells, layout.labels);
  }
  Rng rng = derive_rng(seed, 7);
  const std::size_t noise = generator_noise_dim(st.generator.params, layout);
  const Tensor z = noise == 0 ? Tensor::zeros({1, 1}) : sample_normal(1, noise, rng);

  auto render = [&] {
    const Tensor x = synthesize(st, Condition::from_labels(layout, labels), 2, rng,
                                noise == 0 ? std::nullopt : std::optional<Tensor>(z));
    out << "map    " << grid_to_string(labels) << "\n";
    out << "x      " << format_row(x.row(0)) << "\n";
    out << "oracle " << grid_to_string(bayes_oracle_labels(cfg.task, x)) << "\n";
  };
  render();
  std::string line;
  while (out << "> " << std::flush, std::getline(in, line)) {
    if (line == "quit" || line == "exit") break;
    if (line.empty()) continue;
    if (line == "show") {
      render();
      continue;
    }
    try {
      apply_edit(labels, line, layout.labels);
      render();
    } catch (const Error& e) {
      out << "error: " << e.what() << "\n";
    }
  }
  out << "\n";
  return 0;
}

int cmd_oracle(std::size_t trials, std::size_t nmax, std::size_t kmax, std::uint64_t seed, double tol,
               std::ostream& out) {
  if (nmax > 64 || kmax > 64) throw UsageError("oracle-check: nmax and kmax are limited to 64");
  const OracleSweep s = run_oracle_sweep(trials, nmax, kmax, seed, tol);
  out << std::left << std::setw(34) << "check" << std::setw(10) << "trials" << "result\n";
  out << std::setw(34) << "marginal equality on S_c" << std::setw(10) << s.consistent_trials
      << s.consistent_failures << " failures, max gap " << format_double(s.max_gap) << "\n";
  out << std::setw(34) << "perturbed joint match residual" << std::setw(10) << s.perturbed_trials
      << s.perturbed_zero_residual << " zero, min residual " << format_double(s.min_perturbed_residual) << "\n";
  out << std::setw(34) << "probe: residual > 0.01" << std::setw(10) << s.probe_trials << s.probe_marginal_broken
      << " with a marginal gap on S_c\n";
  for (const OracleInstance& inst : s.counterexamples) {
    const MarginalReport rep = verify_marginal_consequence(inst, tol);
    nlohmann::json j{{"n", inst.n},
                     {"k", inst.k},
                     {"s_x", inst.s_x},
                     {"s_c", inst.s_c},
                     {"eq10_residual", rep.eq10_residual},
                     {"eq11_residual", rep.eq11_residual},
                     {"eq12_residual", rep.eq12_residual},
                     {"gaps", rep.gaps}};
    out << j.dump() << "\n";
  }
  return s.consistent_failures == 0 && s.perturbed_zero_residual == 0 ? 0 : 2;
}

int cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  for (const GradCheckResult& r : run_gradcheck_suite(seed)) {
    out << std::left << std::setw(26) << r.name << std::setw(26) << format_double(r.max_rel_error)
        << (r.passed ? "ok" : "FAIL") << "\n";
    ok = ok && r.passed;
  }
  out << (ok ? "all gradients match" : "gradient mismatch") << "\n";
  return ok ? 0 : 2;
}

}  // namespace

std::vector<int> parse_grid_literal(std::string_view text, std::size_t cells, std::size_t labels) {
  if (text.size() != cells) {
    throw InvalidArgument("grid literal must have " + std::to_string(cells) + " characters, got " +
                     std::to_string(text.size()));
  }
  std::vector<int> out = parse_int_list(text);
  for (int v : out) {
    if (static_cast<std::size_t>(v) >= labels) {
      throw InvalidArgument("grid literal labels must be below " + std::to_string(labels));
    }
  }
  return out;
}

std::string grid_to_string(const std::vector<int>& labels) {
  std::string s;
  for (int v : labels) s += static_cast<char>('0' + v);
  return s;
}

void apply_edit(std::vector<int>& labels, std::string_view command, std::size_t label_count) {
  std::istringstream in{std::string(command)};
  std::string verb, range, label, extra;
  in >> verb >> range >> label;
  if (verb != "set" || range.empty() || label.empty() || (in >> extra)) {
    throw InvalidArgument("edit: expected 'set <i>..<j> <label>'");
  }
  std::size_t lo = 0, hi = 0;
  if (const auto dots = range.find(".."); dots != std::string::npos) {
    lo = parse_index(std::string_view(range).substr(0, dots));
    hi = parse_index(std::string_view(range).substr(dots + 2));
  } else {
    lo = hi = parse_index(range);
  }
  const std::size_t value = parse_index(label);
  if (lo > hi || hi >= labels.size()) {
    throw InvalidArgument("edit: range must lie within 0.." + std::to_string(labels.size() - 1));
  }
  if (value >= label_count) throw InvalidArgument("edit: label must be below " + std::to_string(label_count));
  for (std::size_t i = lo; i <= hi; ++i) labels[i] = static_cast<int>(value);
}

int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-supervised conditional GAN experiments"};
  app.require_subcommand(1);
  Common common;

  auto* train_cmd = app.add_subcommand("train", "train the semi-supervised model for each seed");
  add_common(train_cmd, common);

  std::string ckpt, metrics_out, grid;
  std::size_t passes = 1, count = 1;
  std::optional<int> cls;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--checkpoint", ckpt)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--passes", passes)->check(CLI::IsMember({1, 2}));
  eval_cmd->add_option("--metrics-out", metrics_out);

  auto* infer_cmd = app.add_subcommand("infer", "synthesize from a class or label map");
  add_common(infer_cmd, common);
  infer_cmd->add_option("--checkpoint", ckpt)->required()->check(CLI::ExistingFile);
  auto* cls_opt = infer_cmd->add_option("--class", cls, "class index (task a)");
  infer_cmd->add_option("--grid", grid, "label map literal (task b)")->excludes(cls_opt);
  infer_cmd->add_option("--passes", passes)->check(CLI::IsMember({1, 2}));
  infer_cmd->add_option("--count", count, "samples to draw");

  auto* edit_cmd = app.add_subcommand("edit-infer", "interactive label-map editing (task b)");
  add_common(edit_cmd, common);
  edit_cmd->add_option("--checkpoint", ckpt)->required()->check(CLI::ExistingFile);
  edit_cmd->add_option("--grid", grid, "initial label map");

  std::string kind;
  auto* base_cmd = app.add_subcommand("baseline", "train a reference model");
  add_common(base_cmd, common);
  base_cmd->add_option("kind", kind)->required()->check(CLI::IsMember({"naive", "full"}));

  std::size_t trials = 1000, nmax = 12, kmax = 6;
  std::uint64_t seed = 0;
  double tol = 1e-12;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "finite-space check of the marginal consequence");
  oracle_cmd->add_option("--trials", trials);
  oracle_cmd->add_option("--nmax", nmax);
  oracle_cmd->add_option("--kmax", kmax);
  oracle_cmd->add_option("--seed", seed);
  oracle_cmd->add_option("--tol", tol);

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every op and the full loss");
  grad_cmd->add_option("--seed", seed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (*train_cmd) return cmd_train(common, out);
    if (*eval_cmd) return cmd_eval(common, ckpt, passes, metrics_out, out, err);
    if (*infer_cmd) return cmd_infer(common, ckpt, cls, grid, passes, count, out, err);
    if (*edit_cmd) return cmd_edit_infer(common, ckpt, grid, in, out, err);
    if (*base_cmd) return cmd_baseline(common, kind, out);
    if (*oracle_cmd) return cmd_oracle(trials, nmax, kmax, seed, tol, out);
    if (*grad_cmd) return cmd_gradcheck(seed, out);
  } catch (const ConfigError& e) {
    err << "config error at " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cin, std::cout, std::cerr);
}

}  // namespace s2cgan
