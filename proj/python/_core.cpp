#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <limits>

#include "s2cgan/baselines.hpp"
#include "s2cgan/checkpoint.hpp"
#include "s2cgan/error.hpp"
#include "s2cgan/gradcheck.hpp"
#include "s2cgan/inference.hpp"
#include "s2cgan/metrics.hpp"
#include "s2cgan/oracle.hpp"
#include "s2cgan/report.hpp"
#include "s2cgan/trainer.hpp"

namespace py = pybind11;
using namespace s2cgan;

namespace {

// Configs cross the boundary as JSON text; the Python side wraps dicts.
ExperimentConfig config_of(const std::string& text) { return parse_config_text(text.empty() ? "{}" : text); }

Tensor to_tensor(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InvalidArgument("expected at least one row");
  return stack_rows(rows);
}

std::vector<std::vector<double>> from_tensor(const Tensor& t) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < t.rows(); ++r) out.emplace_back(t.row(r).begin(), t.row(r).end());
  return out;
}

py::dict record_dict(const MetricsRecord& r) {
  py::dict d;
  d["step"] = r.step;
  d["v_sup"] = r.objective.v_sup;
  d["v_labeller"] = r.objective.v_labeller;
  d["v_unsup"] = r.objective.v_unsup;
  d["v_full"] = r.objective.v_full;
  d["label_agreement"] = r.label_agreement;
  d["mean_iou"] = r.mean_iou;
  d["mmd2"] = r.mmd2;
  d["marginal_tv"] = r.marginal_tv ? py::cast(*r.marginal_tv) : py::none();
  d["pseudo_label_acc"] = r.pseudo_label_acc ? py::cast(*r.pseudo_label_acc) : py::none();
  return d;
}

py::bytes checkpoint_bytes(const TrainState& state) {
  const auto b = encode_checkpoint(make_checkpoint(state));
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

TrainState state_from_bytes(const ExperimentConfig& cfg, const std::string& bytes, std::uint64_t seed) {
  const std::vector<std::uint8_t> raw(bytes.begin(), bytes.end());
  TrainState st = init_train_state(cfg, seed);
  restore_state(st, decode_checkpoint(raw));
  return st;
}

py::dict train_result(const TrainResult& r, const std::string& metrics) {
  py::list history;
  for (const auto& rec : r.history) history.append(record_dict(rec));
  py::dict d;
  d["history"] = history;
  d["metrics_csv"] = metrics;
  d["checkpoint"] = checkpoint_bytes(r.state);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Semi-supervised conditional GAN on synthetic tasks";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<UnsupportedTask>(m, "UnsupportedTask", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  m.def("default_config", [](const std::string& task) {
    if (task != "a" && task != "b") throw InvalidArgument("task must be 'a' or 'b'");
    return to_json(default_config(task == "a" ? TaskKind::a : TaskKind::b)).dump();
  }, py::arg("task"));

  m.def("canonical_config", [](const std::string& text) { return to_json(config_of(text)).dump(); },
        py::arg("config_json"));

  m.def("train", [](const std::string& text, std::uint64_t seed) {
    const ExperimentConfig cfg = config_of(text);
    TrainResult r;
    {
      py::gil_scoped_release release;
      r = train(cfg, seed);
    }
    return train_result(r, metrics_csv(r.history));
  }, py::arg("config_json"), py::arg("seed") = 0);

  m.def("baseline", [](const std::string& kind, const std::string& text, std::uint64_t seed) {
    if (kind != "naive" && kind != "full") throw InvalidArgument("baseline kind must be 'naive' or 'full'");
    const ExperimentConfig cfg = config_of(text);
    BaselineResult r;
    {
      py::gil_scoped_release release;
      const DatasetSplit split = make_run_split(cfg, seed);
      r = kind == "full" ? run_baseline_full(cfg, split, seed) : run_baseline_naive(cfg, split, seed);
    }
    py::dict d = train_result(r.run, metrics_csv(r.run.history));
    d["pseudo_label_acc"] = kind == "naive" ? py::cast(r.pseudo_label_acc) : py::none();
    return d;
  }, py::arg("kind"), py::arg("config_json"), py::arg("seed") = 0);

  m.def("evaluate", [](const std::string& text, const std::string& checkpoint, std::uint64_t seed,
                       std::size_t passes, std::uint64_t eval_seed) {
    const ExperimentConfig cfg = config_of(text);
    const TrainState st = state_from_bytes(cfg, checkpoint, seed);
    const DatasetSplit split = make_run_split(cfg, seed);
    const EvalContext ctx = make_eval_context(split, cfg);
    Rng rng(eval_seed);
    return record_dict(evaluate_model(ctx, st.generator.params, &st.labeller.params, passes, rng));
  }, py::arg("config_json"), py::arg("checkpoint"), py::arg("seed") = 0, py::arg("passes") = 1,
     py::arg("eval_seed") = 0);

  m.def("infer", [](const std::string& text, const std::string& checkpoint, const std::vector<std::vector<int>>& labels,
                    std::size_t passes, std::uint64_t seed, std::uint64_t sample_seed) {
    const ExperimentConfig cfg = config_of(text);
    const TrainState st = state_from_bytes(cfg, checkpoint, seed);
    std::vector<int> flat;
    for (const auto& row : labels) flat.insert(flat.end(), row.begin(), row.end());
    const ConditionLayout layout = cfg.task.layout();
    for (const auto& row : labels) {
      if (row.size() != layout.cells) throw ShapeError("infer: each condition needs " + std::to_string(layout.cells) + " labels");
    }
    InferenceRequest req{Condition::from_labels(layout, flat), cfg.inference.noise, std::nullopt,
                         cfg.inference.reuse_noise};
    if (req.noise == NoiseMode::fixed) req.noise = NoiseMode::fresh;
    Rng rng(sample_seed);
    if (passes == 1) return from_tensor(infer_one_pass(st.generator.params, req, rng));
    if (passes == 2) return from_tensor(infer_two_pass(st.generator.params, st.labeller.params, req, rng).x_final);
    throw InvalidArgument("infer: passes must be 1 or 2");
  }, py::arg("config_json"), py::arg("checkpoint"), py::arg("labels"), py::arg("passes") = 1, py::arg("seed") = 0,
     py::arg("sample_seed") = 0);

  m.def("sample_task", [](const std::string& text, std::size_t n, std::uint64_t seed) {
    const ExperimentConfig cfg = config_of(text);
    Rng rng(seed);
    py::list out;
    for (const auto& s : sample_task(cfg.task, rng, n)) out.append(py::make_tuple(s.x, s.labels));
    return out;
  }, py::arg("config_json"), py::arg("n"), py::arg("seed") = 0);

  m.def("bayes_oracle_label", [](const std::string& text, const std::vector<double>& x) {
    return bayes_oracle_label(config_of(text).task, x);
  }, py::arg("config_json"), py::arg("x"));

  m.def("mmd_rbf", [](const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
                      const std::vector<double>& bandwidths) { return mmd_rbf(to_tensor(x), to_tensor(y), bandwidths); },
        py::arg("x"), py::arg("y"), py::arg("bandwidths") = std::vector<double>{});

  m.def("gumbel_softmax_sample", [](const std::vector<double>& logits, double tau, bool hard, std::uint64_t seed) {
    Rng rng(seed);
    return gumbel_softmax_sample(logits, tau, rng, hard);
  }, py::arg("logits"), py::arg("tau") = 1.0, py::arg("hard") = false, py::arg("seed") = 0);

  m.def("gradcheck", [](std::uint64_t seed) {
    py::list out;
    for (const auto& r : run_gradcheck_suite(seed)) {
      py::dict d;
      d["name"] = r.name;
      d["max_rel_error"] = r.max_rel_error;
      d["tolerance"] = r.tolerance;
      d["passed"] = r.passed;
      out.append(d);
    }
    return out;
  }, py::arg("seed") = 0);

  m.def("oracle_check", [](std::size_t trials, std::size_t nmax, std::size_t kmax, std::uint64_t seed, double tol) {
    const OracleSweep s = run_oracle_sweep(trials, nmax, kmax, seed, tol);
    py::dict d;
    d["consistent_trials"] = s.consistent_trials;
    d["consistent_failures"] = s.consistent_failures;
    d["max_gap"] = s.max_gap;
    d["perturbed_trials"] = s.perturbed_trials;
    d["perturbed_zero_residual"] = s.perturbed_zero_residual;
    d["min_perturbed_residual"] = s.min_perturbed_residual;
    d["probe_trials"] = s.probe_trials;
    d["probe_marginal_broken"] = s.probe_marginal_broken;
    return d;
  }, py::arg("trials") = 1000, py::arg("nmax") = 12, py::arg("kmax") = 6, py::arg("seed") = 0,
     py::arg("tol") = 1e-10);
}
