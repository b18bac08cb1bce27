#include "s2cgan/config.hpp"

#include <openssl/sha.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "s2cgan/error.hpp"

namespace s2cgan {

using nlohmann::json;

namespace {

// Reads keys of one JSON object, remembering which were consumed so that
// leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string pointer) : obj_(obj), pointer_(std::move(pointer)) {
    if (!obj_.is_object()) throw ConfigError(pointer_.empty() ? "/" : pointer_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }
  std::string at(const std::string& key) const { return pointer_ + "/" + key; }

  const json* take(const std::string& key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(at(key), "expected a number");
      out = v->get<double>();
    }
  }

  void count(const std::string& key, std::size_t& out) {
    if (const json* v = take(key)) out = as_count(*v, at(key));
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(at(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected a boolean");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a number");
        out.push_back((*v)[i].get<double>());
      }
    }
  }

  void counts(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(at(key), "expected an array of integers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_count((*v)[i], at(key) + "/" + std::to_string(i)));
    }
  }

  template <typename E>
  void choice(const std::string& key, E& out, const std::map<std::string, E>& options) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      auto it = options.find(v->get<std::string>());
      if (it == options.end()) {
        std::string names;
        for (const auto& [name, value] : options) names += (names.empty() ? "" : ", ") + name;
        throw ConfigError(at(key), "expected one of: " + names);
      }
      out = it->second;
    }
  }

  ObjectReader child(const std::string& key) {
    const json* v = take(key);
    static const json empty = json::object();
    return ObjectReader(v ? *v : empty, at(key));
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown key");
    }
  }

 private:
  static std::size_t as_count(const json& v, const std::string& pointer) {
    if (!v.is_number_unsigned()) throw ConfigError(pointer, "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  const json& obj_;
  std::string pointer_;
  std::set<std::string> seen_;
};

const std::map<std::string, TaskKind> kTasks{{"a", TaskKind::a}, {"b", TaskKind::b}};
const std::map<std::string, Surrogate> kSurrogates{{"non_saturating", Surrogate::non_saturating},
                                                   {"saturating", Surrogate::saturating}};
const std::map<std::string, LabelSampling> kSampling{{"soft", LabelSampling::soft},
                                                     {"straight_through", LabelSampling::straight_through}};
const std::map<std::string, NoiseMode> kNoise{{"fixed", NoiseMode::fixed}, {"fresh", NoiseMode::fresh},
                                              {"zero", NoiseMode::zero}};

template <typename E>
std::string name_of(const std::map<std::string, E>& options, E value) {
  for (const auto& [name, v] : options) {
    if (v == value) return name;
  }
  return "";
}

void require(bool ok, const std::string& pointer, const std::string& what) {
  if (!ok) throw ConfigError(pointer, what);
}

}  // namespace

void OptimizerSpec::validate() const {
  require(lr_d > 0.0, "/optimizer/lr_d", "must be positive");
  require(lr_g > 0.0, "/optimizer/lr_g", "must be positive");
  require(lr_l > 0.0, "/optimizer/lr_l", "must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0, "/optimizer/beta1", "must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "/optimizer/beta2", "must lie in [0, 1)");
  require(epsilon > 0.0, "/optimizer/epsilon", "must be positive");
  require(batch_unsup >= 1, "/optimizer/batch_unsup", "must be >= 1");
  require(d_steps_per_g_step >= 1, "/optimizer/d_steps_per_g_step", "must be >= 1");
}

void ExperimentConfig::validate() const {
  try {
    task.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(task.kind == TaskKind::a ? "/task_a" : "/task_b", e.what());
  }
  require(split.n_supervised >= 1, "/split/n_supervised", "must be >= 1");
  require(split.n_supervised + split.n_test <= split.n_total, "/split/n_total",
          "must be at least n_supervised + n_test");
  for (std::size_t w : arch.generator_hidden) require(w >= 1, "/arch/generator_hidden", "widths must be >= 1");
  for (std::size_t w : arch.discriminator_hidden) require(w >= 1, "/arch/discriminator_hidden", "widths must be >= 1");
  for (std::size_t w : arch.labeller_hidden) require(w >= 1, "/arch/labeller_hidden", "widths must be >= 1");
  optimizer.validate();
  require(lambdas.sup >= 0.0 && lambdas.labeller >= 0.0 && lambdas.unsup >= 0.0, "/lambdas",
          "weights must be non-negative");
  require(tau > 0.0, "/tau", "must be positive");
  if (tau_final) require(*tau_final > 0.0, "/tau_final", "must be positive");
  require(eval_passes == 1 || eval_passes == 2, "/eval_passes", "must be 1 or 2");
  require(!seeds.empty(), "/seeds", "need at least one seed");
  require(!mmd_bandwidth_scales.empty(), "/mmd_bandwidth_scales", "need at least one scale");
  for (double s : mmd_bandwidth_scales) require(s > 0.0, "/mmd_bandwidth_scales", "scales must be positive");
}

double ExperimentConfig::tau_at(std::size_t step) const {
  if (!tau_final || optimizer.steps == 0) return tau;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(optimizer.steps));
  return tau + (*tau_final - tau) * frac;
}

std::size_t ExperimentConfig::resolved_batch_sup(std::size_t n_supervised) const {
  return optimizer.batch_sup > 0 ? optimizer.batch_sup : std::min<std::size_t>(n_supervised, 16);
}

namespace {

std::vector<std::size_t> widths(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace

std::vector<std::size_t> ExperimentConfig::generator_widths() const {
  return widths(task.layout().flat_dim() + arch.noise_dim, arch.generator_hidden, task.data_dim());
}

std::vector<std::size_t> ExperimentConfig::discriminator_widths() const {
  return widths(task.data_dim() + task.layout().flat_dim(), arch.discriminator_hidden, 1);
}

std::vector<std::size_t> ExperimentConfig::labeller_widths() const {
  return widths(task.data_dim(), arch.labeller_hidden, task.layout().flat_dim());
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return to_json(*this) == to_json(other);
}

ExperimentConfig default_config(TaskKind kind) {
  ExperimentConfig c;
  c.task.kind = kind;
  if (kind == TaskKind::a) {
    c.split = {4508, 8, 500, 1234};
    c.arch.noise_dim = 4;
    c.optimizer.steps = 6000;
  } else {
    c.split = {5600, 5, 500, 1234};
    c.arch.noise_dim = 8;
    c.optimizer.steps = 12000;
  }
  return c;
}

ExperimentConfig parse_config(const json& doc) {
  ObjectReader root(doc, "");
  TaskKind kind = TaskKind::a;
  root.choice("task", kind, kTasks);
  ExperimentConfig c = default_config(kind);

  {
    ObjectReader r = root.child("task_a");
    r.count("classes", c.task.a.classes);
    r.number("radius", c.task.a.radius);
    r.number("sigma", c.task.a.sigma);
    r.numbers("prior", c.task.a.prior);
    r.finish();
  }
  {
    ObjectReader r = root.child("task_b");
    r.count("cells", c.task.b.cells);
    r.count("labels", c.task.b.labels);
    r.numbers("means", c.task.b.means);
    r.number("noise_std", c.task.b.noise_std);
    r.number("stay_prob", c.task.b.stay_prob);
    r.finish();
  }
  {
    ObjectReader r = root.child("split");
    r.count("n_total", c.split.n_total);
    r.count("n_supervised", c.split.n_supervised);
    r.count("n_test", c.split.n_test);
    r.seed("seed", c.split.seed);
    r.finish();
  }
  {
    ObjectReader r = root.child("arch");
    r.counts("generator_hidden", c.arch.generator_hidden);
    r.counts("discriminator_hidden", c.arch.discriminator_hidden);
    r.counts("labeller_hidden", c.arch.labeller_hidden);
    r.count("noise_dim", c.arch.noise_dim);
    r.finish();
  }
  {
    ObjectReader r = root.child("optimizer");
    r.number("lr_d", c.optimizer.lr_d);
    r.number("lr_g", c.optimizer.lr_g);
    r.number("lr_l", c.optimizer.lr_l);
    r.number("beta1", c.optimizer.beta1);
    r.number("beta2", c.optimizer.beta2);
    r.number("epsilon", c.optimizer.epsilon);
    r.count("steps", c.optimizer.steps);
    r.count("batch_sup", c.optimizer.batch_sup);
    r.count("batch_unsup", c.optimizer.batch_unsup);
    r.count("d_steps_per_g_step", c.optimizer.d_steps_per_g_step);
    r.finish();
  }
  if (const json* v = root.take("lambdas")) {
    if (!v->is_array() || v->size() != 3) throw ConfigError("/lambdas", "expected an array of 3 numbers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(*v)[i].is_number()) throw ConfigError("/lambdas/" + std::to_string(i), "expected a number");
    }
    c.lambdas = {(*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>()};
  }
  root.number("tau", c.tau);
  if (const json* v = root.take("tau_final")) {
    if (v->is_null()) {
      c.tau_final.reset();
    } else if (v->is_number()) {
      c.tau_final = v->get<double>();
    } else {
      throw ConfigError("/tau_final", "expected a number or null");
    }
  }
  root.choice("label_sampling", c.label_sampling, kSampling);
  root.choice("surrogate", c.surrogate, kSurrogates);
  root.count("warmup_steps", c.warmup_steps);
  {
    ObjectReader r = root.child("stop_gradient");
    r.boolean("real_pair", c.stop_gradient.real_pair);
    r.boolean("generator_input", c.stop_gradient.generator_input);
    r.boolean("fake_pair", c.stop_gradient.fake_pair);
    r.finish();
  }
  root.boolean("independent_unsup_batches", c.independent_unsup_batches);
  root.count("eval_every", c.eval_every);
  root.count("eval_passes", c.eval_passes);
  root.count("checkpoint_every", c.checkpoint_every);
  root.string("output_dir", c.output_dir);
  if (const json* v = root.take("seeds")) {
    if (!v->is_array()) throw ConfigError("/seeds", "expected an array of integers");
    c.seeds.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number_unsigned()) {
        throw ConfigError("/seeds/" + std::to_string(i), "expected a non-negative integer");
      }
      c.seeds.push_back((*v)[i].get<std::uint64_t>());
    }
  }
  root.numbers("mmd_bandwidth_scales", c.mmd_bandwidth_scales);
  root.count("naive_pretrain_steps", c.naive_pretrain_steps);
  {
    ObjectReader r = root.child("inference");
    r.choice("noise", c.inference.noise, kNoise);
    r.boolean("reuse_noise", c.inference.reuse_noise);
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("parse_config: cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config_text(os.str());
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["task"] = name_of(kTasks, c.task.kind);
  j["task_a"] = {{"classes", c.task.a.classes},
                 {"radius", c.task.a.radius},
                 {"sigma", c.task.a.sigma},
                 {"prior", c.task.a.prior}};
  j["task_b"] = {{"cells", c.task.b.cells},
                 {"labels", c.task.b.labels},
                 {"means", c.task.b.means},
                 {"noise_std", c.task.b.noise_std},
                 {"stay_prob", c.task.b.stay_prob}};
  j["split"] = {{"n_total", c.split.n_total},
                {"n_supervised", c.split.n_supervised},
                {"n_test", c.split.n_test},
                {"seed", c.split.seed}};
  j["arch"] = {{"generator_hidden", c.arch.generator_hidden},
               {"discriminator_hidden", c.arch.discriminator_hidden},
               {"labeller_hidden", c.arch.labeller_hidden},
               {"noise_dim", c.arch.noise_dim}};
  j["optimizer"] = {{"lr_d", c.optimizer.lr_d},
                    {"lr_g", c.optimizer.lr_g},
                    {"lr_l", c.optimizer.lr_l},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"epsilon", c.optimizer.epsilon},
                    {"steps", c.optimizer.steps},
                    {"batch_sup", c.optimizer.batch_sup},
                    {"batch_unsup", c.optimizer.batch_unsup},
                    {"d_steps_per_g_step", c.optimizer.d_steps_per_g_step}};
  j["lambdas"] = {c.lambdas.sup, c.lambdas.labeller, c.lambdas.unsup};
  j["tau"] = c.tau;
  j["tau_final"] = c.tau_final ? json(*c.tau_final) : json(nullptr);
  j["label_sampling"] = name_of(kSampling, c.label_sampling);
  j["surrogate"] = name_of(kSurrogates, c.surrogate);
  j["warmup_steps"] = c.warmup_steps;
  j["stop_gradient"] = {{"real_pair", c.stop_gradient.real_pair},
                        {"generator_input", c.stop_gradient.generator_input},
                        {"fake_pair", c.stop_gradient.fake_pair}};
  j["independent_unsup_batches"] = c.independent_unsup_batches;
  j["eval_every"] = c.eval_every;
  j["eval_passes"] = c.eval_passes;
  j["checkpoint_every"] = c.checkpoint_every;
  j["output_dir"] = c.output_dir;
  j["seeds"] = c.seeds;
  j["mmd_bandwidth_scales"] = c.mmd_bandwidth_scales;
  j["naive_pretrain_steps"] = c.naive_pretrain_steps;
  j["inference"] = {{"noise", name_of(kNoise, c.inference.noise)},
                    {"reuse_noise", c.inference.reuse_noise}};
  return j;
}

std::array<std::uint8_t, 32> config_hash(const ExperimentConfig& config) {
  const std::string text = to_json(config).dump();
  std::array<std::uint8_t, 32> digest{};
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest.data());
  return digest;
}

}  // namespace s2cgan
