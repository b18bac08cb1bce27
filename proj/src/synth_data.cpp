#include "s2cgan/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "s2cgan/error.hpp"

namespace s2cgan {

std::vector<double> TaskASpec::resolved_prior() const {
  if (!prior.empty()) return prior;
  return std::vector<double>(classes, 1.0 / static_cast<double>(classes));
}

std::vector<double> TaskASpec::mean(std::size_t c) const {
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

void TaskSpec::validate() const {
  if (kind == TaskKind::a) {
    if (a.classes < 1) throw InvalidArgument("task_a: need at least one class");
    if (!(a.sigma >= 0.0)) throw InvalidArgument("task_a: sigma must be non-negative");
    if (!a.prior.empty()) {
      if (a.prior.size() != a.classes) throw InvalidArgument("task_a: prior length differs from classes");
      double total = 0.0;
      for (double p : a.prior) {
        if (!(p >= 0.0)) throw InvalidArgument("task_a: negative prior entry");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("task_a: prior does not sum to 1");
    }
  } else {
    if (b.cells < 1 || b.labels < 1) throw InvalidArgument("task_b: cells and labels must be >= 1");
    if (b.means.size() != b.labels) throw InvalidArgument("task_b: need one mean per label");
    if (!(b.noise_std >= 0.0)) throw InvalidArgument("task_b: noise_std must be non-negative");
    if (!(b.stay_prob > 0.0 && b.stay_prob <= 1.0)) {
      throw InvalidArgument("task_b: stay_prob must lie in (0, 1]");
    }
    if (b.labels == 1 && b.stay_prob < 1.0) {
      throw InvalidArgument("task_b: a single label requires stay_prob = 1");
    }
  }
}

ConditionLayout TaskSpec::layout() const {
  return kind == TaskKind::a ? ConditionLayout::classes(a.classes)
                             : ConditionLayout::grid(b.cells, b.labels);
}

std::size_t TaskSpec::data_dim() const { return kind == TaskKind::a ? 2 : b.cells; }

std::vector<Sample> sample_task_a(const TaskASpec& spec, Rng& rng, std::size_t n) {
  if (n < 1) throw InvalidArgument("sample_task_a: n must be >= 1");
  const auto prior = spec.resolved_prior();
  std::discrete_distribution<int> pick(prior.begin(), prior.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Sample> out(n);
  for (auto& s : out) {
    const int c = pick(rng);
    auto mu = spec.mean(static_cast<std::size_t>(c));
    s.x = {mu[0] + spec.sigma * normal(rng), mu[1] + spec.sigma * normal(rng)};
    s.labels = {c};
  }
  return out;
}

std::vector<Sample> sample_task_b(const TaskBSpec& spec, Rng& rng, std::size_t n) {
  if (n < 1) throw InvalidArgument("sample_task_b: n must be >= 1");
  const int m = static_cast<int>(spec.labels);
  std::uniform_int_distribution<int> first(0, m - 1);
  std::uniform_int_distribution<int> other(0, std::max(m - 2, 0));
  std::bernoulli_distribution stay(spec.stay_prob);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Sample> out(n);
  for (auto& s : out) {
    s.labels.resize(spec.cells);
    s.x.resize(spec.cells);
    s.labels[0] = first(rng);
    for (std::size_t i = 1; i < spec.cells; ++i) {
      const int prev = s.labels[i - 1];
      if (stay(rng)) {
        s.labels[i] = prev;
      } else {
        const int j = other(rng);
        s.labels[i] = j >= prev ? j + 1 : j;
      }
    }
    for (std::size_t i = 0; i < spec.cells; ++i) {
      s.x[i] = spec.means[static_cast<std::size_t>(s.labels[i])] + spec.noise_std * normal(rng);
    }
  }
  return out;
}

std::vector<Sample> sample_task(const TaskSpec& spec, Rng& rng, std::size_t n) {
  spec.validate();
  return spec.kind == TaskKind::a ? sample_task_a(spec.a, rng, n) : sample_task_b(spec.b, rng, n);
}

DatasetSplit make_splits(const TaskSpec& task, std::size_t n_total, std::size_t n_supervised,
                         std::size_t n_test, std::uint64_t seed) {
  if (n_supervised < 1) throw InvalidArgument("make_splits: need at least one supervised pair");
  if (n_supervised + n_test > n_total) {
    throw InvalidArgument("make_splits: n_supervised + n_test = " +
                          std::to_string(n_supervised + n_test) + " exceeds n_total = " +
                          std::to_string(n_total));
  }
  Rng rng(seed);
  std::vector<Sample> all = sample_task(task, rng, n_total);

  DatasetSplit split;
  split.task = task;
  split.seed = seed;
  split.test.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));

  std::vector<std::size_t> pool(n_total - n_test);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = n_test + i;
  std::vector<bool> chosen(n_total, false);

  if (task.kind == TaskKind::a) {
    // Round-robin over classes so every class gets an equal share of S.
    const std::size_t k = task.a.classes;
    std::vector<std::vector<std::size_t>> by_class(k);
    for (std::size_t idx : pool) by_class[static_cast<std::size_t>(all[idx].labels[0])].push_back(idx);
    std::vector<std::size_t> cursor(k, 0);
    std::size_t taken = 0;
    for (std::size_t c = 0; taken < n_supervised; c = (c + 1) % k) {
      if (cursor[c] < by_class[c].size()) {
        const std::size_t idx = by_class[c][cursor[c]++];
        chosen[idx] = true;
        split.supervised.push_back(all[idx]);
        ++taken;
      }
    }
  } else {
    for (std::size_t i = 0; i < n_supervised; ++i) {
      chosen[pool[i]] = true;
      split.supervised.push_back(all[pool[i]]);
    }
  }
  for (std::size_t idx : pool) {
    if (chosen[idx]) continue;
    split.unsupervised.push_back(all[idx].x);
    split.withheld_labels.push_back(all[idx].labels);
  }
  return split;
}

Condition sample_prior_conditions(const TaskSpec& task, std::size_t n, Rng& rng) {
  if (task.kind != TaskKind::a) {
    throw UnsupportedTask("sample_prior_conditions: semantic-grid conditions cannot be sampled from a prior");
  }
  const std::vector<double> prior = task.a.resolved_prior();
  std::discrete_distribution<int> pick(prior.begin(), prior.end());
  std::vector<int> labels(n);
  for (int& l : labels) l = pick(rng);
  return Condition::from_labels(task.layout(), labels);
}

namespace {

// Distances this close count as ties (the ring means carry rounding error).
constexpr double kTieTol = 1e-12;

}  // namespace

std::vector<int> bayes_oracle_label(const TaskSpec& task, std::span<const double> x) {
  if (x.size() != task.data_dim()) {
    throw ShapeError("bayes_oracle_label: sample of length " + std::to_string(x.size()) +
                     " for data dimension " + std::to_string(task.data_dim()));
  }
  if (task.kind == TaskKind::a) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < task.a.classes; ++c) {
      const auto mu = task.a.mean(c);
      const double d = (x[0] - mu[0]) * (x[0] - mu[0]) + (x[1] - mu[1]) * (x[1] - mu[1]);
      if (c == 0 || d < best_d - kTieTol * (1.0 + best_d)) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    return {best};
  }
  std::vector<int> out(task.b.cells);
  for (std::size_t i = 0; i < task.b.cells; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < task.b.labels; ++l) {
      const double d = std::abs(x[i] - task.b.means[l]);
      if (l == 0 || d < best_d - kTieTol * (1.0 + best_d)) {
        best_d = d;
        best = static_cast<int>(l);
      }
    }
    out[i] = best;
  }
  return out;
}

std::vector<int> bayes_oracle_labels(const TaskSpec& task, const Tensor& x) {
  std::vector<int> out;
  out.reserve(x.rows() * task.layout().cells);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto labels = bayes_oracle_label(task, x.row(r));
    out.insert(out.end(), labels.begin(), labels.end());
  }
  return out;
}

std::vector<double> render_mean(const TaskSpec& task, std::span<const int> labels) {
  if (task.kind == TaskKind::a) return task.a.mean(static_cast<std::size_t>(labels[0]));
  std::vector<double> x(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) x[i] = task.b.means[static_cast<std::size_t>(labels[i])];
  return x;
}

Tensor samples_x(std::span<const Sample> samples) {
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(s.x);
  return stack_rows(rows);
}

Condition samples_condition(const TaskSpec& task, std::span<const Sample> samples) {
  std::vector<int> labels;
  for (const auto& s : samples) labels.insert(labels.end(), s.labels.begin(), s.labels.end());
  return Condition::from_labels(task.layout(), labels);
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_dataset_csv(const std::filesystem::path& path, const TaskSpec& task,
                       std::span<const CsvRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_dataset_csv: cannot open " + path.string());
  const std::size_t d = task.data_dim();
  const std::size_t cells = task.layout().cells;
  for (std::size_t i = 0; i < d; ++i) out << (i ? "," : "") << "x_" << i;
  for (std::size_t i = 0; i < cells; ++i) out << ",c_" << i;
  out << '\n';
  for (const auto& row : rows) {
    if (row.x.size() != d) throw ShapeError("write_dataset_csv: row has wrong data dimension");
    for (std::size_t i = 0; i < d; ++i) out << (i ? "," : "") << format_double(row.x[i]);
    for (std::size_t i = 0; i < cells; ++i) {
      out << ',';
      if (row.labels) out << (*row.labels).at(i);
    }
    out << '\n';
  }
  if (!out) throw IoError("write_dataset_csv: write failed for " + path.string());
}

std::vector<CsvRow> read_dataset_csv(const std::filesystem::path& path, const TaskSpec& task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_dataset_csv: cannot open " + path.string());
  const std::size_t d = task.data_dim();
  const std::size_t cells = task.layout().cells;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("read_dataset_csv: missing header in " + path.string());
  if (split_csv_line(line).size() != d + cells) {
    throw FormatError("read_dataset_csv: header has wrong column count in " + path.string());
  }
  std::vector<CsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != d + cells) {
      throw FormatError("read_dataset_csv: line " + std::to_string(line_no) + " has " +
                        std::to_string(cols.size()) + " columns");
    }
    CsvRow row;
    try {
      for (std::size_t i = 0; i < d; ++i) row.x.push_back(std::stod(cols[i]));
      const bool labelled = !cols[d].empty();
      if (labelled) {
        std::vector<int> labels;
        for (std::size_t i = 0; i < cells; ++i) labels.push_back(std::stoi(cols[d + i]));
        row.labels = std::move(labels);
      }
    } catch (const std::logic_error&) {
      throw FormatError("read_dataset_csv: unparsable value on line " + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CsvRow> split_rows(const DatasetSplit& split) {
  std::vector<CsvRow> rows;
  for (const auto& s : split.supervised) rows.push_back({s.x, s.labels});
  for (const auto& x : split.unsupervised) rows.push_back({x, std::nullopt});
  for (const auto& s : split.test) rows.push_back({s.x, s.labels});
  return rows;
}

}  // namespace s2cgan
