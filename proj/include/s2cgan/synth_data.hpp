#pragma once

// Synthetic conditional tasks with known generating structure.
//
// Task A: K Gaussian components on a ring, x in R^2, the condition is the
// component (class) index.
// Task B: a 1-D "semantic map" of N cells whose labels follow a sticky Markov
// chain; each cell renders as the label's mean plus Gaussian noise.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "s2cgan/nets.hpp"

namespace s2cgan {

enum class TaskKind : std::uint8_t { a, b };

struct TaskASpec {
  std::size_t classes = 4;
  double radius = 2.0;
  double sigma = 0.15;
  std::vector<double> prior;  // empty means uniform

  std::vector<double> resolved_prior() const;
  // Component mean of class c.
  std::vector<double> mean(std::size_t c) const;
};

struct TaskBSpec {
  std::size_t cells = 16;
  std::size_t labels = 3;
  std::vector<double> means{-1.0, 0.0, 1.0};
  double noise_std = 0.25;
  double stay_prob = 0.8;
};

struct TaskSpec {
  TaskKind kind = TaskKind::a;
  TaskASpec a;
  TaskBSpec b;

  void validate() const;
  ConditionLayout layout() const;
  std::size_t data_dim() const;
};

struct Sample {
  std::vector<double> x;
  std::vector<int> labels;  // one per cell
};

std::vector<Sample> sample_task_a(const TaskASpec& spec, Rng& rng, std::size_t n);
std::vector<Sample> sample_task_b(const TaskBSpec& spec, Rng& rng, std::size_t n);
std::vector<Sample> sample_task(const TaskSpec& spec, Rng& rng, std::size_t n);

struct DatasetSplit {
  TaskSpec task;
  std::vector<Sample> supervised;
  std::vector<std::vector<double>> unsupervised;
  // Ground truth for `unsupervised`, kept only for audit diagnostics (pseudo
  // label accuracy). Training never reads it.
  std::vector<std::vector<int>> withheld_labels;
  std::vector<Sample> test;
  std::uint64_t seed = 0;
};

// Draws n_total samples; the first n_test become the test set, then
// n_supervised labelled pairs (class-stratified for Task A), the rest form U.
DatasetSplit make_splits(const TaskSpec& task, std::size_t n_total, std::size_t n_supervised,
                         std::size_t n_test, std::uint64_t seed);

// Draws n one-hot class conditions from the Task A prior. Grid tasks have
// no sampleable prior and throw UnsupportedTask.
Condition sample_prior_conditions(const TaskSpec& task, std::size_t n, Rng& rng);

// Task A: nearest component mean. Task B: nearest label mean per cell. Ties
// go to the lowest index.
std::vector<int> bayes_oracle_label(const TaskSpec& task, std::span<const double> x);
// Row-wise oracle over a (batch, data_dim) tensor; labels are row-major.
std::vector<int> bayes_oracle_labels(const TaskSpec& task, const Tensor& x);

// Noise-free rendering of a labelling: the class mean or per-cell label means.
std::vector<double> render_mean(const TaskSpec& task, std::span<const int> labels);

// Batch helpers.
Tensor samples_x(std::span<const Sample> samples);
Condition samples_condition(const TaskSpec& task, std::span<const Sample> samples);

// CSV with header x_0..x_{d-1},c_0..c_{cells-1}; label cells are empty for
// unlabelled rows.
struct CsvRow {
  std::vector<double> x;
  std::optional<std::vector<int>> labels;
};
void write_dataset_csv(const std::filesystem::path& path, const TaskSpec& task,
                       std::span<const CsvRow> rows);
std::vector<CsvRow> read_dataset_csv(const std::filesystem::path& path, const TaskSpec& task);
// Every row of a split: S, then U, then the test set.
std::vector<CsvRow> split_rows(const DatasetSplit& split);

}  // namespace s2cgan
