#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "s2cgan/objectives.hpp"
#include "s2cgan/synth_data.hpp"

namespace s2cgan {

struct SplitSpec {
  std::size_t n_total = 4508;
  std::size_t n_supervised = 8;
  std::size_t n_test = 500;
  std::uint64_t seed = 1234;
  bool operator==(const SplitSpec&) const = default;
};

struct ArchSpec {
  std::vector<std::size_t> generator_hidden{128, 128};
  std::vector<std::size_t> discriminator_hidden{128, 128};
  std::vector<std::size_t> labeller_hidden{128, 128};
  std::size_t noise_dim = 4;
  bool operator==(const ArchSpec&) const = default;
};

struct OptimizerSpec {
  double lr_d = 2e-4;
  double lr_g = 2e-4;
  double lr_l = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t steps = 6000;
  std::size_t batch_sup = 0;  // 0 means min(|S|, 16)
  std::size_t batch_unsup = 64;
  std::size_t d_steps_per_g_step = 1;

  void validate() const;
  bool operator==(const OptimizerSpec&) const = default;
};

enum class Surrogate : std::uint8_t { non_saturating, saturating };
enum class LabelSampling : std::uint8_t { soft, straight_through };
enum class NoiseMode : std::uint8_t { fixed, fresh, zero };

struct StopGradientFlags {
  bool real_pair = false;
  bool generator_input = false;
  bool fake_pair = false;
  bool operator==(const StopGradientFlags&) const = default;
};

struct InferenceSpec {
  NoiseMode noise = NoiseMode::fresh;
  // Reuse the first pass's noise in the second pass of two-pass inference.
  bool reuse_noise = true;
  bool operator==(const InferenceSpec&) const = default;
};

struct ExperimentConfig {
  TaskSpec task;
  SplitSpec split;
  ArchSpec arch;
  OptimizerSpec optimizer;
  Lambdas lambdas;
  double tau = 1.0;
  // When set, tau moves linearly from `tau` to `tau_final` over the run.
  std::optional<double> tau_final;
  LabelSampling label_sampling = LabelSampling::soft;
  Surrogate surrogate = Surrogate::non_saturating;
  std::size_t warmup_steps = 500;
  StopGradientFlags stop_gradient;
  bool independent_unsup_batches = false;
  std::size_t eval_every = 500;
  std::size_t eval_passes = 1;
  std::size_t checkpoint_every = 0;  // 0 writes only the final checkpoint
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<double> mmd_bandwidth_scales{0.5, 1.0, 2.0};
  std::size_t naive_pretrain_steps = 2000;
  InferenceSpec inference;

  void validate() const;
  double tau_at(std::size_t step) const;
  std::size_t resolved_batch_sup(std::size_t n_supervised) const;
  std::vector<std::size_t> generator_widths() const;
  std::vector<std::size_t> discriminator_widths() const;
  std::vector<std::size_t> labeller_widths() const;

  bool operator==(const ExperimentConfig&) const;
};

// Defaults for a task: sizes, steps and noise width differ between tasks.
ExperimentConfig default_config(TaskKind kind);

// Strict parse: unknown keys, type mismatches and invariant violations throw
// ConfigError carrying a JSON pointer to the offending key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

// Fully resolved canonical form; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& config);

// SHA-256 of the canonical JSON dump.
std::array<std::uint8_t, 32> config_hash(const ExperimentConfig& config);

}  // namespace s2cgan
