#pragma once

// Metrics CSV and scatter-plot SVG output.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2cgan/metrics.hpp"

namespace s2cgan {

inline constexpr const char* kMetricsHeader =
    "step,v_sup,v_labeller,v_unsup,v_full,label_agreement,mean_iou,mmd2,marginal_tv,pseudo_label_acc";

// Shortest round-trip decimal form, '.' separator regardless of locale.
std::string format_double(double v);

std::string metrics_csv(std::span<const MetricsRecord> history);
void emit_metrics_csv(std::span<const MetricsRecord> history, const std::filesystem::path& path);

// One parsed CSV row; absent cells are empty.
struct MetricsRow {
  std::size_t step = 0;
  std::vector<std::optional<double>> values;  // the nine columns after step
};
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);

// Real points as circles, generated points as crosses, one colour per class.
std::string scatter_svg(const Tensor& real, std::span<const int> real_labels, const Tensor& fake,
                        std::span<const int> fake_labels);
void emit_scatter_svg(const Tensor& real, std::span<const int> real_labels, const Tensor& fake,
                      std::span<const int> fake_labels, const std::filesystem::path& path);

}  // namespace s2cgan
