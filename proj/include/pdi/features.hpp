#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdi/textstats.hpp"
#include "pdi/trajectory.hpp"

namespace pdi {

enum class FeatureGroup { ExplorationDynamics, MemoQuality, SkillStructure, NonPredictive };
std::string_view feature_group_name(FeatureGroup g);

struct FeatureSpec {
  std::string_view id;
  FeatureGroup group;
};

inline constexpr std::size_t kFeatureCount = 23;

// Canonical order; also the CSV column order.
const std::array<FeatureSpec, kFeatureCount>& feature_specs();

// Index of a feature id; throws InvalidArgument for unknown ids.
std::size_t feature_index(std::string_view id);

class FeatureVector {
 public:
  std::optional<double> get(std::string_view id) const { return values_[feature_index(id)]; }
  void set(std::string_view id, double value) { values_[feature_index(id)] = value; }
  const std::optional<double>& at(std::size_t i) const { return values_.at(i); }

  // Fills every feature present in other.
  void merge(const FeatureVector& other);

  bool operator==(const FeatureVector&) const = default;

 private:
  std::array<std::optional<double>, kFeatureCount> values_{};
};

struct FeatureConfig {
  TokenizerConfig tokenizer;
  std::vector<std::string> negation_keywords = {"not", "never", "failed", "wrong"};
  double pivot_threshold = 0.15;
  int novelty_order = 3;
};

// Undefined features stay absent; nothing is zero-filled.
FeatureVector exploration_dynamics(const TrajectoryBundle& bundle,
                                   const FeatureConfig& config = {});
FeatureVector memo_quality(const TrajectoryBundle& bundle, const FeatureConfig& config = {});
FeatureVector skill_structure(const TrajectoryBundle& bundle,
                              const FeatureConfig& config = {});
FeatureVector non_predictive_controls(const TrajectoryBundle& bundle,
                                      const FeatureConfig& config = {});
FeatureVector extract_features(const TrajectoryBundle& bundle,
                               const FeatureConfig& config = {});

// Concrete references and word count in one error-pattern section: backtick
// spans (one word each), words with a digit, and path-like words.
struct Specificity {
  std::size_t concrete = 0;
  std::size_t words = 0;
};
Specificity error_specificity(std::string_view text);

// Lines that open a bullet ("- ", "* ") or numbered item ("1. ", "2) ").
std::size_t count_action_items(std::string_view text);

}  // namespace pdi
