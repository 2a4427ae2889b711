#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pdi/trajectory.hpp"

namespace pdi::fixtures {

Memo make_memo(int k, std::vector<std::string> log, std::vector<std::string> commands,
               std::vector<std::string> facts, std::string error, std::string strategy);
SkillDocument make_skill(std::string_view text);

// Random but valid bundle. attempts >= 1; solved puts reward 1 on the last
// attempt and attaches a skill.
TrajectoryBundle random_bundle(std::mt19937_64& rng, const std::string& task_id, int attempts,
                               bool solved);

// n iterative, solved bundles with skills (some with a single memo).
std::vector<TrajectoryBundle> synthetic_cohort(std::uint64_t seed, std::size_t n);

// Ten bundles with evaluation records for three models: two interaction-free,
// six iterative solved, two unsolved.
std::vector<TrajectoryBundle> fixture_corpus();

// Six bundles whose PDI ordering does not depend on alpha: only the solved
// commands differ, sharing j of the five skill tokens for bundle j.
std::vector<TrajectoryBundle> alpha_invariant_cohort();

void write_corpus(const std::vector<TrajectoryBundle>& bundles, const std::filesystem::path& dir);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace pdi::fixtures
