#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fbllr/diffusion.hpp"
#include "fbllr/problem.hpp"
#include "fbllr/solver_config.hpp"

namespace fbllr {

/// Particle positions at one time level, row-major M x d (particle-major).
struct LevelState {
    std::size_t k = 0;
    double t = 0.0;
    std::size_t M = 0;
    std::size_t d = 0;
    Vec positions;

    std::span<const double> particle(std::size_t j) const { return {positions.data() + j * d, d}; }
    std::span<double> particle(std::size_t j) { return {positions.data() + j * d, d}; }
};

/// t_k = k * dt with dt = T / N; every module uses this one expression.
inline double level_time(std::size_t k, double dt) { return static_cast<double>(k) * dt; }

/// M copies of the query point at k = 0.
LevelState initial_level(const ProblemSpec& problem, std::size_t M);

/// One Euler-Maruyama step X_{k+1} = X_k + mu dt + sigma dW for every particle,
/// with dW drawn from the (seed, j, k) stream. Throws NumericalBlowup.
LevelState step_level(const LevelState& state, const ProblemSpec& problem, double dt, std::uint64_t seed,
                      std::size_t workers = 1);

/// Forward trajectories, either every level or checkpoints every `stride`
/// levels plus the terminal level.
class PathStore {
public:
    enum class Mode { Full, Checkpointed };

    PathStore(Mode mode, std::size_t N, std::size_t M, std::size_t d, std::size_t stride, std::uint64_t seed,
              double dt);

    Mode mode() const noexcept { return mode_; }
    std::size_t N() const noexcept { return N_; }
    std::size_t M() const noexcept { return M_; }
    std::size_t d() const noexcept { return d_; }
    std::size_t stride() const noexcept { return stride_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double dt() const noexcept { return dt_; }

    bool should_store(std::size_t k) const noexcept;
    bool has(std::size_t k) const noexcept { return levels_.count(k) != 0; }
    const LevelState& stored(std::size_t k) const;
    void put(LevelState level);

    /// Index of the nearest stored level <= k.
    std::size_t checkpoint_below(std::size_t k) const;
    std::size_t stored_levels() const noexcept { return levels_.size(); }
    std::size_t stored_scalars() const noexcept { return levels_.size() * M_ * d_; }

private:
    Mode mode_;
    std::size_t N_, M_, d_, stride_;
    std::uint64_t seed_;
    double dt_;
    std::map<std::size_t, LevelState> levels_;
};

/// Storage layout chosen for a run: Full when all N+1 levels fit the memory
/// budget, otherwise checkpoints with stride ceil(sqrt(N)) (or the configured
/// stride). Throws ConfigError when fewer than two levels fit.
struct StoragePlan {
    PathStore::Mode mode;
    std::size_t stride;
    std::size_t level_bytes;
    std::size_t checkpoint_bytes;
};
StoragePlan plan_storage(std::size_t N, std::size_t M, std::size_t d, const SolverConfig& config);

PathStore simulate_paths(const ProblemSpec& problem, const SolverConfig& config);

/// Positions at level k, bitwise identical to what Full mode would hold.
LevelState restore_level(const PathStore& store, std::size_t k, const ProblemSpec& problem,
                         const SolverConfig& config);

/// Serves levels in descending order during the backward sweep. In
/// checkpointed mode a whole segment between checkpoints is re-simulated once
/// and cached, so the total extra forward work is at most one full pass.
class LevelCursor {
public:
    LevelCursor(const PathStore& store, const ProblemSpec& problem, const SolverConfig& config);

    const LevelState& level(std::size_t k);
    std::size_t resimulated_steps() const noexcept { return resimulated_; }

private:
    const PathStore& store_;
    const ProblemSpec& problem_;
    const SolverConfig& config_;
    std::map<std::size_t, LevelState> segment_;
    std::size_t segment_begin_ = 0;
    std::size_t resimulated_ = 0;
};

/// Binary dump of one level: a 32-byte little-endian header
///   magic "FBLL" | version u32 | k u32 | M u32 | d u32 | reserved u32 (0) | seed u64
/// followed by M*d little-endian f64 values, particle-major.
inline constexpr std::uint32_t kLevelDumpVersion = 1;

void write_level_dump(std::ostream& out, const LevelState& level, std::uint64_t seed);
void write_level_dump(const std::string& path, const LevelState& level, std::uint64_t seed);

struct LevelDump {
    LevelState level;
    std::uint64_t seed = 0;
};
/// Throws InvalidArgument for a bad magic/version or truncated payload.
LevelDump read_level_dump(std::istream& in, double dt);
LevelDump read_level_dump(const std::string& path, double dt);

}  // namespace fbllr
