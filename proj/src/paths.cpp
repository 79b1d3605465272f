#include "fbllr/paths.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "fbllr/error.hpp"
#include "fbllr/parallel.hpp"
#include "fbllr/rng.hpp"

namespace fbllr {

LevelState initial_level(const ProblemSpec& problem, std::size_t M) {
    const std::size_t d = problem.dimension;
    LevelState s{0, 0.0, M, d, Vec(M * d)};
    for (std::size_t j = 0; j < M; ++j) {
        std::copy(problem.query_point.begin(), problem.query_point.end(), s.positions.begin() + j * d);
    }
    return s;
}

LevelState step_level(const LevelState& state, const ProblemSpec& problem, double dt, std::uint64_t seed,
                      std::size_t workers) {
    const std::size_t M = state.M;
    const std::size_t d = state.d;
    LevelState next{state.k + 1, level_time(state.k + 1, dt), M, d, Vec(M * d)};
    const double t = state.t;
    parallel_for(M, workers, [&](std::size_t begin, std::size_t end, std::size_t) {
        Vec dw(d), incr(d), mu(problem.has_drift() ? d : 0);
        for (std::size_t j = begin; j < end; ++j) {
            const auto x = state.particle(j);
            auto out = next.particle(j);
            gaussian_block({seed, j, state.k}, dt, dw);
            problem.diffusion.apply(dw, incr);
            if (problem.has_drift()) {
                problem.drift(t, x, mu);
                for (std::size_t i = 0; i < d; ++i) out[i] = x[i] + mu[i] * dt + incr[i];
            } else {
                for (std::size_t i = 0; i < d; ++i) out[i] = x[i] + incr[i];
            }
            for (std::size_t i = 0; i < d; ++i) {
                if (!std::isfinite(out[i])) throw NumericalBlowup(j, state.k);
            }
        }
    });
    return next;
}

PathStore::PathStore(Mode mode, std::size_t N, std::size_t M, std::size_t d, std::size_t stride,
                     std::uint64_t seed, double dt)
    : mode_(mode), N_(N), M_(M), d_(d), stride_(mode == Mode::Full ? 1 : stride), seed_(seed), dt_(dt) {
    if (stride_ == 0) throw InvalidArgument("checkpoint stride must be >= 1");
}

bool PathStore::should_store(std::size_t k) const noexcept {
    return mode_ == Mode::Full || k % stride_ == 0 || k == N_;
}

const LevelState& PathStore::stored(std::size_t k) const {
    const auto it = levels_.find(k);
    if (it == levels_.end()) throw InvalidArgument("level " + std::to_string(k) + " is not stored");
    return it->second;
}

void PathStore::put(LevelState level) {
    const std::size_t k = level.k;
    levels_.insert_or_assign(k, std::move(level));
}

std::size_t PathStore::checkpoint_below(std::size_t k) const {
    auto it = levels_.upper_bound(k);
    if (it == levels_.begin()) throw InvalidArgument("no checkpoint at or below level " + std::to_string(k));
    return std::prev(it)->first;
}

StoragePlan plan_storage(std::size_t N, std::size_t M, std::size_t d, const SolverConfig& config) {
    const std::size_t level_bytes = M * d * sizeof(double);
    const std::size_t budget = config.memory_budget_bytes;
    if (budget < 2 * level_bytes) {
        throw ConfigError("memory budget of " + std::to_string(budget) + " bytes cannot hold two levels of " +
                          std::to_string(level_bytes) + " bytes");
    }
    if ((N + 1) <= budget / level_bytes) {
        return {PathStore::Mode::Full, 1, level_bytes, (N + 1) * level_bytes};
    }
    std::size_t stride = config.checkpoint_stride.value_or(
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(N)))));
    stride = std::max<std::size_t>(1, std::min(stride, N));
    const std::size_t checkpoints = (N + stride - 1) / stride + 1;
    return {PathStore::Mode::Checkpointed, stride, level_bytes, checkpoints * level_bytes};
}

PathStore simulate_paths(const ProblemSpec& problem, const SolverConfig& config) {
    if (config.N < 1) throw ConfigError("N must be >= 1");
    if (config.M < 2) throw ConfigError("M must be >= 2");
    const StoragePlan plan = plan_storage(config.N, config.M, problem.dimension, config);
    const double dt = problem.horizon / static_cast<double>(config.N);
    PathStore store(plan.mode, config.N, config.M, problem.dimension, plan.stride, config.seed, dt);
    const std::size_t workers = config.effective_workers();
    LevelState current = initial_level(problem, config.M);
    for (std::size_t k = 0; k < config.N; ++k) {
        LevelState next = step_level(current, problem, dt, config.seed, workers);
        if (store.should_store(k)) store.put(std::move(current));
        current = std::move(next);
    }
    store.put(std::move(current));
    return store;
}

LevelState restore_level(const PathStore& store, std::size_t k, const ProblemSpec& problem,
                         const SolverConfig& config) {
    if (k > store.N()) throw InvalidArgument("level " + std::to_string(k) + " beyond N");
    if (store.has(k)) return store.stored(k);
    LevelState s = store.stored(store.checkpoint_below(k));
    const std::size_t workers = config.effective_workers();
    while (s.k < k) s = step_level(s, problem, store.dt(), store.seed(), workers);
    return s;
}

LevelCursor::LevelCursor(const PathStore& store, const ProblemSpec& problem, const SolverConfig& config)
    : store_(store), problem_(problem), config_(config) {}

const LevelState& LevelCursor::level(std::size_t k) {
    if (k > store_.N()) throw InvalidArgument("level " + std::to_string(k) + " beyond N");
    if (store_.has(k)) return store_.stored(k);
    if (auto it = segment_.find(k); it != segment_.end()) return it->second;
    // Re-simulate the whole segment [checkpoint, next checkpoint).
    segment_.clear();
    segment_begin_ = store_.checkpoint_below(k);
    const std::size_t workers = config_.effective_workers();
    const LevelState* prev = &store_.stored(segment_begin_);
    for (std::size_t j = segment_begin_ + 1; j < store_.N() && !store_.has(j); ++j) {
        LevelState next = step_level(*prev, problem_, store_.dt(), store_.seed(), workers);
        ++resimulated_;
        prev = &segment_.emplace(j, std::move(next)).first->second;
    }
    return segment_.at(k);
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U bits;
    std::memcpy(&bits, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw InvalidArgument("truncated level dump");
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
    T value;
    std::memcpy(&value, &bits, sizeof(T));
    return value;
}

}  // namespace

void write_level_dump(std::ostream& out, const LevelState& level, std::uint64_t seed) {
    out.write("FBLL", 4);
    put_le<std::uint32_t>(out, kLevelDumpVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(level.k));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(level.M));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(level.d));
    put_le<std::uint32_t>(out, 0u);
    put_le<std::uint64_t>(out, seed);
    for (double v : level.positions) put_le<double>(out, v);
    if (!out) throw Error("failed to write level dump");
}

void write_level_dump(const std::string& path, const LevelState& level, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_level_dump(out, level, seed);
}

LevelDump read_level_dump(std::istream& in, double dt) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "FBLL", 4) != 0) throw InvalidArgument("bad level dump magic");
    if (get_le<std::uint32_t>(in) != kLevelDumpVersion) throw InvalidArgument("unsupported level dump version");
    LevelDump dump;
    dump.level.k = get_le<std::uint32_t>(in);
    dump.level.M = get_le<std::uint32_t>(in);
    dump.level.d = get_le<std::uint32_t>(in);
    (void)get_le<std::uint32_t>(in);
    dump.seed = get_le<std::uint64_t>(in);
    dump.level.t = level_time(dump.level.k, dt);
    dump.level.positions.resize(dump.level.M * dump.level.d);
    for (double& v : dump.level.positions) v = get_le<double>(in);
    return dump;
}

LevelDump read_level_dump(const std::string& path, double dt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    return read_level_dump(in, dt);
}

}  // namespace fbllr
