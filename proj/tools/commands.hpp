#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace fbllr::cli {

/// Runs the pre-baked plans for one figure, writes CSVs and a summary under
/// output_dir, and returns 0 when every threshold holds, 1 otherwise.
int reproduce(const std::string& id, const std::string& scale, const std::string& output_dir,
              std::optional<std::uint64_t> seed, int verbosity);

}  // namespace fbllr::cli
