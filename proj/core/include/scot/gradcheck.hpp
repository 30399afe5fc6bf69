#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scot/types.hpp"

namespace scot {

enum class GradComponent { kIntra, kEncoder, kAlign, kContrastive, kCycle, kHub, kTotal, kAll };

GradComponent parse_grad_component(const std::string& text);
std::string to_string(GradComponent component);

struct GradBlockError {
  std::string block;
  double max_rel_error = 0.0;
  bool finite = true;
};

struct GradcheckOptions {
  Index regions = 5;
  Index dim = 3;
  double step = 1e-5;
  double threshold = 1e-3;
  bool zero_embeddings = false;  // exercise the degenerate all-zero input
};

struct GradcheckReport {
  std::vector<GradBlockError> blocks;
  double threshold = 1e-3;

  bool ok() const;
  double max_error() const;
  std::vector<std::string> failing_blocks() const;
};

/// Central finite differences against the analytic gradients of each module,
/// under each module's convention (couplings held fixed where the module
/// treats them as constants). Relative error per entry is
/// |a - f| / max(|a|, |f|, 1e-4 * block_scale + 1e-10).
GradcheckReport gradcheck(GradComponent component, std::uint64_t seed,
                          const GradcheckOptions& options = {});

/// Entrywise relative error between two gradient blocks as used above.
double relative_error(const Matrix& analytic, const Matrix& numeric);

}  // namespace scot
