// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "r2s2/radar_types.hpp"

namespace r2s2 {

enum class SplitKind { kSuperResolution, kSparseArray, kRandomMissing };

// Partition of the array channels into network inputs and self-supervision
// labels. input_idx and label_idx are ascending and together cover
// [0, n_total) exactly once.
struct ChannelSplit {
  SplitKind kind = SplitKind::kSuperResolution;
  int n_total = 16;
  std::vector<int> input_idx;
  std::vector<int> label_idx;
  uint64_t seed = 0;  // random_missing only

  int n_input() const { return static_cast<int>(input_idx.size()); }
  int n_label() const { return static_cast<int>(label_idx.size()); }
  void validate() const;
};

// super_resolution: the central n_input channels are inputs.
// sparse_array:     n_input channels uniformly spaced including both ends;
//                   requires (n_total-1) divisible by (n_input-1).
// random_missing:   n_total-n_input distinct label channels drawn from seed;
//                   the missing count must be in [1, 8].
ChannelSplit make_split(SplitKind kind, int n_total = 16, int n_input = 4, uint64_t seed = 0);

// Channel subsets in split order; values are copied unmodified.
struct SplitCubes {
  RdCube input;
  RdCube label;
};
SplitCubes apply_split(const RdCube& rd, const ChannelSplit& s);

// Inverse of apply_split with predictions standing in for the labels:
// channel n of the result holds input data if n is an input index, otherwise
// the corresponding predicted channel.
RdCube reassemble(const RdCube& input_rd, const RdCube& predicted_rd, const ChannelSplit& s);

SplitKind split_kind_from_string(const std::string& s);
std::string to_string(SplitKind k);

}  // namespace r2s2
