// SPDX-License-Identifier: Apache-2.0

#include "r2s2/array_config.hpp"

#include <algorithm>

namespace r2s2 {

void ChannelSplit::validate() const {
  std::vector<char> seen(static_cast<size_t>(n_total), 0);
  auto mark = [&](const std::vector<int>& idx) {
    for (int i : idx) {
      if (i < 0 || i >= n_total) throw ShapeError("split index out of bounds");
      if (seen[static_cast<size_t>(i)]) throw ShapeError("split indices overlap");
      seen[static_cast<size_t>(i)] = 1;
    }
  };
  mark(input_idx);
  mark(label_idx);
  for (char c : seen)
    if (!c) throw ShapeError("split does not cover all channels");
  if (!std::is_sorted(input_idx.begin(), input_idx.end()) ||
      !std::is_sorted(label_idx.begin(), label_idx.end()))
    throw ShapeError("split indices must be ascending");
}

ChannelSplit make_split(SplitKind kind, int n_total, int n_input, uint64_t seed) {
  if (n_total < 2) throw ConfigError("make_split: n_total must be >= 2");
  if (n_input < 1 || n_input >= n_total)
    throw ConfigError("make_split: need 1 <= n_input < n_total");

  ChannelSplit s;
  s.kind = kind;
  s.n_total = n_total;
  s.seed = seed;

  switch (kind) {
    case SplitKind::kSuperResolution: {
      int start = (n_total - n_input) / 2;
      for (int i = start; i < start + n_input; ++i) s.input_idx.push_back(i);
      break;
    }
    case SplitKind::kSparseArray: {
      if (n_input < 2) throw ConfigError("make_split: sparse_array needs n_input >= 2");
      if ((n_total - 1) % (n_input - 1) != 0)
        throw ConfigError("make_split: sparse_array spacing is non-integral");
      int spacing = (n_total - 1) / (n_input - 1);
      for (int i = 0; i < n_input; ++i) s.input_idx.push_back(i * spacing);
      break;
    }
    case SplitKind::kRandomMissing: {
      int k = n_total - n_input;
      if (k < 1 || k > 8)
        throw ConfigError("make_split: random_missing supports 1..8 missing channels");
      Rng rng(seed);
      s.label_idx = rng.sample_without_replacement(n_total, k);
      break;
    }
  }

  std::vector<char> is_input(static_cast<size_t>(n_total), 0);
  if (kind == SplitKind::kRandomMissing) {
    for (int i : s.label_idx) is_input[static_cast<size_t>(i)] = 1;  // mark labels
    for (int i = 0; i < n_total; ++i)
      if (!is_input[static_cast<size_t>(i)]) s.input_idx.push_back(i);
  } else {
    for (int i : s.input_idx) is_input[static_cast<size_t>(i)] = 1;
    for (int i = 0; i < n_total; ++i)
      if (!is_input[static_cast<size_t>(i)]) s.label_idx.push_back(i);
  }
  s.validate();
  return s;
}

SplitCubes apply_split(const RdCube& rd, const ChannelSplit& s) {
  if (rd.n_channels != s.n_total) throw ShapeError("apply_split: channel count mismatch");
  s.validate();
  SplitCubes out;
  out.input = RdCube(s.n_input(), rd.n_range, rd.n_doppler);
  out.label = RdCube(s.n_label(), rd.n_range, rd.n_doppler);
  int64_t cells = rd.cells_per_channel();
  for (int i = 0; i < s.n_input(); ++i)
    std::copy_n(&rd.v[static_cast<size_t>(s.input_idx[static_cast<size_t>(i)]) * cells], cells,
                &out.input.v[static_cast<size_t>(i) * cells]);
  for (int i = 0; i < s.n_label(); ++i)
    std::copy_n(&rd.v[static_cast<size_t>(s.label_idx[static_cast<size_t>(i)]) * cells], cells,
                &out.label.v[static_cast<size_t>(i) * cells]);
  return out;
}

RdCube reassemble(const RdCube& input_rd, const RdCube& predicted_rd, const ChannelSplit& s) {
  s.validate();
  if (input_rd.n_channels != s.n_input())
    throw ShapeError("reassemble: input channel count mismatch");
  if (predicted_rd.n_channels != s.n_label())
    throw ShapeError("reassemble: predicted channel count mismatch");
  if (input_rd.n_range != predicted_rd.n_range || input_rd.n_doppler != predicted_rd.n_doppler)
    throw ShapeError("reassemble: cube extents mismatch");

  RdCube full(s.n_total, input_rd.n_range, input_rd.n_doppler);
  int64_t cells = full.cells_per_channel();
  for (int i = 0; i < s.n_input(); ++i)
    std::copy_n(&input_rd.v[static_cast<size_t>(i) * cells], cells,
                &full.v[static_cast<size_t>(s.input_idx[static_cast<size_t>(i)]) * cells]);
  for (int i = 0; i < s.n_label(); ++i)
    std::copy_n(&predicted_rd.v[static_cast<size_t>(i) * cells], cells,
                &full.v[static_cast<size_t>(s.label_idx[static_cast<size_t>(i)]) * cells]);
  return full;
}

SplitKind split_kind_from_string(const std::string& s) {
  if (s == "super_resolution") return SplitKind::kSuperResolution;
  if (s == "sparse_array") return SplitKind::kSparseArray;
  if (s == "random_missing") return SplitKind::kRandomMissing;
  throw ConfigError("unknown split kind '" + s + "'");
}

std::string to_string(SplitKind k) {
  switch (k) {
    case SplitKind::kSuperResolution: return "super_resolution";
    case SplitKind::kSparseArray: return "sparse_array";
    case SplitKind::kRandomMissing: return "random_missing";
  }
  return "?";
}

}  // namespace r2s2
