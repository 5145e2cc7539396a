// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "r2s2/common.hpp"
#include "r2s2/kernels.hpp"

namespace r2s2::kernels {
namespace {

const Ops* select_auto() {
  if (const Ops* a = avx2_ops()) return a;
  if (const Ops* n = neon_ops()) return n;
  return &scalar_ops();
}

const Ops* select_named(const char* which) {
  if (std::strcmp(which, "auto") == 0) return select_auto();
  if (std::strcmp(which, "scalar") == 0) return &scalar_ops();
  if (std::strcmp(which, "avx2") == 0) {
    if (const Ops* a = avx2_ops()) return a;
    throw ConfigError("avx2 kernels unavailable on this CPU/build");
  }
  if (std::strcmp(which, "neon") == 0) {
    if (const Ops* n = neon_ops()) return n;
    throw ConfigError("neon kernels unavailable on this CPU/build");
  }
  throw ConfigError(std::string("unknown kernel lane '") + which + "'");
}

std::atomic<const Ops*>& slot() {
  static std::atomic<const Ops*> s{nullptr};
  return s;
}

}  // namespace

const Ops& active() {
  const Ops* cur = slot().load(std::memory_order_acquire);
  if (cur) return *cur;
  const char* env = std::getenv("R2S2_KERNELS");
  const Ops* sel = select_named(env && *env ? env : "auto");
  slot().store(sel, std::memory_order_release);
  return *sel;
}

void force(const char* which) { slot().store(select_named(which), std::memory_order_release); }

}  // namespace r2s2::kernels
