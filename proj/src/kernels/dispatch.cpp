#include "yflow/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

namespace yflow::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(YFLOW_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* find(std::string_view name) {
  for (const KernelTable* t : available_tables()) {
    if (name == t->name) return t;
  }
  return nullptr;
}

const KernelTable* best() {
  auto tables = available_tables();
  return tables.back();
}

const KernelTable* initial() {
  if (const char* env = std::getenv("YFLOW_KERNELS")) {
    std::string_view name(env);
    if (name != "auto") {
      if (const KernelTable* t = find(name)) return t;
    }
  }
  return best();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial()};
  return table;
}

}  // namespace

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> tables{&scalar_table()};
#if defined(YFLOW_HAVE_AVX2)
  if (cpu_has_avx2()) tables.push_back(&avx2_table());
#endif
#if defined(YFLOW_HAVE_NEON)
  tables.push_back(&neon_table());
#endif
  return tables;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  const KernelTable* t = name == "auto" ? best() : find(name);
  if (t == nullptr) return false;
  current().store(t, std::memory_order_release);
  return true;
}

void power(std::span<const double> x, double p, std::span<double> out) {
  const double k = std::round(p);
  if (k == p && k >= 1.0 && k <= 64.0) {
    active().int_pow(x.data(), static_cast<unsigned>(k), out.data(), out.size());
    return;
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::pow(x[i], p);
}

}  // namespace yflow::kernels
