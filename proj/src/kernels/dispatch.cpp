#include <cstdlib>
#include <string>

#include "hjr/error.hpp"
#include "hjr/kernels.hpp"

namespace hjr::kernels {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(HJR_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(HJR_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Table& table(Isa isa) {
  if (!available(isa)) {
    throw Error(ErrorCode::InvalidArgument, "kernels::table",
                std::string(to_string(isa)) + " kernels are not available");
  }
  switch (isa) {
#if defined(HJR_HAVE_AVX2)
    case Isa::Avx2: return avx2::kTable;
#endif
#if defined(HJR_HAVE_NEON)
    case Isa::Neon: return neon::kTable;
#endif
    default: return scalar::kTable;
  }
}

namespace {

const Table& select() {
  if (const char* forced = std::getenv("HJR_ISA")) {
    const std::string want(forced);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == to_string(isa) && available(isa)) return table(isa);
    }
    return scalar::kTable;
  }
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (available(isa)) return table(isa);
  }
  return scalar::kTable;
}

}  // namespace

const Table& active() {
  static const Table& chosen = select();
  return chosen;
}

}  // namespace hjr::kernels
