#include "burst/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace burst::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(BURST_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Ops* pick_default() {
    const char* env = std::getenv("BURST_SIMD");
    std::string want = env ? env : "auto";
#if defined(BURST_HAVE_AVX2)
    if (want == "avx2")
        return &avx2_ops();
    if (want == "scalar")
        return &scalar_ops();
    if (cpu_has_avx2())
        return &avx2_ops();
#else
    if (want == "scalar" || want == "auto" || want == "avx2")
        return &scalar_ops();
#endif
    return &scalar_ops();
}

std::atomic<const Ops*>& active_slot() {
    static std::atomic<const Ops*> slot{pick_default()};
    return slot;
}

} // namespace

const Ops& ops() {
    return *active_slot().load(std::memory_order_relaxed);
}

const char* active_name() {
    return ops().name;
}

bool force_impl(const std::string& name) {
    if (name == "scalar" || name == "auto") {
        active_slot().store(name == "auto" ? pick_default() : &scalar_ops());
        return true;
    }
#if defined(BURST_HAVE_AVX2)
    if (name == "avx2" && cpu_has_avx2()) {
        active_slot().store(&avx2_ops());
        return true;
    }
#endif
    return false;
}

} // namespace burst::kernels
