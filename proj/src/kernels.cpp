#include "qmemsim/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace qmemsim::kern {
namespace {

const Ops& select() {
    const char* forced = std::getenv("QMEMSIM_KERNEL");
    if (forced && std::strcmp(forced, "scalar") == 0) return scalar_ops();
    const Ops* avx2 = avx2_ops();
    if (forced && std::strcmp(forced, "avx2") == 0) {
        if (avx2) return *avx2;
        return scalar_ops();
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2 && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return *avx2;
#endif
    return scalar_ops();
}

} // namespace

const Ops& active_ops() {
    static const Ops& ops = select();
    return ops;
}

} // namespace qmemsim::kern
