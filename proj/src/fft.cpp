#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "fwm/error.hpp"
#include "fwm/field.hpp"

namespace fwm {
namespace {

// The FFTW planner is not re-entrant; executing a finished plan is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find({n, sign});
    if (it != plans_.end()) return it->second;
    auto* buf = fftw_alloc_complex(static_cast<std::size_t>(n));
    fftw_plan plan = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE);
    fftw_free(buf);
    plans_.emplace(std::pair{n, sign}, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

}  // namespace

std::vector<cplx> uniform_dft(std::span<const cplx> in, double x0, double dx, double y0,
                              int sign) {
  const std::size_t n = in.size();
  if (n == 0) return {};
  if (sign != 1 && sign != -1) {
    throw Error(ErrorCode::kInvalidArgument, "field-core", "uniform_dft: sign must be +1 or -1");
  }
  const double s = static_cast<double>(sign);
  const double dy = kTwoPi / (static_cast<double>(n) * dx);

  // y_j x_k = y0 x0 + j dy x0 + k y0 dx + 2 pi j k / n
  FftwBuffer buf(n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx v = in[k] * std::polar(1.0, s * y0 * static_cast<double>(k) * dx);
    buf.data[k][0] = v.real();
    buf.data[k][1] = v.imag();
  }
  fftw_plan plan = plan_cache().get(static_cast<int>(n), sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD);
  fftw_execute_dft(plan, buf.data, buf.data);

  std::vector<cplx> out(n);
  const double base = s * y0 * x0;
  for (std::size_t j = 0; j < n; ++j) {
    const cplx v(buf.data[j][0], buf.data[j][1]);
    out[j] = v * std::polar(1.0, base + s * static_cast<double>(j) * dy * x0);
  }
  return out;
}

}  // namespace fwm
