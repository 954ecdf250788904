#pragma once

// Thin wrapper over FFTW's 2d complex transforms. Plans are cached per size
// and created under a lock (the FFTW planner is not thread safe); execution
// uses fftw_execute_dft on caller buffers, which is re-entrant. Plans use
// FFTW_ESTIMATE so the chosen algorithm, and therefore every output bit, is
// independent of timing.

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace pamlab::detail {

class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans p;
    return p;
  }

  // sign: FFTW_FORWARD (-1) or FFTW_BACKWARD (+1). Unnormalized.
  void execute(int M, int sign, std::complex<double>* in,
               std::complex<double>* out) {
    fftw_plan plan = get_plan(M, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in),
                     reinterpret_cast<fftw_complex*>(out));
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

 private:
  FftPlans() = default;
  ~FftPlans() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get_plan(int M, int sign) {
    std::scoped_lock lock(mu_);
    auto key = std::pair{M, sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    // Planning with FFTW_UNALIGNED so execute-on-any-buffer is legal.
    std::vector<std::complex<double>> a(static_cast<long>(M) * M),
        b(static_cast<long>(M) * M);
    fftw_plan plan = fftw_plan_dft_2d(
        M, M, reinterpret_cast<fftw_complex*>(a.data()),
        reinterpret_cast<fftw_complex*>(b.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void fft2(int M, int sign, std::complex<double>* in,
                 std::complex<double>* out) {
  FftPlans::instance().execute(M, sign, in, out);
}

}  // namespace pamlab::detail
