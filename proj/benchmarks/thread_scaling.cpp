// Times the serial reference fit against the OpenMP fit across thread counts
// and checks that they produce identical models.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rase/ensemble.hpp"
#include "rase/io.hpp"
#include "rase/sim_models.hpp"

namespace {

double time_fit(const rase::LabeledDataset& train, const rase::EnsembleConfig& config,
                bool reference, rase::RaseModel* out) {
  const auto t0 = std::chrono::steady_clock::now();
  *out = reference ? rase::fit_reference(train, config) : rase::fit(train, config);
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  rase::SimSpec spec;
  spec.model = rase::SimModel::M1;
  spec.n = argc > 1 ? std::atoi(argv[1]) : 400;
  spec.n_test = 10;
  spec.seed = 20240917;
  const rase::SimData data = rase::generate(spec);

  rase::EnsembleConfig config;
  config.base.kind = rase::BaseKind::Lda;
  config.b1 = argc > 2 ? std::atoi(argv[2]) : 100;
  config.b2 = argc > 3 ? std::atoi(argv[3]) : 200;
  config.seed = 7;

  rase::RaseModel reference;
  const double serial_s = time_fit(data.train, config, true, &reference);
  const std::string reference_json = rase::model_to_json_string(reference);
  std::printf("%-10s %10.3fs   speedup %5.2fx\n", "serial", serial_s, 1.0);

#ifdef _OPENMP
  const int hw = omp_get_max_threads();
#else
  const int hw = 1;
#endif
  for (int threads = 1; threads <= 2 * hw; threads *= 2) {
    config.threads = threads;
    rase::RaseModel parallel;
    const double wall = time_fit(data.train, config, false, &parallel);
    const bool identical = rase::model_to_json_string(parallel) == reference_json;
    std::printf("threads=%-3d %10.3fs   speedup %5.2fx   identical=%s\n", threads, wall,
                serial_s / wall, identical ? "yes" : "NO");
    if (!identical) return 1;
  }
  return 0;
}
