// Benchmark comparing the serial reference kernels with the OpenMP builds,
// plus corpus-level forward passes under different thread caps.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "senticomp/kernels.hpp"
#include "senticomp/model.hpp"
#include "senticomp/evalsuite.hpp"
#include "senticomp/rng.hpp"
#include "senticomp/threading.hpp"
#include "support/synthetic.hpp"

using namespace senticomp;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_ms(F&& f, int repeats) {
  f();  // warm up
  double t0 = now_ms();
  for (int i = 0; i < repeats; ++i) f();
  return (now_ms() - t0) / repeats;
}

void bench_matmul() {
  std::printf("matmul C(n,n) = A(n,n) * B(n,n), f64\n");
  std::printf("%8s %12s %12s %9s\n", "n", "serial(ms)", "openmp(ms)", "speedup");
  Rng rng(1);
  for (std::size_t n : {64, 128, 256, 384}) {
    std::vector<double> a(n * n), b(n * n), c(n * n);
    for (auto& x : a) x = rng.uniform(-1, 1);
    for (auto& x : b) x = rng.uniform(-1, 1);
    int reps = n <= 128 ? 20 : 5;
    double ts = time_ms(
        [&] { kernels::matmul_serial(c.data(), a.data(), b.data(), n, n, n, false, false); },
        reps);
    double tp = time_ms(
        [&] { kernels::matmul(c.data(), a.data(), b.data(), n, n, n, false, false); },
        reps);
    std::printf("%8zu %12.3f %12.3f %8.2fx\n", n, ts, tp, ts / tp);
  }
}

void bench_elementwise() {
  std::printf("\nelementwise activations over 1M values\n");
  std::printf("%8s %12s %12s %9s\n", "op", "serial(ms)", "openmp(ms)", "speedup");
  const std::size_t n = 1 << 20;
  Rng rng(2);
  std::vector<double> x(n), y(n);
  for (auto& v : x) v = rng.uniform(-3, 3);
  double ts = time_ms([&] { kernels::selu_serial(y.data(), x.data(), n); }, 10);
  double tp = time_ms([&] { kernels::selu(y.data(), x.data(), n); }, 10);
  std::printf("%8s %12.3f %12.3f %8.2fx\n", "selu", ts, tp, ts / tp);
  ts = time_ms([&] { kernels::gelu_serial(y.data(), x.data(), n); }, 10);
  tp = time_ms([&] { kernels::gelu(y.data(), x.data(), n); }, 10);
  std::printf("%8s %12.3f %12.3f %8.2fx\n", "gelu", ts, tp, ts / tp);
}

void bench_corpus() {
  std::printf("\ncorpus forward pass (%d sentences, d=32, 2 layers)\n", 128);
  auto corpus = testing::grammar_corpus(128, 99);
  ModelConfig mc;
  mc.encoder.layers = 2;
  mc.encoder.heads = 4;
  mc.encoder.model_dim = 32;
  mc.encoder.ffn_dim = 64;
  mc.encoder.max_len = 64;
  mc.encoder.dropout = 0.0;
  SentiModel model(mc, Vocabulary::build(corpus), 7);

  setenv("SENTICOMP_THREADS", "1", 1);
  double ts = time_ms([&] { predict_corpus(model, corpus); }, 3);
  unsetenv("SENTICOMP_THREADS");
  double tp = time_ms([&] { predict_corpus(model, corpus); }, 3);
  std::printf("%8s %12.3f %12.3f %8.2fx  (max threads: %d)\n", "predict", ts,
              tp, ts / tp, max_threads());
}

}  // namespace

int main() {
  std::printf("senticomp kernel benchmark — serial reference vs OpenMP\n\n");
  bench_matmul();
  bench_elementwise();
  bench_corpus();
  return 0;
}
