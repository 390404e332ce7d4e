// Scores a triplet file with n-MeRCI and the baseline metrics.
//
//   quickstart samples/depth_like.csv

#include <cstdio>
#include <exception>

#include "nmerci/baseline.hpp"
#include "nmerci/io.hpp"
#include "nmerci/metric.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s TRIPLETS.csv|.jsonl\n", argv[0]);
    return 2;
  }
  try {
    const nmerci::EvalSet set = nmerci::io::ingest(argv[1]);
    std::printf("%zu samples, MAE %.4g\n", set.size(), nmerci::mae(set));

    for (double alpha : {50.0, 85.0, 95.0, 100.0}) {
      const auto r = nmerci::n_merci(set, {alpha, true});
      if (r.n_merci) {
        std::printf("alpha %5.1f  lambda %.4g  MeRCI %.4g  n-MeRCI %.4f\n", alpha, r.lambda_alpha, r.merci,
                    *r.n_merci);
      } else {
        std::printf("alpha %5.1f  degenerate\n", alpha);
      }
    }

    if (set.size() >= 10) {
      std::printf("AUSE (10 steps) %.4g\n", nmerci::ause(nmerci::sparsification(set, 10)));
    }
    std::printf("NLPD %.4g\n", nmerci::nlpd(set));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
