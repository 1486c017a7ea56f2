#include "motlab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace motlab {
namespace {

void check_args(const SignalDictionary& dict, int num_tokens, double noise_std) {
  if (num_tokens < 3) {
    throw std::invalid_argument("draw_sample: need at least 3 token slots");
  }
  if (noise_std < 0.0) {
    throw std::invalid_argument("draw_sample: noise_std must be nonnegative");
  }
  if (dict.num_classes < 2) {
    throw std::invalid_argument("draw_sample: a distractor class requires num_classes >= 2");
  }
}

int uniform_index(Rng& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

}  // namespace

std::vector<MixtureType> enumerate_mixture_types(int num_classes) {
  std::vector<MixtureType> types;
  types.reserve(4 * num_classes * (num_classes - 1));
  for (int n = 0; n < num_classes; ++n) {
    for (int np = 0; np < num_classes; ++np) {
      if (np == n) continue;
      for (int y : {1, -1}) {
        for (int eps : {1, -1}) types.push_back({y, eps, n, np});
      }
    }
  }
  return types;
}

Sample draw_sample_of_type(const SignalDictionary& dict, const MixtureType& type, int num_tokens,
                           double noise_std, Rng& rng) {
  check_args(dict, num_tokens, noise_std);
  const int d = dict.dim;
  const int l0 = uniform_index(rng, num_tokens);
  int l1 = uniform_index(rng, num_tokens - 1);
  if (l1 >= l0) ++l1;
  int l2 = uniform_index(rng, num_tokens - 2);
  // Step l2 over the two occupied slots in increasing order.
  for (int taken : {std::min(l0, l1), std::max(l0, l1)}) {
    if (l2 >= taken) ++l2;
  }

  Sample s;
  s.label = type.label;
  s.class_index = type.class_index;
  s.distractor_index = type.distractor_index;
  s.distractor_sign = type.distractor_sign;
  s.pos_class = l0;
  s.pos_signal = l1;
  s.pos_distractor = l2;
  s.noise_std = noise_std;
  s.tokens.resize(d, num_tokens);

  std::normal_distribution<double> normal(0.0, noise_std / std::sqrt(static_cast<double>(d)));
  for (int l = 0; l < num_tokens; ++l) {
    if (l == l0) {
      s.tokens.col(l) = dict.class_signals.col(type.class_index);
    } else if (l == l1) {
      s.tokens.col(l) = type.label * dict.cls_signals.col(type.class_index);
    } else if (l == l2) {
      s.tokens.col(l) = type.distractor_sign * dict.cls_signals.col(type.distractor_index);
    } else if (noise_std == 0.0) {
      s.tokens.col(l).setZero();
    } else {
      for (int i = 0; i < d; ++i) s.tokens(i, l) = normal(rng);
    }
  }
  s.token_sum = s.tokens.rowwise().sum();
  return s;
}

Sample draw_sample(const SignalDictionary& dict, int num_tokens, double noise_std, Rng& rng) {
  check_args(dict, num_tokens, noise_std);
  MixtureType type{};
  type.label = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
  type.distractor_sign = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
  type.class_index = uniform_index(rng, dict.num_classes);
  type.distractor_index = uniform_index(rng, dict.num_classes - 1);
  if (type.distractor_index >= type.class_index) ++type.distractor_index;
  return draw_sample_of_type(dict, type, num_tokens, noise_std, rng);
}

std::vector<int> Corpus::class_counts() const {
  std::vector<int> counts(num_classes(), 0);
  for (const auto& s : samples) ++counts[s.class_index];
  return counts;
}

Corpus build_corpus(const SignalDictionary& dict, int num_tokens, double noise_std, int samples_per_type,
                    std::uint64_t seed) {
  if (samples_per_type < 1) {
    throw std::invalid_argument("build_corpus: samples_per_type must be positive");
  }
  check_args(dict, num_tokens, noise_std);
  Rng rng(seed);
  Corpus corpus;
  corpus.dictionary = dict;
  corpus.num_tokens = num_tokens;
  corpus.noise_std = noise_std;
  corpus.samples_per_type = samples_per_type;
  corpus.seed = seed;
  const auto types = enumerate_mixture_types(dict.num_classes);
  corpus.samples.reserve(types.size() * samples_per_type);
  for (const auto& type : types) {
    for (int r = 0; r < samples_per_type; ++r) {
      corpus.samples.push_back(draw_sample_of_type(dict, type, num_tokens, noise_std, rng));
    }
  }
  std::shuffle(corpus.samples.begin(), corpus.samples.end(), rng);
  return corpus;
}

}  // namespace motlab
