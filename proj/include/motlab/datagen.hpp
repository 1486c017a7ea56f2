#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "motlab/random.hpp"
#include "motlab/signal_space.hpp"

namespace motlab {

/// One labeled token matrix plus the metadata it was generated from.
/// Class indices and token positions are zero-based.
struct Sample {
  Eigen::MatrixXd tokens;     // d x L
  Eigen::VectorXd token_sum;  // sum of the L columns, cached
  int label = 1;              // y
  int class_index = 0;        // n
  int distractor_index = 0;   // n'
  int distractor_sign = 1;    // epsilon
  int pos_class = 0;          // l0, holds c_n
  int pos_signal = 0;         // l1, holds y * v_n
  int pos_distractor = 0;     // l2, holds epsilon * v_n'
  double noise_std = 0.0;

  int num_tokens() const { return static_cast<int>(tokens.cols()); }
  int dim() const { return static_cast<int>(tokens.rows()); }
  bool is_noise_position(int l) const { return l != pos_class && l != pos_signal && l != pos_distractor; }
};

/// A mixture type fixes (y, epsilon, n, n'); positions and noise stay random.
struct MixtureType {
  int label;
  int distractor_sign;
  int class_index;
  int distractor_index;
};

/// All 4 N (N-1) mixture types in a fixed enumeration order.
std::vector<MixtureType> enumerate_mixture_types(int num_classes);

Sample draw_sample(const SignalDictionary& dict, int num_tokens, double noise_std, Rng& rng);
Sample draw_sample_of_type(const SignalDictionary& dict, const MixtureType& type, int num_tokens,
                           double noise_std, Rng& rng);

struct Corpus {
  SignalDictionary dictionary;
  std::vector<Sample> samples;
  int num_tokens = 0;
  double noise_std = 0.0;
  int samples_per_type = 0;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(samples.size()); }
  int num_classes() const { return dictionary.num_classes; }
  std::vector<int> class_counts() const;
};

/// Stratified corpus: exactly `samples_per_type` draws of every mixture type,
/// shuffled with the seeded RNG.
Corpus build_corpus(const SignalDictionary& dict, int num_tokens, double noise_std, int samples_per_type,
                    std::uint64_t seed);

}  // namespace motlab
