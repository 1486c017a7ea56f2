#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "motlab/datagen.hpp"
#include "motlab/metrics.hpp"
#include "motlab/model.hpp"

namespace motlab::detail {

// While W_KQ is frozen (Stages I and III) the attention-pooled tokens
// z = X P 1 of each (expert, sample) pair do not change, so f = w . z and
// df/dw = z. Entries are filled lazily and dropped by invalidate().
class PooledTokenCache {
 public:
  PooledTokenCache(const Corpus& corpus, int num_experts)
      : corpus_(&corpus),
        num_samples_(corpus.size()),
        pooled_(static_cast<std::size_t>(num_experts) * corpus.size()),
        has_pooled_(pooled_.size(), 0),
        signal_(pooled_.size(), 0.0),
        has_signal_(pooled_.size(), 0) {}

  void invalidate() {
    std::fill(has_pooled_.begin(), has_pooled_.end(), 0);
    std::fill(has_signal_.begin(), has_signal_.end(), 0);
  }

  const Eigen::VectorXd& pooled(const ExpertParams& expert, int i, int k) {
    const std::size_t idx = index(i, k);
    if (!has_pooled_[idx]) {
      const Sample& s = corpus_->samples[k];
      const Eigen::MatrixXd p = column_softmax(s.tokens.transpose() * (expert.w_kq * s.tokens));
      pooled_[idx] = s.tokens * p.rowwise().sum();
      has_pooled_[idx] = 1;
    }
    return pooled_[idx];
  }

  double output(const ExpertParams& expert, int i, int k) { return expert.w.dot(pooled(expert, i, k)); }

  template <typename Fn>
  double signal_attention(int i, int k, Fn&& compute) {
    const std::size_t idx = index(i, k);
    if (!has_signal_[idx]) {
      signal_[idx] = compute();
      has_signal_[idx] = 1;
    }
    return signal_[idx];
  }

 private:
  std::size_t index(int i, int k) const {
    return static_cast<std::size_t>(i) * num_samples_ + static_cast<std::size_t>(k);
  }

  const Corpus* corpus_;
  std::size_t num_samples_;
  std::vector<Eigen::VectorXd> pooled_;
  std::vector<char> has_pooled_;
  std::vector<double> signal_;
  std::vector<char> has_signal_;
};

// Same value as mean_signal_attention, NaN when no expert is specialized in
// any sample's class.
inline double mean_signal_attention_cached(const std::vector<ExpertParams>& experts,
                                           const SpecializationReport& report, const Corpus& corpus,
                                           PooledTokenCache& cache) {
  double total = 0.0;
  long count = 0;
  for (int k = 0; k < corpus.size(); ++k) {
    const Sample& s = corpus.samples[k];
    for (int i : report.sets[s.class_index]) {
      total += cache.signal_attention(i, k, [&] { return self_attention_on_signal(experts[i], s); });
      ++count;
    }
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return total / static_cast<double>(count);
}

}  // namespace motlab::detail
