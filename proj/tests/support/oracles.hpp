#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mvkt/distill.hpp"
#include "mvkt/tensor.hpp"

namespace mvkt::testing {

inline double cosine(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    dot += a(i, k) * b(j, k);
    na += a(i, k) * a(i, k);
    nb += b(j, k) * b(j, k);
  }
  return dot / std::sqrt(na * nb);
}

// -log of positive / (positive + 2(n-1) negatives), written out as loops.
inline double brute_pair(const Tensor& anchors, const Tensor& positives, std::size_t i, double tau) {
  const double pos = std::exp(cosine(anchors, i, positives, i) / tau);
  double denom = pos;
  for (std::size_t j = 0; j < anchors.rows(); ++j) {
    if (j == i) continue;
    denom += std::exp(cosine(anchors, i, anchors, j) / tau);
    denom += std::exp(cosine(anchors, i, positives, j) / tau);
  }
  return -std::log(pos / denom);
}

inline double brute_loss(const Tensor& k1, const Tensor& k2, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < k1.rows(); ++i) total += brute_pair(k1, k2, i, tau) + brute_pair(k2, k1, i, tau);
  return total;
}

inline double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// e_i^{k<-j} from the projections and scorer, written as explicit sums.
inline double strength_oracle(const std::vector<Tensor>& z, const DistillParams& p, std::size_t i,
                              std::size_t j, std::size_t k) {
  const std::size_t de = p.embed_dim(), c = z[0].cols();
  double s = 0.0;
  for (std::size_t e = 0; e < de; ++e) {
    double hj = 0.0, hk = 0.0;
    for (std::size_t q = 0; q < c; ++q) {
      hj += z[j](i, q) * p.projections[j](q, e);
      hk += z[k](i, q) * p.projections[k](q, e);
    }
    s += hj * p.scorer(e, 0) + hk * p.scorer(de + e, 0);
  }
  return sigmoid_ref(s);
}

inline double cd_oracle(const std::vector<Tensor>& z, const DistillParams& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < z[0].rows(); ++i)
    for (std::size_t k = 0; k < z.size(); ++k)
      for (std::size_t j = 0; j < z.size(); ++j) {
        if (j == k) continue;
        double l1 = 0.0;
        for (std::size_t q = 0; q < z[0].cols(); ++q) l1 += std::abs(z[j](i, q) - z[k](i, q));
        total += strength_oracle(z, p, i, j, k) * l1;
      }
  return total;
}

struct MetricOracle {
  double acc, f1_w, f1_m;
  std::vector<double> f1;
};

// Counts TP/FP/FN straight from the arrays.
inline MetricOracle brute_metrics(const std::vector<int>& pred, const std::vector<int>& y, std::size_t c) {
  MetricOracle o{0.0, 0.0, 0.0, std::vector<double>(c, 0.0)};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
  o.acc = double(correct) / double(y.size());
  std::size_t present = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const bool is_k = y[i] == int(k), said_k = pred[i] == int(k);
      tp += is_k && said_k;
      fp += !is_k && said_k;
      fn += is_k && !said_k;
      support += is_k;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    o.f1[k] = denom ? 2.0 * double(tp) / double(denom) : 0.0;
    o.f1_w += double(support) * o.f1[k];
    if (tp + fp + fn > 0) {
      o.f1_m += o.f1[k];
      ++present;
    }
  }
  o.f1_w /= double(y.size());
  o.f1_m /= double(present);
  return o;
}

// Fraction of (positive, negative) pairs ranked correctly, ties counted half.
inline double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  return wins / double(pairs);
}

}  // namespace mvkt::testing
