#pragma once

// Ranking quality of a similarity measure: per-query ROC AUC, k-nearest
// neighbor ligand prediction and leave-one-out double cross-validation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "supck/measures.hpp"
#include "supck/parallel.hpp"

namespace supck {

struct SimilarityMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> classes;
  Eigen::MatrixXd scores;
  Orientation orientation = Orientation::Similarity;

  std::size_t size() const noexcept { return ids.size(); }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(ids.size());
    if (scores.rows() != n || scores.cols() != n) throw InputError("similarity matrix is not N x N");
    if (!classes.empty() && classes.size() != ids.size()) throw InputError("class list length differs from ids");
    if (!scores.allFinite()) throw InputError("similarity matrix has non-finite entries");
  }
};

/// Larger is better, whatever the orientation.
inline double ranking_value(double score, Orientation o) {
  return o == Orientation::Similarity ? score : -score;
}

/// Mann-Whitney AUC of query q's row: positives share q's class. Ties count
/// one half. Empty when either the positive or the negative set is empty.
inline std::optional<double> auc_for_query(const SimilarityMatrix& m, std::size_t q) {
  if (q >= m.size()) throw ParameterError("query index out of range");
  if (m.classes.size() != m.size()) throw InputError("AUC requires a class for every item");
  std::vector<double> pos, neg;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (j == q) continue;
    const double v = ranking_value(m.scores(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)), m.orientation);
    (m.classes[j] == m.classes[q] ? pos : neg).push_back(v);
  }
  if (pos.empty() || neg.empty()) return std::nullopt;

  // sort negatives once; count strictly-below and equal per positive
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double p : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(lo, neg.end(), p);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

struct AucSummary {
  std::vector<std::optional<double>> per_query;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t defined = 0;
};

inline AucSummary summarize_auc(std::vector<std::optional<double>> per_query) {
  AucSummary s;
  s.per_query = std::move(per_query);
  double sum = 0.0;
  for (const auto& a : s.per_query)
    if (a) {
      sum += *a;
      ++s.defined;
    }
  if (s.defined == 0) {
    s.mean = std::nan("");
    s.stddev = std::nan("");
    return s;
  }
  s.mean = sum / static_cast<double>(s.defined);
  double ss = 0.0;
  for (const auto& a : s.per_query)
    if (a) ss += (*a - s.mean) * (*a - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.defined));
  return s;
}

inline AucSummary auc_all(const SimilarityMatrix& m) {
  std::vector<std::optional<double>> per(m.size());
  for (std::size_t q = 0; q < m.size(); ++q) per[q] = auc_for_query(m, q);
  return summarize_auc(std::move(per));
}

struct Neighbor {
  double score = 0.0;
  std::string cls;
};

namespace detail {

/// Majority vote over already ranked class ids (best first). Ties: smaller
/// summed rank, then smaller class id.
inline int vote(const std::vector<int>& ranked_classes, std::size_t num_classes) {
  std::vector<int> count(num_classes, 0);
  std::vector<long> rank_sum(num_classes, 0);
  for (std::size_t r = 0; r < ranked_classes.size(); ++r) {
    const auto c = static_cast<std::size_t>(ranked_classes[r]);
    ++count[c];
    rank_sum[c] += static_cast<long>(r + 1);
  }
  int best = -1;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (count[c] == 0) continue;
    if (best < 0) {
      best = static_cast<int>(c);
      continue;
    }
    const auto b = static_cast<std::size_t>(best);
    if (count[c] > count[b] || (count[c] == count[b] && rank_sum[c] < rank_sum[b])) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace detail

/// k-NN vote among training items. Items with equal scores keep their input order.
inline std::string knn_predict(const std::vector<Neighbor>& train, int k, Orientation orientation) {
  if (k < 1) throw ParameterError("k must be >= 1");
  if (train.empty()) throw InputError("knn_predict needs a non-empty training set");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ranking_value(train[a].score, orientation) > ranking_value(train[b].score, orientation);
  });
  std::vector<std::string> names;
  for (const auto& n : train) names.push_back(n.cls);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), train.size());
  std::vector<int> ranked;
  for (std::size_t r = 0; r < take; ++r) {
    const auto& cls = train[order[r]].cls;
    ranked.push_back(static_cast<int>(std::lower_bound(names.begin(), names.end(), cls) - names.begin()));
  }
  return names[static_cast<std::size_t>(detail::vote(ranked, names.size()))];
}

/// One point of the hyperparameter grid. Unused dimensions stay empty.
struct ParamRecord {
  int k = 1;
  std::optional<double> sigma;
  std::optional<double> lambda;
  std::optional<double> radius;
  std::optional<double> alpha;             // effective coefficient
  std::optional<double> alpha_multiplier;  // grid value before normalization

  auto order_key() const {
    constexpr double lo = -std::numeric_limits<double>::infinity();
    return std::make_tuple(k, sigma.value_or(lo), lambda.value_or(lo), radius.value_or(lo), alpha.value_or(lo));
  }
};

struct HyperGrid {
  std::vector<int> k_values{1, 3, 5, 7};
  std::vector<double> sigma_values{0.5, 1.0, 2.0, 4.0};
  std::vector<double> lambda_values{0.25, 1.0, 4.0, kNoLabels};
  std::vector<double> radius_values{4.5, 5.3, 6.0};
  std::vector<double> alpha_values{0.0, 0.01, 0.1, 1.0, 10.0};
  std::uint64_t seed = 0;

  void validate() const {
    if (k_values.empty() || sigma_values.empty() || lambda_values.empty() || radius_values.empty() ||
        alpha_values.empty())
      throw ParameterError("every hyperparameter list must be non-empty");
    for (int k : k_values)
      if (k < 1) throw ParameterError("k values must be >= 1");
    for (double s : sigma_values)
      if (!(s > 0.0) || !std::isfinite(s)) throw ParameterError("sigma values must be positive");
    for (double l : lambda_values)
      if (!(l > 0.0)) throw ParameterError("lambda values must be positive or inf");
    for (double r : radius_values)
      if (!(r > 0.0)) throw ParameterError("radius values must be positive");
    for (double a : alpha_values)
      if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterError("alpha values must be >= 0");
  }
};

/// A full-dataset matrix for one grid point (k excluded).
struct CandidateMatrix {
  ParamRecord params;
  SimilarityMatrix matrix;
};

struct FoldRecord {
  std::string id;
  std::string true_class;
  std::string predicted_class;
  ParamRecord params;
  double inner_error = 0.0;
};

struct EvalReport {
  std::vector<std::string> ids;
  std::vector<std::optional<double>> per_query_auc;
  double mean_auc = 0.0;
  double auc_std = 0.0;
  double classification_error = 0.0;
  std::vector<std::string> class_names;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  std::vector<FoldRecord> chosen_params;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
};

namespace detail {

inline bool degenerate(const SimilarityMatrix& m) {
  if (!m.scores.allFinite()) return true;
  std::optional<double> first;
  for (Eigen::Index i = 0; i < m.scores.rows(); ++i)
    for (Eigen::Index j = 0; j < m.scores.cols(); ++j) {
      if (i == j) continue;
      if (!first) first = m.scores(i, j);
      else if (m.scores(i, j) != *first) return false;
    }
  return true;
}

/// For every query, the other items sorted best-first (stable on index).
inline std::vector<std::vector<int>> rankings(const SimilarityMatrix& m) {
  const std::size_t n = m.size();
  std::vector<std::vector<int>> out(n);
  for (std::size_t q = 0; q < n; ++q) {
    auto& r = out[q];
    for (std::size_t j = 0; j < n; ++j)
      if (j != q) r.push_back(static_cast<int>(j));
    const auto row = static_cast<Eigen::Index>(q);
    std::stable_sort(r.begin(), r.end(), [&](int a, int b) {
      return ranking_value(m.scores(row, a), m.orientation) > ranking_value(m.scores(row, b), m.orientation);
    });
  }
  return out;
}

/// k-NN prediction for query q using its ranking, ignoring item `excluded`.
inline int predict_ranked(const std::vector<int>& ranking, const std::vector<int>& class_ids, std::size_t num_classes,
                          int k, int excluded) {
  std::vector<int> ranked;
  ranked.reserve(static_cast<std::size_t>(k));
  for (int j : ranking) {
    if (j == excluded) continue;
    ranked.push_back(class_ids[static_cast<std::size_t>(j)]);
    if (static_cast<int>(ranked.size()) == k) break;
  }
  return vote(ranked, num_classes);
}

}  // namespace detail

/// Leave-one-out double cross-validation over precomputed full-dataset
/// matrices. For each held-out item, inner leave-one-out over the remaining
/// items selects (k, matrix) with the lowest error; ties go to the smallest
/// (k, sigma, lambda, radius, alpha).
inline EvalReport loo_double_cv(const std::vector<CandidateMatrix>& candidates, const std::vector<int>& k_values) {
  if (candidates.empty()) throw ParameterError("no candidate matrices");
  if (k_values.empty()) throw ParameterError("no k values");
  for (int k : k_values)
    if (k < 1) throw ParameterError("k values must be >= 1");
  const SimilarityMatrix& ref = candidates.front().matrix;
  const std::size_t n = ref.size();
  if (n < 3) throw InputError("double cross-validation needs at least 3 items");
  if (ref.classes.size() != n) throw InputError("every item needs a ligand class");

  EvalReport report;
  report.ids = ref.ids;
  report.class_names = ref.classes;
  std::sort(report.class_names.begin(), report.class_names.end());
  report.class_names.erase(std::unique(report.class_names.begin(), report.class_names.end()), report.class_names.end());
  if (report.class_names.size() < 2) throw InputError("double cross-validation needs at least 2 classes");
  const std::size_t num_classes = report.class_names.size();
  std::vector<int> class_ids(n);
  for (std::size_t i = 0; i < n; ++i)
    class_ids[i] = static_cast<int>(std::lower_bound(report.class_names.begin(), report.class_names.end(), ref.classes[i]) -
                                    report.class_names.begin());

  struct Usable {
    const CandidateMatrix* candidate;
    std::vector<std::vector<int>> ranking;
  };
  std::vector<Usable> usable;
  for (const auto& c : candidates) {
    c.matrix.validate();
    if (c.matrix.ids != ref.ids || c.matrix.classes != ref.classes)
      throw InputError("candidate matrices disagree on ids or classes");
    if (detail::degenerate(c.matrix)) {
      report.warnings.push_back("skipped degenerate grid entry (all off-diagonal scores equal or non-finite)");
      continue;
    }
    usable.push_back({&c, detail::rankings(c.matrix)});
  }
  if (usable.empty()) throw InputError("every grid entry produced degenerate scores");

  std::vector<int> ks = k_values;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  report.confusion.assign(num_classes, std::vector<int>(num_classes, 0));
  std::vector<std::optional<double>> aucs(n);
  std::size_t wrong = 0;
  for (std::size_t held = 0; held < n; ++held) {
    const int held_i = static_cast<int>(held);
    std::optional<std::tuple<double, decltype(ParamRecord{}.order_key())>> best_key;
    const Usable* best = nullptr;
    int best_k = 0;
    double best_err = 0.0;
    for (const Usable& u : usable) {
      for (int k : ks) {
        std::size_t inner_wrong = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == held) continue;
          const int pred = detail::predict_ranked(u.ranking[j], class_ids, num_classes, k, held_i);
          if (pred != class_ids[j]) ++inner_wrong;
        }
        const double err = static_cast<double>(inner_wrong) / static_cast<double>(n - 1);
        ParamRecord p = u.candidate->params;
        p.k = k;
        auto key = std::make_tuple(err, p.order_key());
        if (!best_key || key < *best_key) {
          best_key = key;
          best = &u;
          best_k = k;
          best_err = err;
        }
      }
    }
    const int pred = detail::predict_ranked(best->ranking[held], class_ids, num_classes, best_k, -1);
    const int truth = class_ids[held];
    if (pred != truth) ++wrong;
    ++report.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
    aucs[held] = auc_for_query(best->candidate->matrix, held);

    FoldRecord fold;
    fold.id = ref.ids[held];
    fold.true_class = ref.classes[held];
    fold.predicted_class = report.class_names[static_cast<std::size_t>(pred)];
    fold.params = best->candidate->params;
    fold.params.k = best_k;
    fold.inner_error = best_err;
    report.chosen_params.push_back(std::move(fold));
  }
  report.classification_error = static_cast<double>(wrong) / static_cast<double>(n);
  const AucSummary auc = summarize_auc(aucs);
  report.per_query_auc = auc.per_query;
  report.mean_auc = auc.mean;
  report.auc_std = auc.stddev;
  report.notes.push_back(
      "per-query AUC uses the full-dataset matrix at the parameters selected for that query's fold");
  return report;
}

struct LooKnnResult {
  std::vector<std::string> predictions;
  double classification_error = 0.0;
};

/// Plain leave-one-out k-NN on a single matrix.
inline LooKnnResult loo_knn(const SimilarityMatrix& m, int k) {
  m.validate();
  if (k < 1) throw ParameterError("k must be >= 1");
  LooKnnResult r;
  std::size_t wrong = 0;
  for (std::size_t q = 0; q < m.size(); ++q) {
    std::vector<Neighbor> train;
    for (std::size_t j = 0; j < m.size(); ++j)
      if (j != q) train.push_back({m.scores(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)), m.classes[j]});
    r.predictions.push_back(knn_predict(train, k, m.orientation));
    if (r.predictions.back() != m.classes[q]) ++wrong;
  }
  r.classification_error = static_cast<double>(wrong) / static_cast<double>(m.size());
  return r;
}

/// All ordered pairs scored with `cfg`; the diagonal holds self-scores.
/// Symmetric measures (Vol, Princ-Axis) are computed once per unordered pair.
inline SimilarityMatrix similarity_matrix(const std::vector<AtomCloud>& clouds, const MeasureConfig& cfg,
                                          int jobs = 1) {
  cfg.validate();
  const std::size_t n = clouds.size();
  if (n == 0) throw InputError("similarity matrix needs at least one cloud");
  SimilarityMatrix m;
  m.orientation = cfg.orientation();
  m.scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& c : clouds) {
    m.ids.push_back(c.id());
    m.classes.push_back(c.ligand_class().value_or(""));
  }
  if (std::all_of(m.classes.begin(), m.classes.end(), [](const std::string& c) { return c.empty(); }))
    m.classes.clear();

  const bool symmetric = !uses_alignment(cfg.kind);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = symmetric ? i : 0; j < n; ++j) pairs.emplace_back(i, j);

  parallel_for(pairs.size(), jobs, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const double s = measure(clouds[i], clouds[j], cfg);
    m.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
    if (symmetric) m.scores(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s;
  });
  return m;
}

/// Memo of full matrices keyed by (measure, sigma, lambda, radius). Safe for
/// concurrent use.
class MatrixCache {
 public:
  using Key = std::tuple<MeasureKind, double, double, double>;

  template <typename Compute>
  SimilarityMatrix get_or_compute(const Key& key, Compute&& compute) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    SimilarityMatrix m = compute();
    std::lock_guard lock(mutex_);
    return entries_.emplace(key, std::move(m)).first->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::map<Key, SimilarityMatrix> entries_;
};

namespace detail {

inline double off_diagonal_median(const SimilarityMatrix& m) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < m.scores.rows(); ++i)
    for (Eigen::Index j = 0; j < m.scores.cols(); ++j)
      if (i != j) v.push_back(m.scores(i, j));
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace detail

/// Grid-point matrices for `kind`. Keys of `clouds_by_radius` are extraction
/// radii; every entry must list the same items in the same order. Alpha grid
/// values are multipliers of median(sup-CK) / median(Vol).
inline std::vector<CandidateMatrix> build_candidates(const std::map<double, std::vector<AtomCloud>>& clouds_by_radius,
                                                     MeasureKind kind, const HyperGrid& grid,
                                                     const MeasureConfig& base, int jobs,
                                                     MatrixCache* cache = nullptr) {
  grid.validate();
  if (clouds_by_radius.empty()) throw InputError("no clouds");
  MatrixCache local;
  MatrixCache& memo = cache ? *cache : local;

  const bool aligned = uses_alignment(kind);
  const bool labeled = uses_labels(kind);
  const bool volume = uses_volume(kind);
  const MeasureKind base_kind = labeled ? MeasureKind::SupCkL : (kind == MeasureKind::SupPi ? MeasureKind::SupPi : MeasureKind::SupCk);

  const std::vector<double> sigmas = aligned ? grid.sigma_values : std::vector<double>{std::nan("")};
  const std::vector<double> lambdas = labeled ? grid.lambda_values : std::vector<double>{kNoLabels};
  const bool per_radius = clouds_by_radius.size() > 1;

  std::vector<CandidateMatrix> out;
  for (const auto& [radius, clouds] : clouds_by_radius) {
    const std::optional<double> radius_rec = per_radius ? std::optional<double>(radius) : std::nullopt;
    if (!aligned) {
      MeasureConfig cfg = base;
      cfg.kind = kind;
      CandidateMatrix c;
      c.params.radius = radius_rec;
      c.matrix = memo.get_or_compute({kind, 0.0, 0.0, radius}, [&] { return similarity_matrix(clouds, cfg, jobs); });
      out.push_back(std::move(c));
      continue;
    }
    std::optional<SimilarityMatrix> vol;
    if (volume) {
      MeasureConfig vcfg = base;
      vcfg.kind = MeasureKind::Vol;
      vol = memo.get_or_compute({MeasureKind::Vol, 0.0, 0.0, radius}, [&] { return similarity_matrix(clouds, vcfg, jobs); });
    }
    for (double sigma : sigmas) {
      for (double lambda : lambdas) {
        MeasureConfig cfg = base;
        cfg.kind = base_kind;
        cfg.align.sigma = sigma;
        cfg.align.lambda = lambda;
        const SimilarityMatrix ck = memo.get_or_compute(
            {base_kind, sigma, lambda, radius}, [&] { return similarity_matrix(clouds, cfg, jobs); });
        ParamRecord p;
        p.sigma = sigma;
        if (labeled) p.lambda = lambda;
        p.radius = radius_rec;
        if (!volume) {
          out.push_back({p, ck});
          continue;
        }
        const double vol_median = detail::off_diagonal_median(*vol);
        const double scale = vol_median > 0.0 ? std::abs(detail::off_diagonal_median(ck)) / vol_median : 1.0;
        for (double mult : grid.alpha_values) {
          CandidateMatrix c{p, ck};
          c.params.alpha_multiplier = mult;
          c.params.alpha = mult * scale;
          c.matrix.scores = ck.scores - (mult * scale) * vol->scores;
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

inline void require_classes(const std::vector<AtomCloud>& clouds) {
  std::vector<std::string> classes;
  for (const auto& c : clouds) {
    if (!c.ligand_class() || c.ligand_class()->empty())
      throw InputError("cloud '" + c.id() + "' has no ligand class");
    classes.push_back(*c.ligand_class());
  }
  std::sort(classes.begin(), classes.end());
  if (std::unique(classes.begin(), classes.end()) - classes.begin() < 2)
    throw InputError("at least two ligand classes are required");
}

/// Double cross-validation of `kind` over `grid` on one extraction radius.
inline EvalReport loo_double_cv(const std::vector<AtomCloud>& pockets, MeasureKind kind, const HyperGrid& grid,
                                const MeasureConfig& base = {}, int jobs = 1, MatrixCache* cache = nullptr) {
  require_classes(pockets);
  const double radius = grid.radius_values.size() == 1 ? grid.radius_values.front() : 0.0;
  const auto candidates = build_candidates({{radius, pockets}}, kind, grid, base, jobs, cache);
  return loo_double_cv(candidates, grid.k_values);
}

}  // namespace supck
