#include "echoscope/topics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "echoscope/random.h"

namespace echoscope {
namespace {

constexpr std::size_t kOversample = 10;
constexpr int kPowerIterations = 4;

void CheckInput(const SparseRowMatrix& x) {
  for (Eigen::Index i = 0; i < x.outerSize(); ++i) {
    for (SparseRowMatrix::InnerIterator it(x, i); it; ++it) {
      if (!std::isfinite(it.value())) throw std::invalid_argument("nmf: non-finite entry in X");
      if (it.value() < 0.0) throw std::invalid_argument("nmf: negative entry in X");
    }
  }
}

double SquaredNorm(const SparseRowMatrix& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.outerSize(); ++i) {
    for (SparseRowMatrix::InnerIterator it(x, i); it; ++it) s += it.value() * it.value();
  }
  return s;
}

// ||X - WH||^2 from cached products: ||X||^2 - 2<H, W'X> + <W'W, HH'>.
double Objective(double x_norm2, const Eigen::MatrixXd& h, const Eigen::MatrixXd& wtx,
                 const Eigen::MatrixXd& wtw, const Eigen::MatrixXd& hht) {
  return std::max(0.0, x_norm2 - 2.0 * h.cwiseProduct(wtx).sum() + wtw.cwiseProduct(hht).sum());
}

// One sweep over the columns of W: W[:, j] = max(eps, W[:, j] +
// (XH'[:, j] - W HH'[:, j]) / HH'[j, j]).
void UpdateW(Eigen::MatrixXd& w, const Eigen::MatrixXd& xht, const Eigen::MatrixXd& hht,
             double epsilon) {
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    const double diag = hht(j, j);
    if (diag <= 0.0) continue;
    w.col(j) = (w.col(j) + (xht.col(j) - w * hht.col(j)) / diag).cwiseMax(epsilon);
  }
}

void UpdateH(Eigen::MatrixXd& h, const Eigen::MatrixXd& wtx, const Eigen::MatrixXd& wtw,
             double epsilon) {
  for (Eigen::Index j = 0; j < h.rows(); ++j) {
    const double diag = wtw(j, j);
    if (diag <= 0.0) continue;
    h.row(j) = (h.row(j) + (wtx.row(j) - wtw.row(j) * h) / diag).cwiseMax(epsilon);
  }
}

bool AllFinite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Nonnegative double SVD started from a randomized truncated SVD.
bool SvdInit(const SparseRowMatrix& x, std::size_t k, std::uint64_t seed, double epsilon,
             Eigen::MatrixXd& w, Eigen::MatrixXd& h) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  const auto sketch = static_cast<Eigen::Index>(
      std::min<std::size_t>(k + kOversample, static_cast<std::size_t>(std::min(rows, cols))));
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd omega(cols, sketch);
  for (Eigen::Index j = 0; j < sketch; ++j) {
    for (Eigen::Index i = 0; i < cols; ++i) omega(i, j) = normal(rng);
  }
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(x * omega)
                          .householderQ() * Eigen::MatrixXd::Identity(rows, sketch);
  for (int p = 0; p < kPowerIterations; ++p) {
    Eigen::MatrixXd z = Eigen::HouseholderQR<Eigen::MatrixXd>(x.transpose() * q)
                            .householderQ() * Eigen::MatrixXd::Identity(cols, sketch);
    q = Eigen::HouseholderQR<Eigen::MatrixXd>(x * z).householderQ() *
        Eigen::MatrixXd::Identity(rows, sketch);
  }
  const Eigen::MatrixXd b = (x.transpose() * q).transpose();  // sketch x cols
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd u = q * svd.matrixU();
  const Eigen::MatrixXd v = svd.matrixV();
  const Eigen::VectorXd& s = svd.singularValues();
  if (!AllFinite(u) || !AllFinite(v) || s.size() < static_cast<Eigen::Index>(k)) return false;

  const auto kk = static_cast<Eigen::Index>(k);
  w.setZero(rows, kk);
  h.setZero(kk, cols);
  for (Eigen::Index j = 0; j < kk; ++j) {
    if (!(s(j) > 0.0)) return false;
    Eigen::VectorXd a = u.col(j);
    Eigen::VectorXd b_col = v.col(j);
    if (j == 0) {
      // Leading pair can be taken entirely nonnegative.
      if (a.sum() < 0.0) {
        a = -a;
        b_col = -b_col;
      }
      w.col(0) = std::sqrt(s(0)) * a.cwiseMax(0.0);
      h.row(0) = std::sqrt(s(0)) * b_col.cwiseMax(0.0).transpose();
      continue;
    }
    const Eigen::VectorXd ap = a.cwiseMax(0.0);
    const Eigen::VectorXd an = (-a).cwiseMax(0.0);
    const Eigen::VectorXd bp = b_col.cwiseMax(0.0);
    const Eigen::VectorXd bn = (-b_col).cwiseMax(0.0);
    const double pos = ap.norm() * bp.norm();
    const double neg = an.norm() * bn.norm();
    const bool use_pos = pos >= neg;
    const Eigen::VectorXd& left = use_pos ? ap : an;
    const Eigen::VectorXd& right = use_pos ? bp : bn;
    const double mass = use_pos ? pos : neg;
    if (!(mass > 0.0)) return false;
    const double scale = std::sqrt(s(j) * mass);
    w.col(j) = scale * left / left.norm();
    h.row(j) = (scale * right / right.norm()).transpose();
  }
  w = w.cwiseMax(epsilon);
  h = h.cwiseMax(epsilon);
  return AllFinite(w) && AllFinite(h);
}

void RandomInit(const SparseRowMatrix& x, std::size_t k, std::uint64_t seed, double epsilon,
                Eigen::MatrixXd& w, Eigen::MatrixXd& h) {
  const double mean = x.sum() / (static_cast<double>(x.rows()) * static_cast<double>(x.cols()));
  const double scale = std::sqrt(std::max(mean, epsilon) / static_cast<double>(k));
  Rng rng(seed);
  const auto kk = static_cast<Eigen::Index>(k);
  w.resize(x.rows(), kk);
  h.resize(kk, x.cols());
  for (Eigen::Index j = 0; j < kk; ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) w(i, j) = scale * UniformUnit(rng);
  }
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < kk; ++i) h(i, j) = scale * UniformUnit(rng);
  }
  w = w.cwiseMax(epsilon);
  h = h.cwiseMax(epsilon);
}

bool Converged(const std::vector<double>& trace, double tol) {
  if (trace.size() < 2) return !trace.empty() && trace.back() == 0.0;
  const double prev = trace[trace.size() - 2];
  if (prev <= 0.0) return true;
  return (prev - trace.back()) / prev < tol;
}

}  // namespace

std::optional<std::size_t> Vocabulary::Find(std::string_view term) const {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i] == term) return i;
  }
  return std::nullopt;
}

Vocabulary BuildVocabulary(std::span<const Document> documents, std::size_t min_df,
                           double max_df_ratio) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::vector<std::string_view> seen(doc.begin(), doc.end());
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (auto term : seen) ++df[std::string(term)];
  }
  const double max_df = max_df_ratio * static_cast<double>(documents.size());
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [term, count] : df) {
    if (count >= min_df && static_cast<double>(count) <= max_df) kept.emplace_back(term, count);
  }
  if (kept.empty()) {
    throw std::runtime_error("vocabulary is empty after pruning (" +
                             std::to_string(documents.size()) + " documents, " +
                             std::to_string(df.size()) + " distinct terms, min_df=" +
                             std::to_string(min_df) + ")");
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocabulary;
  for (auto& [term, count] : kept) {
    vocabulary.terms.push_back(std::move(term));
    vocabulary.document_frequency.push_back(count);
  }
  return vocabulary;
}

TermDocMatrix Tfidf(std::span<const Document> documents, const Vocabulary& vocabulary) {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t t = 0; t < vocabulary.size(); ++t) index.emplace(vocabulary.terms[t], t);
  const double n_docs = static_cast<double>(documents.size());
  std::vector<double> idf(vocabulary.size());
  for (std::size_t t = 0; t < vocabulary.size(); ++t) {
    idf[t] = std::log((1.0 + n_docs) /
                      (1.0 + static_cast<double>(vocabulary.document_frequency[t]))) +
             1.0;
  }
  TermDocMatrix out;
  out.empty_rows.assign(documents.size(), false);
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    std::map<std::size_t, double> counts;
    for (const auto& token : documents[d]) {
      if (const auto it = index.find(token); it != index.end()) counts[it->second] += 1.0;
    }
    if (counts.empty()) {
      out.empty_rows[d] = true;
      continue;
    }
    double norm2 = 0.0;
    for (auto& [t, value] : counts) {
      value *= idf[t];
      norm2 += value * value;
    }
    const double norm = std::sqrt(norm2);
    for (const auto& [t, value] : counts) {
      triplets.emplace_back(static_cast<int>(d), static_cast<int>(t), value / norm);
    }
  }
  out.x.resize(static_cast<Eigen::Index>(documents.size()),
               static_cast<Eigen::Index>(vocabulary.size()));
  out.x.setFromTriplets(triplets.begin(), triplets.end());
  out.x.makeCompressed();
  return out;
}

NmfResult NmfHals(const SparseRowMatrix& x, const NmfOptions& options) {
  CheckInput(x);
  const auto k = options.k;
  if (k == 0 || k > static_cast<std::size_t>(std::min(x.rows(), x.cols()))) {
    throw std::invalid_argument("nmf: k=" + std::to_string(k) + " must lie in [1, min(" +
                                std::to_string(x.rows()) + ", " + std::to_string(x.cols()) +
                                ")]");
  }
  NmfResult result;
  Eigen::MatrixXd& w = result.w;
  Eigen::MatrixXd& h = result.h;
  result.init_used = options.init;
  if (options.init != NmfInit::kSvd || !SvdInit(x, k, options.seed, options.epsilon, w, h)) {
    RandomInit(x, k, DeriveSeed(options.seed, "nmf-random"), options.epsilon, w, h);
    result.init_used = NmfInit::kRandom;
  }

  const double x_norm2 = SquaredNorm(x);
  const SparseRowMatrix xt = x.transpose();
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::MatrixXd xht = x * h.transpose();
    const Eigen::MatrixXd hht = h * h.transpose();
    UpdateW(w, xht, hht, options.epsilon);

    const Eigen::MatrixXd wtx = (xt * w).transpose();
    const Eigen::MatrixXd wtw = w.transpose() * w;
    UpdateH(h, wtx, wtw, options.epsilon);

    result.objective.push_back(Objective(x_norm2, h, wtx, wtw, h * h.transpose()));
    result.iterations = iter + 1;
    if (Converged(result.objective, options.tol)) {
      result.converged = true;
      break;
    }
  }

  for (Eigen::Index j = 0; j < h.rows(); ++j) {
    const double norm = h.row(j).norm();
    if (norm > 0.0) {
      h.row(j) /= norm;
      w.col(j) *= norm;
    }
  }
  return result;
}

NmfResult NmfHals(const Eigen::MatrixXd& x, const NmfOptions& options) {
  return NmfHals(SparseRowMatrix(x.sparseView(0.0, 0.0)), options);
}

ProjectionResult ProjectOntoBasis(const SparseRowMatrix& x, const Eigen::MatrixXd& h,
                                  const NmfOptions& options) {
  CheckInput(x);
  if (h.cols() != x.cols()) throw std::invalid_argument("projection: H and X widths differ");
  if (h.rows() == 0) throw std::invalid_argument("projection: empty basis");
  if (!AllFinite(h) || (h.array() < 0.0).any()) {
    throw std::invalid_argument("projection: basis must be finite and nonnegative");
  }
  ProjectionResult result;
  const Eigen::MatrixXd xht = x * h.transpose();
  const Eigen::MatrixXd hht = h * h.transpose();
  // Unconstrained least squares, clipped, as the starting point.
  result.w = hht.ldlt().solve(xht.transpose()).transpose();
  if (!AllFinite(result.w)) result.w.setConstant(x.rows(), h.rows(), 1.0);
  result.w = result.w.cwiseMax(options.epsilon);

  const double x_norm2 = SquaredNorm(x);
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    UpdateW(result.w, xht, hht, options.epsilon);
    const Eigen::MatrixXd wtw = result.w.transpose() * result.w;
    result.objective.push_back(std::max(
        0.0, x_norm2 - 2.0 * result.w.cwiseProduct(xht).sum() + wtw.cwiseProduct(hht).sum()));
    result.iterations = iter + 1;
    if (Converged(result.objective, options.tol)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::vector<std::optional<double>> SideShare(const Eigen::MatrixXd& w,
                                             std::span<const std::size_t> hesitant_rows,
                                             std::span<const std::size_t> supporter_rows) {
  if (hesitant_rows.empty() || supporter_rows.empty()) {
    throw std::invalid_argument("side share needs both groups non-empty");
  }
  std::vector<char> group(static_cast<std::size_t>(w.rows()), 0);
  for (auto r : hesitant_rows) {
    if (r >= group.size()) throw std::out_of_range("side share: row out of range");
    group[r] |= 1;
  }
  for (auto r : supporter_rows) {
    if (r >= group.size()) throw std::out_of_range("side share: row out of range");
    if (group[r] & 1) throw std::invalid_argument("side share: groups overlap");
    group[r] |= 2;
  }
  // |S| sum_H / (|H| sum_S + |S| sum_H) rewritten with group means. Running
  // means return a group of equal weights exactly, so identical groups give
  // exactly one half.
  auto mean = [&w](std::span<const std::size_t> rows, Eigen::Index k) {
    double m = 0.0;
    double n = 0.0;
    for (auto r : rows) {
      n += 1.0;
      m += (w(static_cast<Eigen::Index>(r), k) - m) / n;
    }
    return m;
  };
  std::vector<std::optional<double>> share(static_cast<std::size_t>(w.cols()));
  for (Eigen::Index k = 0; k < w.cols(); ++k) {
    const double mean_h = mean(hesitant_rows, k);
    const double denominator = mean(supporter_rows, k) + mean_h;
    if (denominator > 0.0) share[static_cast<std::size_t>(k)] = mean_h / denominator;
  }
  return share;
}

std::vector<double> TopicImportance(const Eigen::MatrixXd& w) {
  if ((w.array() < 0.0).any()) throw std::invalid_argument("importance: negative weights");
  const double total = w.sum();
  if (!(total > 0.0)) throw std::invalid_argument("importance: all-zero weights");
  std::vector<double> importance(static_cast<std::size_t>(w.cols()));
  for (Eigen::Index k = 0; k < w.cols(); ++k) {
    importance[static_cast<std::size_t>(k)] = w.col(k).sum() / total;
  }
  return importance;
}

std::vector<std::vector<std::string>> TopTerms(const Eigen::MatrixXd& h,
                                               std::span<const std::string> terms,
                                               std::size_t n) {
  if (static_cast<std::size_t>(h.cols()) != terms.size()) {
    throw std::invalid_argument("top terms: basis width and vocabulary differ");
  }
  std::vector<std::vector<std::string>> out;
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    std::vector<std::size_t> order(terms.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take = std::min(n, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        const double wa = h(k, static_cast<Eigen::Index>(a));
                        const double wb = h(k, static_cast<Eigen::Index>(b));
                        if (wa != wb) return wa > wb;
                        return terms[a] < terms[b];
                      });
    std::vector<std::string> top;
    for (std::size_t i = 0; i < take; ++i) top.push_back(terms[order[i]]);
    out.push_back(std::move(top));
  }
  return out;
}

std::string_view TopicProvenanceName(TopicProvenance provenance) {
  switch (provenance) {
    case TopicProvenance::kAll: return "all";
    case TopicProvenance::kHesitantBasis: return "hesitant-basis";
    case TopicProvenance::kSupporterBasis: return "supporter-basis";
  }
  return "all";
}

TopicReport AnalyzeTopics(std::span<const InteractionRecord> records, const SideMap& sides,
                          const Lexicons& lexicons, const TopicOptions& options,
                          std::uint64_t seed) {
  std::vector<std::string> texts;
  texts.reserve(records.size());
  std::vector<std::size_t> hesitant_rows;
  std::vector<std::size_t> supporter_rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    texts.push_back(records[i].text);
    const auto it = sides.find(records[i].author_id);
    if (it == sides.end()) continue;
    if (it->second == Side::kHesitant) hesitant_rows.push_back(i);
    if (it->second == Side::kSupporter) supporter_rows.push_back(i);
  }
  const auto tokens = Preprocess(texts, lexicons, options.threads);
  const auto documents = ExtractPhrases(tokens, options.phrase_delta, options.phrase_threshold,
                                        options.phrase_passes);
  const Vocabulary vocabulary = BuildVocabulary(documents, options.min_df, options.max_df_ratio);
  const TermDocMatrix matrix = Tfidf(documents, vocabulary);

  TopicReport report;
  report.documents = documents.size();
  report.empty_documents =
      static_cast<std::size_t>(std::count(matrix.empty_rows.begin(), matrix.empty_rows.end(), true));
  report.hesitant_documents = hesitant_rows.size();
  report.supporter_documents = supporter_rows.size();
  report.vocabulary_size = vocabulary.size();

  NmfOptions nmf;
  nmf.k = options.k;
  nmf.max_iter = options.max_iter;
  nmf.tol = options.tol;

  auto summarize = [&](TopicProvenance provenance, const Eigen::MatrixXd& w,
                       const Eigen::MatrixXd& h, std::size_t iterations, bool converged) {
    TopicSet set;
    set.provenance = provenance;
    set.iterations = iterations;
    set.converged = converged;
    const auto importance = TopicImportance(w);
    std::vector<std::optional<double>> share(importance.size());
    if (!hesitant_rows.empty() && !supporter_rows.empty()) {
      share = SideShare(w, hesitant_rows, supporter_rows);
    }
    const auto top = TopTerms(h, vocabulary.terms, options.top_terms);
    for (std::size_t k = 0; k < importance.size(); ++k) {
      set.topics.push_back({k, importance[k], share[k], top[k]});
    }
    report.sets.push_back(std::move(set));
  };

  nmf.seed = DeriveSeed(seed, "all");
  const NmfResult all = NmfHals(matrix.x, nmf);
  summarize(TopicProvenance::kAll, all.w, all.h, all.iterations, all.converged);

  const std::pair<TopicProvenance, const std::vector<std::size_t>*> groups[] = {
      {TopicProvenance::kHesitantBasis, &hesitant_rows},
      {TopicProvenance::kSupporterBasis, &supporter_rows}};
  for (const auto& [provenance, rows] : groups) {
    if (rows->size() < options.k) {
      throw std::runtime_error(std::string(TopicProvenanceName(provenance)) + ": " +
                               std::to_string(rows->size()) +
                               " group documents, fewer than k=" + std::to_string(options.k));
    }
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t r = 0; r < rows->size(); ++r) {
      for (SparseRowMatrix::InnerIterator it(matrix.x, static_cast<Eigen::Index>((*rows)[r]));
           it; ++it) {
        triplets.emplace_back(static_cast<int>(r), static_cast<int>(it.col()), it.value());
      }
    }
    SparseRowMatrix group(static_cast<Eigen::Index>(rows->size()), matrix.x.cols());
    group.setFromTriplets(triplets.begin(), triplets.end());
    nmf.seed = DeriveSeed(seed, TopicProvenanceName(provenance));
    const NmfResult fit = NmfHals(group, nmf);
    const ProjectionResult projected = ProjectOntoBasis(matrix.x, fit.h, nmf);
    summarize(provenance, projected.w, fit.h, fit.iterations, fit.converged);
  }
  return report;
}

}  // namespace echoscope
