#pragma once

// TF-IDF (word unigrams + bigrams) with one-vs-rest logistic regression.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "stixnet/errors.hpp"
#include "stixnet/types.hpp"

namespace stixnet {

struct TtpLabel {
  std::string id;
  std::string name;
  std::string stix_type;

  friend bool operator==(const TtpLabel&, const TtpLabel&) = default;
};

class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<TtpLabel> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const auto& l = labels_[i];
      if (l.stix_type != "attack-pattern" && l.stix_type != kMitreTactic)
        throw TrainError("label " + l.id + " has type '" + l.stix_type + "'");
      if (!index_.emplace(l.id, i).second) throw TrainError("duplicate label id " + l.id);
    }
  }

  static LabelSpace from_json(const nlohmann::json& j) {
    std::vector<TtpLabel> ls;
    const auto& arr = j.is_array() ? j : j.at("labels");
    for (const auto& e : arr)
      ls.push_back({e.at("id").get<std::string>(), e.at("name").get<std::string>(), e.at("stix_type").get<std::string>()});
    return LabelSpace(std::move(ls));
  }

  static LabelSpace load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw TrainError("cannot open label space " + path.string());
    return from_json(nlohmann::json::parse(in));
  }

  nlohmann::json to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& l : labels_) arr.push_back({{"id", l.id}, {"name", l.name}, {"stix_type", l.stix_type}});
    return {{"labels", arr}};
  }

  const std::vector<TtpLabel>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::optional<std::size_t> index_of(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  }

 private:
  std::vector<TtpLabel> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TtpDocument {
  std::string text;
  std::vector<std::string> labels;
};

inline std::vector<TtpDocument> load_ttp_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TrainError("cannot open corpus " + path.string());
  std::vector<TtpDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      docs.push_back({j.at("text").get<std::string>(), j.at("labels").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      throw TrainError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

/// Lowercased word unigrams and bigrams. Words are runs of ASCII letters and
/// digits (plus '.'/'-'/'_' between alphanumerics); bigrams do not cross
/// punctuation or line breaks.
inline std::vector<std::string> ttp_terms(std::string_view s) {
  std::vector<std::string> terms;
  std::string prev;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (text::is_alnum(c) || static_cast<unsigned char>(c) >= 0x80) {
      std::size_t j = i;
      while (j < s.size()) {
        const char d = s[j];
        if (text::is_alnum(d) || static_cast<unsigned char>(d) >= 0x80) {
          ++j;
        } else if ((d == '.' || d == '-' || d == '_') && j + 1 < s.size() && text::is_alnum(s[j + 1])) {
          ++j;
        } else {
          break;
        }
      }
      std::string w = text::lower(s.substr(i, j - i));
      if (!prev.empty()) terms.push_back(prev + " " + w);
      terms.push_back(w);
      prev = std::move(w);
      i = j;
    } else {
      if (c == '\n' || !(c == ' ' || c == '\t')) prev.clear();
      ++i;
    }
  }
  return terms;
}

struct TrainOptions {
  std::size_t max_epochs = 400;
  double learning_rate = 4.0;
  double l2 = 1e-4;
  double tolerance = 1e-7;
  uint64_t seed = 42;
};

using SparseVec = std::vector<std::pair<std::size_t, double>>;

struct LabelScore {
  std::string label_id;
  double score = 0.0;

  friend bool operator==(const LabelScore&, const LabelScore&) = default;
};

class TfidfModel {
 public:
  static constexpr int kFormatVersion = 1;

  const LabelSpace& space() const noexcept { return space_; }
  const std::map<std::string, std::size_t>& vocabulary() const noexcept { return vocab_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  const std::vector<std::vector<double>>& weights() const noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }
  const std::vector<bool>& active() const noexcept { return active_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// L2-normalized TF-IDF vector, sorted by term index; OOV terms dropped.
  SparseVec vectorize(std::string_view text) const {
    std::map<std::size_t, double> tf;
    for (const auto& t : ttp_terms(text))
      if (auto it = vocab_.find(t); it != vocab_.end()) tf[it->second] += 1.0;
    SparseVec v;
    double norm = 0;
    for (const auto& [k, c] : tf) {
      const double x = c * idf_[k];
      v.emplace_back(k, x);
      norm += x * x;
    }
    if (norm > 0) {
      norm = std::sqrt(norm);
      for (auto& [k, x] : v) x /= norm;
    }
    return v;
  }

  /// Sigmoid score per label, in label-space order.
  std::vector<double> scores(std::string_view text) const {
    const auto v = vectorize(text);
    std::vector<double> out(space_.size(), 0.0);
    for (std::size_t l = 0; l < space_.size(); ++l) {
      if (!active_[l]) continue;
      double z = bias_[l];
      for (const auto& [k, x] : v) z += weights_[l][k] * x;
      out[l] = sigmoid(z);
    }
    return out;
  }

  /// Labels scoring >= threshold, best first.
  std::vector<LabelScore> predict(std::string_view text, double threshold = 0.5) const {
    std::vector<LabelScore> out;
    if (text::trim(text).empty()) return out;
    const auto s = scores(text);
    for (std::size_t l = 0; l < s.size(); ++l)
      if (active_[l] && s[l] >= threshold) out.push_back({space_.labels()[l].id, s[l]});
    std::sort(out.begin(), out.end(), [](const LabelScore& a, const LabelScore& b) {
      return a.score != b.score ? a.score > b.score : a.label_id < b.label_id;
    });
    return out;
  }

  /// Document-level mentions (no span) for the predicted labels.
  std::vector<EntityMention> to_mentions(const std::vector<LabelScore>& preds) const {
    std::vector<EntityMention> out;
    for (const auto& p : preds) {
      const auto& l = space_.labels()[*space_.index_of(p.label_id)];
      EntityMention m;
      m.surface = l.name;
      m.canonical = l.name;
      m.stix_type = l.stix_type;
      m.kb_id = l.id;
      m.confidence = p.score;
      m.provenance = Provenance::Ttp;
      out.push_back(std::move(m));
    }
    return out;
  }

  nlohmann::json to_json() const {
    std::vector<std::string> terms(vocab_.size());
    for (const auto& [t, i] : vocab_) terms[i] = t;
    return {{"format", "stixnet-ttp"},
            {"version", kFormatVersion},
            {"labels", space_.to_json()["labels"]},
            {"vocabulary", terms},
            {"idf", idf_},
            {"weights", weights_},
            {"bias", bias_},
            {"active", active_}};
  }

  static TfidfModel from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "stixnet-ttp") throw Error("not a TTP model");
    if (j.at("version").get<int>() != kFormatVersion)
      throw Error("unsupported TTP model version " + std::to_string(j.at("version").get<int>()));
    TfidfModel m;
    m.space_ = LabelSpace::from_json(j.at("labels"));
    const auto terms = j.at("vocabulary").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < terms.size(); ++i) m.vocab_[terms[i]] = i;
    m.idf_ = j.at("idf").get<std::vector<double>>();
    m.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
    m.bias_ = j.at("bias").get<std::vector<double>>();
    m.active_ = j.at("active").get<std::vector<bool>>();
    if (m.idf_.size() != m.vocab_.size() || m.weights_.size() != m.space_.size() || m.bias_.size() != m.space_.size() ||
        m.active_.size() != m.space_.size())
      throw Error("inconsistent TTP model dimensions");
    for (const auto& w : m.weights_)
      if (w.size() != m.vocab_.size()) throw Error("inconsistent TTP model dimensions");
    return m;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model " + path.string());
    out << to_json().dump() << "\n";
  }

  static TfidfModel load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model " + path.string());
    return from_json(nlohmann::json::parse(in));
  }

  friend TfidfModel train_ttp(const std::vector<TtpDocument>&, const LabelSpace&, const TrainOptions&);

 private:
  static double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

  LabelSpace space_;
  std::map<std::string, std::size_t> vocab_;
  std::vector<double> idf_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
  std::vector<bool> active_;
  std::vector<std::string> warnings_;
};

/// Full-batch gradient descent per label; weights start from a seeded
/// N(0, 0.01) draw so runs are reproducible bit-for-bit.
inline TfidfModel train_ttp(const std::vector<TtpDocument>& corpus, const LabelSpace& space,
                            const TrainOptions& opt = {}) {
  if (corpus.empty()) throw TrainError("empty training corpus");
  if (space.size() == 0) throw TrainError("empty label space");
  std::vector<std::vector<char>> y(space.size(), std::vector<char>(corpus.size(), 0));
  for (std::size_t d = 0; d < corpus.size(); ++d)
    for (const auto& l : corpus[d].labels) {
      auto idx = space.index_of(l);
      if (!idx) throw TrainError("document " + std::to_string(d) + " has unknown label " + l);
      y[*idx][d] = 1;
    }

  TfidfModel m;
  m.space_ = space;
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    const auto ts = ttp_terms(doc.text);
    for (const auto& t : std::set<std::string>(ts.begin(), ts.end())) ++df[t];
  }
  std::size_t next = 0;
  for (const auto& [t, c] : df) m.vocab_[t] = next++;
  const double n = static_cast<double>(corpus.size());
  m.idf_.reserve(df.size());
  for (const auto& [t, c] : df) m.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(c))) + 1.0);

  std::vector<SparseVec> xs;
  xs.reserve(corpus.size());
  for (const auto& doc : corpus) xs.push_back(m.vectorize(doc.text));

  const std::size_t dim = m.vocab_.size();
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> init(0.0, 0.01);
  m.weights_.assign(space.size(), std::vector<double>(dim, 0.0));
  m.bias_.assign(space.size(), 0.0);
  m.active_.assign(space.size(), true);

  for (std::size_t l = 0; l < space.size(); ++l) {
    auto& w = m.weights_[l];
    for (auto& x : w) x = init(rng);
    double& b = m.bias_[l];
    if (std::none_of(y[l].begin(), y[l].end(), [](char v) { return v != 0; })) {
      m.active_[l] = false;
      std::fill(w.begin(), w.end(), 0.0);
      m.warnings_.push_back("label " + space.labels()[l].id + " has no positive documents; it will never be predicted");
      continue;
    }
    std::vector<double> grad(dim);
    double prev_loss = std::numeric_limits<double>::infinity();
    for (std::size_t epoch = 0; epoch < opt.max_epochs; ++epoch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double gb = 0, loss = 0;
      for (std::size_t d = 0; d < xs.size(); ++d) {
        double z = b;
        for (const auto& [k, x] : xs[d]) z += w[k] * x;
        const double p = TfidfModel::sigmoid(z);
        const double err = p - y[l][d];
        loss += y[l][d] ? -std::log(std::max(p, 1e-300)) : -std::log(std::max(1.0 - p, 1e-300));
        for (const auto& [k, x] : xs[d]) grad[k] += err * x;
        gb += err;
      }
      double reg = 0;
      for (double x : w) reg += x * x;
      loss = loss / n + 0.5 * opt.l2 * reg;
      for (std::size_t k = 0; k < dim; ++k) w[k] -= opt.learning_rate * (grad[k] / n + opt.l2 * w[k]);
      b -= opt.learning_rate * gb / n;
      if (std::abs(prev_loss - loss) < opt.tolerance) break;
      prev_loss = loss;
    }
  }
  return m;
}

/// Deterministic shuffled split; returns (train, test).
inline std::pair<std::vector<TtpDocument>, std::vector<TtpDocument>> split_corpus(std::vector<TtpDocument> docs,
                                                                                  double test_fraction, uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = docs.size(); i > 1; --i) std::swap(docs[i - 1], docs[rng() % i]);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(docs.size()) * test_fraction));
  std::vector<TtpDocument> test(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<TtpDocument> train(docs.begin() + static_cast<std::ptrdiff_t>(n_test), docs.end());
  return {std::move(train), std::move(test)};
}

struct MultiLabelScores {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
};

/// Micro-averaged P/R/F1 of predictions at `threshold`.
inline MultiLabelScores evaluate_ttp(const TfidfModel& m, const std::vector<TtpDocument>& docs, double threshold = 0.5) {
  MultiLabelScores s;
  for (const auto& d : docs) {
    std::set<std::string> gold(d.labels.begin(), d.labels.end());
    std::set<std::string> pred;
    for (const auto& p : m.predict(d.text, threshold)) pred.insert(p.label_id);
    for (const auto& p : pred) (gold.count(p) ? s.tp : s.fp)++;
    for (const auto& g : gold) s.fn += pred.count(g) ? 0 : 1;
  }
  const double tp = static_cast<double>(s.tp);
  s.precision = s.tp + s.fp ? tp / static_cast<double>(s.tp + s.fp) : 0.0;
  s.recall = s.tp + s.fn ? tp / static_cast<double>(s.tp + s.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace stixnet
