#pragma once
// Corpus handling: labeled documents, tokenization, the word-to-index map,
// fixed-length integer encoding, JSONL I/O, and synthetic corpus generation
// for desk-scale experiments.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "textclf/rng.hpp"

namespace textclf::corpus {

struct Document {
  std::string text;
  int label = 0;  // 0 = negative, 1 = positive
};

/// Lowercases, maps every non-alphanumeric byte to a separator, splits on
/// separator runs, drops empties. Bytes >= 0x80 count as word characters so
/// UTF-8 sequences stay intact.
std::vector<std::string> tokenize(const std::string& text);

/// Word-to-index map built from training text only. Index 0 is reserved for
/// padding and index 1 for out-of-vocabulary words; training words occupy the
/// contiguous range 2..V+1 in descending frequency order (ties lexicographic).
class Vocabulary {
 public:
  static constexpr std::int32_t kPadIndex = 0;
  static constexpr std::int32_t kOovIndex = 1;

  static Vocabulary build(const std::vector<Document>& training_docs);

  std::int32_t lookup(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kOovIndex : it->second;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(words_.size()); }  // V
  std::int64_t table_rows() const { return size() + 2; }

  /// Words in index order: words()[i] carries index i+2.
  const std::vector<std::string>& words() const { return words_; }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> index_;
  void rebuild_index();
};

struct EncodedBatch {
  std::int64_t rows = 0;
  std::int64_t max_len = 0;
  std::vector<std::int32_t> sequences;  // rows * max_len, row-major
  std::vector<int> labels;              // 0/1 per row

  std::span<const std::int32_t> row(std::int64_t i) const {
    return {sequences.data() + i * max_len, static_cast<std::size_t>(max_len)};
  }
};

/// Nearest-rank percentile: the smallest length L such that at least
/// ceil(percentile * n) of the lengths are <= L.
std::int64_t compute_max_len(const std::vector<std::int64_t>& lengths, double percentile);

/// Tokenize, map through the vocabulary (unseen -> OOV), pre-pad with zeros,
/// keep the first max_len tokens of longer documents.
EncodedBatch encode(const std::vector<Document>& docs, const Vocabulary& vocab,
                    std::int64_t max_len);

struct SyntheticSpec {
  std::int64_t n_docs = 1000;
  double positive_fraction = 0.5;
  std::int64_t vocab_size = 2000;
  std::int64_t n_marker_words = 20;   // tokens enriched in the positive class
  double marker_probability = 0.1;    // per-slot marker rate in positive docs
  std::int64_t mean_length = 200;
  std::int64_t length_jitter = 60;
  std::uint64_t seed = 1;

  /// Per-slot marker rate implied by uniform background sampling.
  double background_rate() const {
    return static_cast<double>(n_marker_words) / static_cast<double>(vocab_size);
  }

  void validate() const;  // throws std::invalid_argument on inconsistency
};

/// Deterministic given the spec seed. Negative documents draw every token
/// uniformly from the whole vocabulary; positive documents draw a marker word
/// with probability marker_probability per slot and a non-marker otherwise.
/// With shift_fraction > 0, each emitted marker is replaced by a surrogate
/// token outside the vocabulary with that probability (site-drift stand-in).
std::vector<Document> generate_synthetic(const SyntheticSpec& spec, double shift_fraction = 0.0);

/// JSON-lines dataset: one {"text": ..., "label": 0/1} record per line.
std::vector<Document> load_jsonl(const std::filesystem::path& path);
void save_jsonl(const std::vector<Document>& docs, const std::filesystem::path& path);

}  // namespace textclf::corpus
