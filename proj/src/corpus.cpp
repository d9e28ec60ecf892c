#include "textclf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "textclf/errors.hpp"

namespace textclf::corpus {

namespace {

bool is_word_byte(unsigned char c) {
  if (c >= 0x80) return true;  // keep UTF-8 sequences intact
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

Vocabulary Vocabulary::build(const std::vector<Document>& training_docs) {
  std::map<std::string, std::int64_t> counts;  // ordered map fixes the tie-break
  for (const auto& doc : training_docs) {
    for (auto& tok : tokenize(doc.text)) ++counts[tok];
  }
  if (counts.empty()) throw DataError("empty vocabulary");
  std::vector<std::pair<std::string, std::int64_t>> entries(counts.begin(), counts.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  vocab.words_.reserve(entries.size());
  for (auto& [word, _] : entries) vocab.words_.push_back(word);
  vocab.rebuild_index();
  return vocab;
}

void Vocabulary::rebuild_index() {
  index_.clear();
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    index_[words_[i]] = static_cast<std::int32_t>(i) + 2;
  }
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file: " + path.string());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    out << words_[i] << '\t' << i + 2 << '\n';
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary file: " + path.string());
  Vocabulary vocab;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("vocabulary file " + path.string() + " line " + std::to_string(line_no) +
                      ": missing tab separator");
    }
    const std::string word = line.substr(0, tab);
    const long index = std::stol(line.substr(tab + 1));
    if (index != static_cast<long>(vocab.words_.size()) + 2) {
      throw DataError("vocabulary file " + path.string() + " line " + std::to_string(line_no) +
                      ": indices must be contiguous from 2");
    }
    vocab.words_.push_back(word);
  }
  vocab.rebuild_index();
  return vocab;
}

std::int64_t compute_max_len(const std::vector<std::int64_t>& lengths, double percentile) {
  if (lengths.empty()) throw std::invalid_argument("compute_max_len: empty length list");
  if (percentile <= 0.0 || percentile > 1.0) {
    throw std::invalid_argument("compute_max_len: percentile must be in (0, 1]");
  }
  std::vector<std::int64_t> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile * n));
  if (rank == 0) rank = 1;
  return sorted[rank - 1];
}

EncodedBatch encode(const std::vector<Document>& docs, const Vocabulary& vocab,
                    std::int64_t max_len) {
  if (max_len < 1) throw std::invalid_argument("encode: max_len must be positive");
  EncodedBatch batch;
  batch.rows = static_cast<std::int64_t>(docs.size());
  batch.max_len = max_len;
  batch.sequences.assign(static_cast<std::size_t>(batch.rows * max_len), Vocabulary::kPadIndex);
  batch.labels.reserve(docs.size());
  for (std::int64_t i = 0; i < batch.rows; ++i) {
    const auto tokens = tokenize(docs[static_cast<std::size_t>(i)].text);
    const auto kept = std::min<std::int64_t>(static_cast<std::int64_t>(tokens.size()), max_len);
    std::int32_t* row = batch.sequences.data() + i * max_len;
    for (std::int64_t j = 0; j < kept; ++j) {
      row[max_len - kept + j] = vocab.lookup(tokens[static_cast<std::size_t>(j)]);
    }
    batch.labels.push_back(docs[static_cast<std::size_t>(i)].label);
  }
  return batch;
}

void SyntheticSpec::validate() const {
  if (n_docs < 1) throw std::invalid_argument("SyntheticSpec: n_docs must be positive");
  if (positive_fraction <= 0.0 || positive_fraction >= 1.0) {
    throw std::invalid_argument("SyntheticSpec: positive_fraction must be in (0, 1)");
  }
  if (vocab_size < 2) throw std::invalid_argument("SyntheticSpec: vocab_size must be >= 2");
  if (n_marker_words < 1 || n_marker_words >= vocab_size) {
    throw std::invalid_argument("SyntheticSpec: n_marker_words must be in [1, vocab_size)");
  }
  if (marker_probability <= 0.0 || marker_probability > 1.0) {
    throw std::invalid_argument("SyntheticSpec: marker_probability must be in (0, 1]");
  }
  // Equality with the background rate is allowed (it makes markers carry no
  // signal); separability needs a strictly higher rate.
  if (marker_probability < background_rate()) {
    throw std::invalid_argument("SyntheticSpec: marker_probability below the background rate");
  }
  if (mean_length < 1) throw std::invalid_argument("SyntheticSpec: mean_length must be positive");
  if (length_jitter < 0) throw std::invalid_argument("SyntheticSpec: length_jitter must be >= 0");
}

namespace {

std::string synth_word(const char* prefix, std::int64_t i) {
  std::ostringstream os;
  os << prefix << i;
  return os.str();
}

}  // namespace

std::vector<Document> generate_synthetic(const SyntheticSpec& spec, double shift_fraction) {
  spec.validate();
  if (shift_fraction < 0.0 || shift_fraction > 1.0) {
    throw std::invalid_argument("generate_synthetic: shift_fraction must be in [0, 1]");
  }
  const std::int64_t n_markers = spec.n_marker_words;
  const std::int64_t n_plain = spec.vocab_size - n_markers;

  // Exact stratification: round(n * fraction) positives, shuffled order.
  const auto n_pos = static_cast<std::int64_t>(
      std::llround(static_cast<double>(spec.n_docs) * spec.positive_fraction));
  std::vector<int> labels(static_cast<std::size_t>(spec.n_docs), 0);
  std::fill(labels.begin(), labels.begin() + n_pos, 1);

  RngStream rng(spec.seed);
  rng.shuffle(labels);

  const double background = spec.background_rate();
  std::vector<Document> docs;
  docs.reserve(labels.size());
  for (const int label : labels) {
    const std::int64_t lo = std::max<std::int64_t>(1, spec.mean_length - spec.length_jitter);
    const std::int64_t hi = spec.mean_length + spec.length_jitter;
    const std::int64_t len = lo + static_cast<std::int64_t>(rng.below(
                                      static_cast<std::uint64_t>(hi - lo + 1)));
    const double marker_rate = label == 1 ? spec.marker_probability : background;
    std::string text;
    for (std::int64_t j = 0; j < len; ++j) {
      if (j > 0) text.push_back(' ');
      if (rng.uniform() < marker_rate) {
        if (shift_fraction > 0.0 && rng.uniform() < shift_fraction) {
          text += synth_word("s", static_cast<std::int64_t>(
                                      rng.below(static_cast<std::uint64_t>(n_markers))));
        } else {
          text += synth_word("m", static_cast<std::int64_t>(
                                      rng.below(static_cast<std::uint64_t>(n_markers))));
        }
      } else {
        text += synth_word("w", static_cast<std::int64_t>(
                                    rng.below(static_cast<std::uint64_t>(n_plain))));
      }
    }
    docs.push_back(Document{std::move(text), label});
  }
  return docs;
}

std::vector<Document> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": invalid JSON: " + e.what());
    }
    if (!rec.is_object() || !rec.contains("text") || !rec.contains("label") ||
        !rec["text"].is_string() || !rec["label"].is_number_integer()) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": expected {\"text\": string, \"label\": 0|1}");
    }
    const auto label = rec["label"].get<std::int64_t>();
    if (label != 0 && label != 1) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": label must be 0 or 1, got " + std::to_string(label));
    }
    std::string text = rec["text"].get<std::string>();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": text is empty after trimming");
    }
    docs.push_back(Document{std::move(text), static_cast<int>(label)});
  }
  return docs;
}

void save_jsonl(const std::vector<Document>& docs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path.string());
  for (const auto& doc : docs) {
    nlohmann::json rec;
    rec["text"] = doc.text;
    rec["label"] = doc.label;
    out << rec.dump() << '\n';
  }
}

}  // namespace textclf::corpus
