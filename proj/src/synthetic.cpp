#include "phrasemuf/synthetic.hpp"

#include <algorithm>

#include "phrasemuf/error.hpp"
#include "phrasemuf/text.hpp"

namespace phrasemuf {

SyntheticDataset make_planted_dataset(const SyntheticConfig& config) {
  if (config.passages == 0 || config.min_sentences == 0 || config.min_sentences > config.max_sentences ||
      config.query_tokens == 0 || config.query_tokens > config.words_per_sentence) {
    throw InputError("invalid synthetic dataset configuration");
  }
  SplitMix64 rng(config.seed);
  std::vector<Passage> passages;
  std::vector<std::vector<std::vector<std::string>>> sentences(config.passages);
  for (std::size_t p = 0; p < config.passages; ++p) {
    const auto n_sent =
        config.min_sentences + rng.next_below(config.max_sentences - config.min_sentences + 1);
    std::string text;
    std::size_t word = 0;
    for (std::size_t s = 0; s < n_sent; ++s) {
      std::vector<std::string> words;
      for (std::size_t w = 0; w < config.words_per_sentence; ++w) {
        words.push_back("p" + std::to_string(p) + "w" + std::to_string(word++));
      }
      std::string sentence = words.front();
      sentence[0] = static_cast<char>(sentence[0] - 'a' + 'A');
      for (std::size_t w = 1; w < words.size(); ++w) sentence += " " + words[w];
      if (!text.empty()) text += ' ';
      text += sentence + '.';
      sentences[p].push_back(std::move(words));
    }
    passages.push_back({"p" + std::to_string(p), std::move(text)});
  }

  SyntheticDataset ds{Corpus(std::move(passages)), {}};
  for (std::size_t q = 0; q < config.queries; ++q) {
    const auto gold = rng.next_below(config.passages);
    const auto& sents = sentences[gold];
    auto words = sents[rng.next_below(sents.size())];
    for (std::size_t i = words.size(); i > 1; --i) std::swap(words[i - 1], words[rng.next_below(i)]);
    std::string question = "Which";
    for (std::size_t i = 0; i < config.query_tokens; ++i) question += " " + words[i];
    question += "?";
    ds.queries.push_back({"q" + std::to_string(q), std::move(question), "p" + std::to_string(gold)});
  }
  return ds;
}

}  // namespace phrasemuf
