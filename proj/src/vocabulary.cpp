#include "xferbench/vocabulary.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include "xferbench/error.hpp"
#include "xferbench/rng.hpp"

namespace xferbench {

namespace {
const char* const kSpecials[] = {"<pad>", "<unk>", "<bos>", "<eos>"};
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
  std::set<std::string> seen;
  for (const auto& t : texts) {
    for (auto tok : split_whitespace(t)) seen.emplace(tok);
  }
  std::vector<std::string> tokens(std::begin(kSpecials), std::end(kSpecials));
  for (const auto& s : kSpecials) seen.erase(s);
  tokens.insert(tokens.end(), seen.begin(), seen.end());
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 4) throw Error(ErrorCode::CheckpointMismatch, "vocabulary lacks specials");
  for (int i = 0; i < 4; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != kSpecials[i]) {
      throw Error(ErrorCode::CheckpointMismatch, "vocabulary specials out of place");
    }
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::CheckpointMismatch, "duplicate vocabulary token " + v.tokens_[i]);
    }
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (auto tok : split_whitespace(text)) ids.push_back(id(tok));
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

std::uint64_t Vocabulary::hash() const {
  Fnv1a h;
  for (const auto& t : tokens_) {
    h.update(t);
    h.update("\n");
  }
  return h.digest();
}

}  // namespace xferbench
