#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xferbench {

std::vector<std::string_view> split_whitespace(std::string_view text);

// Whitespace-token vocabulary. Ids 0..3 are reserved for the special tokens.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;

  // Tokens are sorted so that the same token set always produces the same ids.
  static Vocabulary build(const std::vector<std::string>& texts);
  static Vocabulary from_tokens(std::vector<std::string> tokens);  // includes specials
  static Vocabulary load(const std::filesystem::path& path);

  void save(const std::filesystem::path& path) const;

  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int size() const noexcept { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::vector<int> encode(std::string_view text) const;
  std::string decode(const std::vector<int>& ids) const;

  std::uint64_t hash() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace xferbench
