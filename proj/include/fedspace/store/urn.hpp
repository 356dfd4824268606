#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace fedspace::store {

enum class UrnKind { Domain, Dataset };

enum class Env { Prod, Dev, Test };

std::string_view to_string(Env env) noexcept;
std::optional<Env> parse_env(std::string_view text) noexcept;

/// Canonical entity identifier.
///
///   urn:li:domain:{name}
///   urn:li:dataset:(urn:li:dataPlatform:{platform},{name},{env})
///
/// Tokens are non-empty and contain no commas or parentheses; env is one of
/// PROD, DEV, TEST. Ordering and equality follow the rendered text.
class Urn {
 public:
  static Urn parse(std::string_view text);
  static std::optional<Urn> try_parse(std::string_view text) noexcept;

  static Urn domain(std::string_view name);
  static Urn dataset(std::string_view platform, std::string_view name, Env env);

  [[nodiscard]] UrnKind kind() const noexcept { return kind_; }
  [[nodiscard]] bool is_domain() const noexcept { return kind_ == UrnKind::Domain; }
  [[nodiscard]] bool is_dataset() const noexcept { return kind_ == UrnKind::Dataset; }

  /// Empty for domains.
  [[nodiscard]] const std::string& platform() const noexcept { return platform_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  /// Meaningless for domains.
  [[nodiscard]] Env env() const noexcept { return env_; }

  [[nodiscard]] const std::string& str() const noexcept { return text_; }

  friend bool operator==(const Urn& a, const Urn& b) noexcept { return a.text_ == b.text_; }
  friend std::strong_ordering operator<=>(const Urn& a, const Urn& b) noexcept {
    return a.text_ <=> b.text_;
  }

 private:
  Urn() = default;
  void render();

  UrnKind kind_ = UrnKind::Domain;
  std::string platform_;
  std::string name_;
  Env env_ = Env::Prod;
  std::string text_;
};

/// Non-empty and free of `,`, `(` and `)`.
bool is_urn_token(std::string_view token) noexcept;

}  // namespace fedspace::store
