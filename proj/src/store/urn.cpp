#include "fedspace/store/urn.hpp"

#include "fedspace/common/error.hpp"

namespace fedspace::store {

namespace {

constexpr std::string_view kDomainPrefix = "urn:li:domain:";
constexpr std::string_view kDatasetPrefix = "urn:li:dataset:(urn:li:dataPlatform:";

}  // namespace

std::string_view to_string(Env env) noexcept {
  switch (env) {
    case Env::Prod: return "PROD";
    case Env::Dev: return "DEV";
    case Env::Test: return "TEST";
  }
  return "PROD";
}

std::optional<Env> parse_env(std::string_view text) noexcept {
  if (text == "PROD") return Env::Prod;
  if (text == "DEV") return Env::Dev;
  if (text == "TEST") return Env::Test;
  return std::nullopt;
}

bool is_urn_token(std::string_view token) noexcept {
  return !token.empty() && token.find_first_of(",()") == std::string_view::npos;
}

std::optional<Urn> Urn::try_parse(std::string_view text) noexcept {
  Urn u;
  if (text.substr(0, kDomainPrefix.size()) == kDomainPrefix) {
    auto name = text.substr(kDomainPrefix.size());
    if (!is_urn_token(name)) return std::nullopt;
    u.kind_ = UrnKind::Domain;
    u.name_ = std::string(name);
  } else if (text.substr(0, kDatasetPrefix.size()) == kDatasetPrefix) {
    if (text.back() != ')') return std::nullopt;
    auto inner = text.substr(kDatasetPrefix.size(),
                             text.size() - kDatasetPrefix.size() - 1);
    auto c1 = inner.find(',');
    if (c1 == std::string_view::npos) return std::nullopt;
    auto c2 = inner.find(',', c1 + 1);
    if (c2 == std::string_view::npos) return std::nullopt;
    auto platform = inner.substr(0, c1);
    auto name = inner.substr(c1 + 1, c2 - c1 - 1);
    auto env_text = inner.substr(c2 + 1);
    auto env = parse_env(env_text);
    if (!is_urn_token(platform) || !is_urn_token(name) || !env) return std::nullopt;
    u.kind_ = UrnKind::Dataset;
    u.platform_ = std::string(platform);
    u.name_ = std::string(name);
    u.env_ = *env;
  } else {
    return std::nullopt;
  }
  u.render();
  return u;
}

Urn Urn::parse(std::string_view text) {
  auto u = try_parse(text);
  if (!u) throw Error(Errc::MalformedUrn, std::string(text));
  return std::move(*u);
}

Urn Urn::domain(std::string_view name) {
  return parse(std::string(kDomainPrefix) + std::string(name));
}

Urn Urn::dataset(std::string_view platform, std::string_view name, Env env) {
  return parse(std::string(kDatasetPrefix) + std::string(platform) + "," + std::string(name) +
               "," + std::string(to_string(env)) + ")");
}

void Urn::render() {
  if (kind_ == UrnKind::Domain) {
    text_ = std::string(kDomainPrefix) + name_;
  } else {
    text_ = std::string(kDatasetPrefix) + platform_ + "," + name_ + "," +
            std::string(to_string(env_)) + ")";
  }
}

}  // namespace fedspace::store
