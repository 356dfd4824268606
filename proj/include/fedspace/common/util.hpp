#pragma once

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fedspace {

/// `scheme://host[:port][/path]` with scheme http or https.
bool is_absolute_url(std::string_view text);

/// Random lowercase hex string of `bytes * 2` characters.
std::string random_hex(std::size_t bytes);

/// RFC 4122 version-4 id in the `urn:uuid:` namespace.
std::string random_uuid_urn();

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool contains_case_insensitive(std::string_view haystack, std::string_view needle);

std::string percent_encode(std::string_view s);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temp file and rename so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

struct PageRequest {
  std::size_t offset = 0;
  std::size_t limit = 50;
};

template <typename T>
struct Page {
  std::vector<T> items;
  std::size_t total = 0;
};

/// Slices `all` by `req`; throws InvalidArgument when limit is zero.
template <typename T>
Page<T> paginate(std::vector<T> all, PageRequest req);

void require_valid_page(PageRequest req);

template <typename T>
Page<T> paginate(std::vector<T> all, PageRequest req) {
  require_valid_page(req);
  Page<T> page;
  page.total = all.size();
  if (req.offset >= all.size()) return page;
  auto end = std::min(all.size(), req.offset + req.limit);
  page.items.assign(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(req.offset)),
                    std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(end)));
  return page;
}

}  // namespace fedspace
