#pragma once

#include <cctype>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "fedspace/common/error.hpp"
#include "fedspace/common/util.hpp"

namespace fedspace {

/// Keyed state-machine instances with per-instance serialization. Updates run
/// on a copy and commit (and persist, when backed by a directory) only if the
/// mutator returns normally. One JSON file per instance.
template <typename T>
class ProcessTable {
 public:
  using Encode = std::function<nlohmann::json(const T&)>;
  using Decode = std::function<T(const nlohmann::json&)>;

  ProcessTable(std::optional<std::filesystem::path> dir, Encode encode, Decode decode)
      : dir_(std::move(dir)), encode_(std::move(encode)), decode_(std::move(decode)) {
    if (!dir_) return;
    std::filesystem::create_directories(*dir_);
    for (const auto& f : std::filesystem::directory_iterator(*dir_)) {
      if (f.path().extension() != ".json") continue;
      auto value = decode_(nlohmann::json::parse(read_file(f.path())));
      auto key = f.path().stem().string();
      slots_.emplace(std::move(key), std::make_shared<Slot>(std::move(value)));
    }
  }

  void insert(const std::string& id, T value) {
    std::unique_lock lock(mutex_);
    if (slots_.count(file_key(id))) throw Error(Errc::InvalidArgument, "duplicate process id " + id);
    persist(id, value);
    slots_.emplace(file_key(id), std::make_shared<Slot>(std::move(value)));
  }

  [[nodiscard]] std::optional<T> get(const std::string& id) const {
    auto slot = find(id);
    if (!slot) return std::nullopt;
    std::lock_guard lock(slot->mutex);
    return slot->value;
  }

  /// Runs `fn(T&)` under the instance lock; throws UnknownProcess for unknown ids.
  template <typename F>
  auto update(const std::string& id, F&& fn) {
    auto slot = find(id);
    if (!slot) throw Error(Errc::UnknownProcess, id);
    std::lock_guard lock(slot->mutex);
    T working = slot->value;
    if constexpr (std::is_void_v<decltype(fn(working))>) {
      fn(working);
      persist(id, working);
      slot->value = std::move(working);
    } else {
      auto result = fn(working);
      persist(id, working);
      slot->value = std::move(working);
      return result;
    }
  }

  [[nodiscard]] std::vector<T> all() const {
    std::vector<std::shared_ptr<Slot>> slots;
    {
      std::shared_lock lock(mutex_);
      for (const auto& [k, s] : slots_) slots.push_back(s);
    }
    std::vector<T> out;
    for (const auto& s : slots) {
      std::lock_guard lock(s->mutex);
      out.push_back(s->value);
    }
    return out;
  }

  [[nodiscard]] std::size_t size() const {
    std::shared_lock lock(mutex_);
    return slots_.size();
  }

 private:
  struct Slot {
    explicit Slot(T v) : value(std::move(v)) {}
    std::mutex mutex;
    T value;
  };

  static std::string file_key(const std::string& id) {
    std::string out;
    for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_');
    return out;
  }

  std::shared_ptr<Slot> find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = slots_.find(file_key(id));
    return it == slots_.end() ? nullptr : it->second;
  }

  void persist(const std::string& id, const T& value) const {
    if (dir_) write_file_atomic(*dir_ / (file_key(id) + ".json"), encode_(value).dump(2));
  }

  std::optional<std::filesystem::path> dir_;
  Encode encode_;
  Decode decode_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
};

}  // namespace fedspace
