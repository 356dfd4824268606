#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fedspace {

/// A child process with stdout and stderr appended to a log file.
class Child {
 public:
  /// Throws Io when the process cannot be started.
  static Child spawn(const std::vector<std::string>& argv, const std::filesystem::path& log_file);

  Child() = default;
  Child(Child&& other) noexcept;
  Child& operator=(Child&& other) noexcept;
  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;
  /// Terminates a still-running child.
  ~Child();

  [[nodiscard]] int pid() const noexcept { return pid_; }
  [[nodiscard]] bool running();

  /// SIGTERM, then SIGKILL after `grace`. Returns the exit status if known.
  std::optional<int> terminate(std::chrono::milliseconds grace = std::chrono::seconds(3));
  /// SIGKILL and reap.
  void kill_hard();
  /// Waits up to `timeout`; nullopt when still running.
  std::optional<int> wait_for(std::chrono::milliseconds timeout);

 private:
  int pid_ = -1;
  std::optional<int> status_;
};

/// Path of the running executable.
std::filesystem::path self_executable();

}  // namespace fedspace
