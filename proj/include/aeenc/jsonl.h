#ifndef AEENC_JSONL_H_
#define AEENC_JSONL_H_

#include <filesystem>
#include <functional>
#include <mutex>
#include <string>

#include "json.hpp"

namespace aeenc {

// Append-only line file. Each AppendLine is written with O_APPEND and
// fsync'd before it returns.
class DurableAppender {
 public:
  explicit DurableAppender(std::filesystem::path path);
  ~DurableAppender();
  DurableAppender(const DurableAppender&) = delete;
  DurableAppender& operator=(const DurableAppender&) = delete;

  // `line` must not contain a newline; one is added.
  void AppendLine(const std::string& line);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::mutex mu_;
};

// Calls fn(line_no, record) for every JSON line of the file. A missing file
// has no lines. An unparseable final line without a trailing newline is a
// torn write and is skipped; any other bad line is a ParseError.
void ReadJsonLines(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const nlohmann::json&)>& fn);

}  // namespace aeenc

#endif  // AEENC_JSONL_H_
