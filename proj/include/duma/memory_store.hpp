#pragma once

// JSONL persistence for Dialogue Memory:
//   <data_dir>/sessions/<session_id>.jsonl, one MemoryRecord per line.
// Appends are fsync'ed before returning. A torn final line (crash during an
// append) is ignored on load and cut off by repair().

#include "duma/error.hpp"
#include "duma/memory.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace duma {

inline bool is_valid_session_id(std::string_view id) {
    if (id.empty() || id.size() > 128) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '-' || c == '_';
    });
}

// Parses a session file's contents. A final line without its newline is a
// torn append and is ignored; any other unreadable line is StorageFailure.
inline SessionMemory parse_memory_jsonl(std::string_view raw, std::string session_id) {
    SessionMemory mem{session_id};
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < raw.size()) {
        ++line_no;
        const auto nl = raw.find('\n', pos);
        const bool complete = nl != std::string_view::npos;
        const auto line = raw.substr(pos, (complete ? nl : raw.size()) - pos);
        pos = complete ? nl + 1 : raw.size();
        if (!complete) break;  // torn tail: the append never finished
        if (text::trim(line).empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorCode::StorageFailure,
                        "corrupt record at line " + std::to_string(line_no) + " of session " + session_id);
        }
        try {
            mem.append(record_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::StorageFailure, "bad record at line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return mem;
}

inline SessionMemory load_session_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::SessionNotFound, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_memory_jsonl(ss.str(), path.stem().string());
}

class MemoryStore {
public:
    explicit MemoryStore(std::filesystem::path data_dir) : data_dir_(std::move(data_dir)) {}

    const std::filesystem::path& data_dir() const noexcept { return data_dir_; }

    std::filesystem::path path_for(std::string_view session_id) const {
        if (!is_valid_session_id(session_id)) {
            throw Error(ErrorCode::InvalidArgument, "invalid session id '" + std::string(session_id) + "'");
        }
        return data_dir_ / "sessions" / (std::string(session_id) + ".jsonl");
    }

    bool exists(std::string_view session_id) const {
        return is_valid_session_id(session_id) && std::filesystem::exists(path_for(session_id));
    }

    // Creates an empty session file; fails if it already exists.
    void create(std::string_view session_id) const {
        const auto p = path_for(session_id);
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + p.parent_path().string() + ": " + ec.message());
        const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
        if (fd < 0) throw Error(ErrorCode::StorageFailure, "cannot create " + p.string() + ": " + std::strerror(errno));
        const bool synced = ::fsync(fd) == 0;
        ::close(fd);
        if (!synced) throw Error(ErrorCode::StorageFailure, "fsync failed for " + p.string());
    }

    void append(std::string_view session_id, const MemoryRecord& record) const {
        const auto p = path_for(session_id);
        std::string line = dump_json(record_to_json(record));
        line.push_back('\n');
        const int fd = ::open(p.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
        if (fd < 0) throw Error(ErrorCode::StorageFailure, "cannot open " + p.string() + ": " + std::strerror(errno));
        std::size_t written = 0;
        while (written < line.size()) {
            const auto n = ::write(fd, line.data() + written, line.size() - written);
            if (n < 0) {
                if (errno == EINTR) continue;
                const std::string why = std::strerror(errno);
                ::close(fd);
                throw Error(ErrorCode::StorageFailure, "write failed for " + p.string() + ": " + why);
            }
            written += static_cast<std::size_t>(n);
        }
        const bool synced = ::fsync(fd) == 0;
        ::close(fd);
        if (!synced) throw Error(ErrorCode::StorageFailure, "fsync failed for " + p.string());
    }

    std::string read_raw(std::string_view session_id) const {
        const auto p = path_for(session_id);
        std::ifstream in(p, std::ios::binary);
        if (!in) throw Error(ErrorCode::SessionNotFound, "no session file " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    SessionMemory load(std::string_view session_id) const {
        return parse_memory_jsonl(read_raw(session_id), std::string(session_id));
    }

    // Drops a torn final line so later appends start on a fresh line.
    void repair(std::string_view session_id) const {
        const auto raw = read_raw(session_id);
        if (raw.empty() || raw.back() == '\n') return;
        const auto nl = raw.rfind('\n');
        const auto keep = nl == std::string::npos ? 0 : nl + 1;
        std::filesystem::resize_file(path_for(session_id), keep);
    }

    std::vector<std::string> list_sessions() const {
        std::vector<std::string> out;
        const auto dir = data_dir_ / "sessions";
        std::error_code ec;
        if (!std::filesystem::is_directory(dir, ec)) return out;
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            if (e.path().extension() == ".jsonl") out.push_back(e.path().stem().string());
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::filesystem::path data_dir_;
};

// Validates, persists, then applies. The in-memory copy only changes once the
// record is durable.
inline void append_record(SessionMemory& memory, MemoryRecord record, const MemoryStore& store) {
    memory.check_append(record);
    store.append(memory.session_id(), record);
    memory.append(std::move(record));
}

} // namespace duma
