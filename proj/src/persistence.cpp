#include "confidant/persistence.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <random>

#include "confidant/error.hpp"
#include "confidant/text.hpp"

namespace fs = std::filesystem;

namespace confidant::persistence {

namespace {

void append_durably(const std::string& path, const std::string& data) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
    if (fd < 0) throw Error(ErrorCode::StorageError, "cannot open " + path + ": " + std::strerror(errno));
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            const std::string err = std::strerror(errno);
            ::close(fd);
            throw Error(ErrorCode::StorageError, "cannot append to " + path + ": " + err);
        }
        off += static_cast<std::size_t>(n);
    }
    const bool synced = ::fsync(fd) == 0;
    ::close(fd);
    if (!synced) throw Error(ErrorCode::StorageError, "fsync failed for " + path);
}

void make_dirs(const std::string& dir, fs::perms perms) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::StorageError, "cannot create " + dir + ": " + ec.message());
    fs::permissions(dir, perms, ec);
}

nlohmann::json parse_json_file(const std::string& path) {
    try {
        return nlohmann::json::parse(text::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::StorageError, "corrupt file " + path + ": " + e.what());
    }
}

}  // namespace

void check_session_id(const std::string& id) {
    const bool ok = !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
    if (!ok) throw Error(ErrorCode::ValidationError, "invalid session id");
}

std::string new_session_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    static const char* hex = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 2; ++i) {
        std::uint64_t v = rng();
        for (int k = 0; k < 16; ++k, v >>= 4) id += hex[v & 0xF];
    }
    return id;
}

SessionStore::SessionStore(std::string root) : root_(std::move(root)) {
    make_dirs(root_ + "/sessions", fs::perms::owner_all);
    make_dirs(root_ + "/private", fs::perms::owner_all);
}

std::string SessionStore::session_dir(const std::string& id) const {
    check_session_id(id);
    return root_ + "/sessions/" + id;
}

std::string SessionStore::private_dir(const std::string& id) const {
    check_session_id(id);
    return root_ + "/private/" + id;
}

void SessionStore::write_snapshots(const pipeline::ConversationState& s) const {
    text::write_file_atomic(private_dir(s.session_id) + "/map.json", nlohmann::json(s.map).dump());
    text::write_file_atomic(session_dir(s.session_id) + "/entities.json",
                            memory::entity_snapshot(s.entities, s.session_id).dump());
}

void SessionStore::create(const pipeline::ConversationState& s, std::int64_t created_at_ms) {
    if (exists(s.session_id)) throw Error(ErrorCode::StorageError, "session already exists: " + s.session_id);
    make_dirs(session_dir(s.session_id), fs::perms::owner_all);
    make_dirs(private_dir(s.session_id), fs::perms::owner_all);
    write_snapshots(s);
    append_durably(session_dir(s.session_id) + "/log.jsonl", "");
    // session.json last: its presence marks a complete session.
    const nlohmann::json meta = {{"session_id", s.session_id}, {"config", s.config}, {"created_at_ms", created_at_ms}};
    text::write_file_atomic(session_dir(s.session_id) + "/session.json", meta.dump());
}

void SessionStore::commit(const pipeline::ConversationState& s, const std::vector<memory::Turn>& new_turns,
                          const pipeline::ResponseTrace* trace) {
    write_snapshots(s);
    std::string lines;
    for (const auto& t : new_turns) lines += nlohmann::json{{"type", "turn"}, {"turn", t}}.dump() + "\n";
    if (trace != nullptr) lines += nlohmann::json{{"type", "trace"}, {"trace", *trace}}.dump() + "\n";
    if (!lines.empty()) append_durably(session_dir(s.session_id) + "/log.jsonl", lines);
}

bool SessionStore::exists(const std::string& id) const {
    return fs::is_regular_file(session_dir(id) + "/session.json");
}

std::vector<nlohmann::json> SessionStore::read_log(const std::string& id) const {
    const std::string path = session_dir(id) + "/log.jsonl";
    std::string contents = text::read_file(path);
    // Bytes after the last newline are an append the crash interrupted; cut
    // them so later appends start on a clean line.
    const auto last_nl = contents.rfind('\n');
    const std::size_t complete = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (complete < contents.size()) {
        if (::truncate(path.c_str(), static_cast<off_t>(complete)) != 0) {
            throw Error(ErrorCode::StorageError, "cannot repair torn log for session " + id);
        }
        contents.resize(complete);
    }
    std::vector<nlohmann::json> out;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(contents)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error&) {
            throw Error(ErrorCode::StorageError, "corrupt log line " + std::to_string(line_no) + " in session " + id);
        }
    }
    return out;
}

pipeline::ConversationState SessionStore::load(const std::string& id) const {
    if (!exists(id)) throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    const auto meta = parse_json_file(session_dir(id) + "/session.json");

    pipeline::ConversationState s;
    s.session_id = id;
    try {
        s.config = meta.at("config").get<pipeline::SessionConfig>();
        s.map = parse_json_file(private_dir(id) + "/map.json").get<privacy::AnonymizationMap>();
        s.entities = memory::entity_store_from_snapshot(parse_json_file(session_dir(id) + "/entities.json"),
                                                        s.config.update_every);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::StorageError, "corrupt snapshot for session " + id + ": " + e.what());
    }
    s.buffer = memory::ShortTermBuffer(2 * static_cast<std::size_t>(s.config.short_term_n));
    for (const auto& line : read_log(id)) {
        if (line.value("type", "") != "turn") continue;
        auto turn = line.at("turn").get<memory::Turn>();
        s.buffer.append(turn);
        if (turn.role == memory::Role::User) ++s.exchanges;
        s.log.push_back(std::move(turn));
    }
    return s;
}

std::vector<pipeline::ResponseTrace> SessionStore::load_traces(const std::string& id) const {
    if (!exists(id)) throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    std::vector<pipeline::ResponseTrace> out;
    for (const auto& line : read_log(id)) {
        if (line.value("type", "") == "trace") out.push_back(line.at("trace").get<pipeline::ResponseTrace>());
    }
    return out;
}

std::int64_t SessionStore::created_at(const std::string& id) const {
    if (!exists(id)) throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    return parse_json_file(session_dir(id) + "/session.json").value("created_at_ms", std::int64_t{0});
}

void SessionStore::remove(const std::string& id) {
    if (!exists(id)) throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    std::error_code ec;
    // Drop the marker first so a half-finished removal reads as "not found".
    fs::remove(session_dir(id) + "/session.json", ec);
    fs::remove_all(private_dir(id), ec);
    fs::remove_all(session_dir(id), ec);
    if (ec) throw Error(ErrorCode::StorageError, "cannot remove session " + id + ": " + ec.message());
}

std::vector<std::string> SessionStore::list() const {
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root_ + "/sessions")) {
        const std::string id = entry.path().filename().string();
        if (entry.is_directory() && fs::is_regular_file(entry.path() / "session.json")) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace confidant::persistence
