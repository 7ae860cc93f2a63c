#include "fairaudit/util.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "fairaudit/errors.hpp"

namespace fairaudit::util {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0f]);
    }
    return out;
}

std::string iso8601_now_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string slugify(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    bool pending_sep = false;
    for (unsigned char c : name) {
        if (std::isalnum(c)) {
            if (pending_sep && !out.empty()) out.push_back('-');
            pending_sep = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_sep = true;
        }
    }
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    const auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write file: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("short write: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("rename failed for " + path.string() + ": " + ec.message());
    }
}

void append_line(const std::filesystem::path& path, std::string_view line) {
    const auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to file: " + path.string());
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.put('\n');
    out.flush();
    if (!out) throw IoError("short append: " + path.string());
}

void for_each_line(const std::string& content,
                   const std::function<void(std::size_t, std::string_view)>& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        const std::size_t nl = content.find('\n', pos);
        const std::size_t end = (nl == std::string::npos) ? content.size() : nl;
        ++line_no;
        std::string_view line(content.data() + pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) fn(line_no, line);
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
}

std::size_t substitute_placeholder(std::string& text, std::string_view key,
                                   std::string_view value) {
    const std::string needle = "{{" + std::string(key) + "}}";
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
        ++count;
    }
    return count;
}

std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == 0) throw Error("bounded_uniform: zero bound");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

std::string format_percent(double value) {
    // round half-up at one decimal; renders only, stores keep full precision
    const double scaled = std::floor(value * 10.0 + 0.5) / 10.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", scaled);
    return buf;
}

std::string format_coefficient(double value) {
    const double scaled = std::floor(std::abs(value) * 1000.0 + 0.5) / 1000.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%.3f", value < 0 && scaled != 0.0 ? "-" : "", scaled);
    return buf;
}

}  // namespace fairaudit::util
