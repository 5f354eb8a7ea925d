#include "planchat/archive.hpp"

#include <cstdint>

#include <zlib.h>

namespace planchat::archive {

namespace {

constexpr std::uint32_t kLocalHeader = 0x04034b50;
constexpr std::uint32_t kCentralHeader = 0x02014b50;
constexpr std::uint32_t kEndOfCentral = 0x06054b50;

struct Reader {
    const std::string& data;

    void need(std::size_t at, std::size_t n) const {
        if (at > data.size() || data.size() - at < n) throw ArchiveError("truncated zip archive");
    }
    std::uint16_t u16(std::size_t at) const {
        need(at, 2);
        return static_cast<std::uint16_t>(static_cast<unsigned char>(data[at]) |
                                          static_cast<unsigned char>(data[at + 1]) << 8);
    }
    std::uint32_t u32(std::size_t at) const { return u16(at) | static_cast<std::uint32_t>(u16(at + 2)) << 16; }
};

void put16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
    put16(out, static_cast<std::uint16_t>(v & 0xffff));
    put16(out, static_cast<std::uint16_t>(v >> 16));
}

std::string inflate_raw(const std::string& in, std::size_t expected) {
    std::string out(expected, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw ArchiveError("cannot initialise inflate");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected) throw ArchiveError("corrupt deflate stream");
    return out;
}

std::uint32_t crc_of(const std::string& s) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

}  // namespace

std::map<std::string, std::string> read_zip(const std::string& bytes) {
    Reader r{bytes};
    if (bytes.size() < 22) throw ArchiveError("not a zip archive");
    // The end record sits in the last 22 bytes plus an optional comment.
    std::size_t eocd = std::string::npos;
    std::size_t lowest = bytes.size() > 22 + 0xffff ? bytes.size() - 22 - 0xffff : 0;
    for (std::size_t at = bytes.size() - 22 + 1; at-- > lowest;) {
        if (r.u32(at) == kEndOfCentral) {
            eocd = at;
            break;
        }
    }
    if (eocd == std::string::npos) throw ArchiveError("not a zip archive");

    std::size_t count = r.u16(eocd + 10);
    std::size_t at = r.u32(eocd + 16);
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < count; ++i) {
        if (r.u32(at) != kCentralHeader) throw ArchiveError("bad central directory");
        auto flags = r.u16(at + 8);
        auto method = r.u16(at + 10);
        auto crc = r.u32(at + 16);
        std::size_t csize = r.u32(at + 20);
        std::size_t usize = r.u32(at + 24);
        std::size_t name_len = r.u16(at + 28);
        std::size_t extra_len = r.u16(at + 30);
        std::size_t comment_len = r.u16(at + 32);
        std::size_t local = r.u32(at + 42);
        r.need(at + 46, name_len);
        std::string name = bytes.substr(at + 46, name_len);
        at += 46 + name_len + extra_len + comment_len;

        if (flags & 1) throw ArchiveError("encrypted entry: " + name);
        if (!name.empty() && name.back() == '/') continue;

        if (r.u32(local) != kLocalHeader) throw ArchiveError("bad local header for " + name);
        std::size_t start = local + 30 + r.u16(local + 26) + r.u16(local + 28);
        r.need(start, csize);
        std::string raw = bytes.substr(start, csize);
        std::string content;
        if (method == 0)
            content = std::move(raw);
        else if (method == 8)
            content = inflate_raw(raw, usize);
        else
            throw ArchiveError("unsupported compression method for " + name);
        if (crc_of(content) != crc) throw ArchiveError("checksum mismatch for " + name);
        out[name] = std::move(content);
    }
    return out;
}

std::string write_zip(const std::map<std::string, std::string>& files) {
    std::string out, central;
    for (const auto& [name, content] : files) {
        auto offset = static_cast<std::uint32_t>(out.size());
        auto crc = crc_of(content);
        auto size = static_cast<std::uint32_t>(content.size());
        auto name_len = static_cast<std::uint16_t>(name.size());

        put32(out, kLocalHeader);
        put16(out, 20);
        put16(out, 0);
        put16(out, 0);
        put32(out, 0);  // dos time and date
        put32(out, crc);
        put32(out, size);
        put32(out, size);
        put16(out, name_len);
        put16(out, 0);
        out += name;
        out += content;

        put32(central, kCentralHeader);
        put16(central, 20);
        put16(central, 20);
        put16(central, 0);
        put16(central, 0);
        put32(central, 0);
        put32(central, crc);
        put32(central, size);
        put32(central, size);
        put16(central, name_len);
        put16(central, 0);
        put16(central, 0);
        put16(central, 0);
        put16(central, 0);
        put32(central, 0);
        put32(central, offset);
        central += name;
    }
    auto central_at = static_cast<std::uint32_t>(out.size());
    out += central;
    put32(out, kEndOfCentral);
    put16(out, 0);
    put16(out, 0);
    put16(out, static_cast<std::uint16_t>(files.size()));
    put16(out, static_cast<std::uint16_t>(files.size()));
    put32(out, static_cast<std::uint32_t>(central.size()));
    put32(out, central_at);
    put16(out, 0);
    return out;
}

}  // namespace planchat::archive
