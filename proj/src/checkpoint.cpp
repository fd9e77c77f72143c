#include "san/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "san/errors.hpp"

namespace san {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

class Reader {
public:
    explicit Reader(const std::string& b) : b_(b) {}

    std::uint64_t uint(int bytes) {
        need(static_cast<std::size_t>(bytes));
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(bytes);
        return v;
    }
    std::string str() {
        const std::size_t n = uint(4);
        need(n);
        std::string s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::string raw(std::size_t n) {
        need(n);
        std::string s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == b_.size(); }
    int offset() const { return static_cast<int>(pos_); }

private:
    void need(std::size_t n) const {
        if (b_.size() - pos_ < n) throw ParseError(static_cast<int>(pos_), "checkpoint: truncated");
    }
    const std::string& b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
    std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(c.meta.size()));
    for (const auto& [k, v] : c.meta) {
        put_str(out, k);
        put_str(out, v);
    }
    put_u32(out, static_cast<std::uint32_t>(c.arrays.size()));
    for (const auto& [name, a] : c.arrays) {
        put_str(out, name);
        put_u64(out, a.size());
    }
    for (const auto& [name, a] : c.arrays)
        for (double x : a) put_u64(out, std::bit_cast<std::uint64_t>(x));
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (r.raw(sizeof kCheckpointMagic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic))
        throw ParseError(0, "checkpoint: bad magic");
    const auto version = r.uint(4);
    if (version != kCheckpointVersion) throw ParseError(8, "checkpoint: unsupported version " + std::to_string(version));
    Checkpoint c;
    const auto n_meta = r.uint(4);
    for (std::uint64_t i = 0; i < n_meta; ++i) {
        std::string k = r.str();
        c.meta[k] = r.str();
    }
    const auto n_arrays = r.uint(4);
    std::vector<std::pair<std::string, std::uint64_t>> layout;
    for (std::uint64_t i = 0; i < n_arrays; ++i) {
        std::string name = r.str();
        layout.emplace_back(name, r.uint(8));
    }
    for (const auto& [name, n] : layout) {
        if (n > bytes.size() / 8) throw ParseError(r.offset(), "checkpoint: array length exceeds file size");
        std::vector<double> a(n);
        for (auto& x : a) x = std::bit_cast<double>(r.uint(8));
        c.arrays[name] = std::move(a);
    }
    if (!r.done()) throw ParseError(r.offset(), "checkpoint: trailing bytes");
    return c;
}

void write_file_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ContractError("cannot write file: " + tmp);
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
        f.flush();
        if (!f) throw ContractError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ContractError("rename failed: " + path);
}

void save_checkpoint(const Checkpoint& c, const std::string& path) { write_file_atomic(path, encode_checkpoint(c)); }

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ContractError("cannot open checkpoint: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return decode_checkpoint(ss.str());
}

}  // namespace san
