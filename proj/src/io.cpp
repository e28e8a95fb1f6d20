#include "sqg/io.hpp"

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sqg {

namespace {

static_assert(sizeof(double) == 8, "KRN1 assumes 64-bit doubles");

// FIPS 180-4 SHA-256, compact single-buffer implementation.
struct Sha256 {
    std::array<std::uint32_t, 8> h{0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                                   0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
    std::array<std::uint8_t, 64> buf{};
    std::size_t buf_len = 0;
    std::uint64_t total = 0;

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void block(const std::uint8_t* p) {
        static const std::uint32_t k[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
            0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
            0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
            0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
            0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
            0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
            0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
            0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
            0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        auto a = h;
        for (int i = 0; i < 64; ++i) {
            std::uint32_t s1 = rotr(a[4], 6) ^ rotr(a[4], 11) ^ rotr(a[4], 25);
            std::uint32_t ch = (a[4] & a[5]) ^ (~a[4] & a[6]);
            std::uint32_t t1 = a[7] + s1 + ch + k[i] + w[i];
            std::uint32_t s0 = rotr(a[0], 2) ^ rotr(a[0], 13) ^ rotr(a[0], 22);
            std::uint32_t maj = (a[0] & a[1]) ^ (a[0] & a[2]) ^ (a[1] & a[2]);
            std::uint32_t t2 = s0 + maj;
            a[7] = a[6]; a[6] = a[5]; a[5] = a[4]; a[4] = a[3] + t1;
            a[3] = a[2]; a[2] = a[1]; a[1] = a[0]; a[0] = t1 + t2;
        }
        for (int i = 0; i < 8; ++i) h[i] += a[i];
    }

    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        total += len;
        while (len > 0) {
            std::size_t take = std::min(len, buf.size() - buf_len);
            std::memcpy(buf.data() + buf_len, p, take);
            buf_len += take;
            p += take;
            len -= take;
            if (buf_len == buf.size()) { block(buf.data()); buf_len = 0; }
        }
    }

    std::string finish() {
        std::uint64_t bits = total * 8;
        std::uint8_t pad = 0x80;
        update(&pad, 1);
        std::uint8_t zero = 0;
        while (buf_len != 56) update(&zero, 1);
        std::uint8_t len_be[8];
        for (int i = 0; i < 8; ++i) len_be[i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
        update(len_be, 8);
        std::ostringstream os;
        for (std::uint32_t v : h) {
            for (int b = 28; b >= 0; b -= 4) os << "0123456789abcdef"[(v >> b) & 0xf];
        }
        return os.str();
    }
};

} // namespace

std::string sha256_hex(const void* data, std::size_t len) {
    Sha256 s;
    s.update(data, len);
    return s.finish();
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("sha256_file: cannot open " + path);
    Sha256 s;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        s.update(buf, static_cast<std::size_t>(in.gcount()));
    }
    return s.finish();
}

void write_krn1(const std::string& path, const std::vector<PeriodicField>& slices, double mu) {
    if (slices.empty()) throw std::invalid_argument("write_krn1: no slices");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_krn1: cannot open " + path);
    char header[128];
    std::snprintf(header, sizeof(header), "KRN1 %zu %zu %zu %.17g\n", slices.size(),
                  slices[0].nx(), slices[0].ny(), mu);
    out << header;
    for (const auto& f : slices)
        out.write(reinterpret_cast<const char*>(f.values().data()),
                  static_cast<std::streamsize>(f.values().size() * sizeof(double)));
}

Krn1Data read_krn1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_krn1: cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::istringstream hs(line);
    std::string magic;
    Krn1Data d;
    hs >> magic >> d.nt >> d.nx >> d.ny >> d.mu;
    if (magic != "KRN1" || !hs) throw std::runtime_error("read_krn1: bad header in " + path);
    d.data.resize(d.nt * d.nx * d.ny);
    in.read(reinterpret_cast<char*>(d.data.data()),
            static_cast<std::streamsize>(d.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("read_krn1: truncated payload in " + path);
    return d;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    os << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    write_text_file(path, os.str());
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line, section;
    auto trim = [](std::string s) {
        std::size_t a = s.find_first_not_of(" \t\r");
        std::size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config: malformed section at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key=value at line " + std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
        out[(section.empty() ? key : section + "." + key)] = val;
    }
    return out;
}

std::string Manifest::config_hash() const {
    std::ostringstream os;
    os << command << "\n" << seed << "\n";
    for (const auto& [k, v] : config) os << k << "=" << v << "\n";
    return sha256_hex(os.str());
}

void write_manifest(const std::string& dir, const Manifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["seed"] = m.seed;
    j["config"] = m.config;
    j["config_hash"] = m.config_hash();
    j["artifacts"] = m.artifacts;
    write_text_file(dir + "/manifest.json", j.dump(2) + "\n");
}

Manifest read_manifest(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    Manifest m;
    m.command = j.at("command").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    std::string recorded = j.at("config_hash").get<std::string>();
    if (recorded != m.config_hash())
        throw std::runtime_error("manifest: config hash mismatch in " + path);
    return m;
}

ManifestCheck verify_manifest(const std::string& dir) {
    Manifest m = read_manifest(dir + "/manifest.json");
    ManifestCheck c;
    for (const auto& [name, sha] : m.artifacts) {
        std::string path = dir + "/" + name;
        if (!std::filesystem::exists(path)) {
            c.ok = false;
            c.missing.push_back(name);
            continue;
        }
        if (sha256_file(path) != sha) {
            c.ok = false;
            c.mismatched.push_back(name);
        }
    }
    return c;
}

std::vector<std::string> manifest_config_diff(const Manifest& a, const Manifest& b) {
    std::vector<std::string> out;
    for (const auto& [k, v] : a.config) {
        auto it = b.config.find(k);
        if (it == b.config.end()) out.push_back(k + ": " + v + " -> (absent)");
        else if (it->second != v) out.push_back(k + ": " + v + " -> " + it->second);
    }
    for (const auto& [k, v] : b.config)
        if (!a.config.count(k)) out.push_back(k + ": (absent) -> " + v);
    if (a.seed != b.seed)
        out.push_back("seed: " + std::to_string(a.seed) + " -> " + std::to_string(b.seed));
    return out;
}

} // namespace sqg
