#include "sst/model_io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sst {
namespace {

using nlohmann::json;

json knots_to_json(const KnotSet& ks) {
    return json{{"k_min", ks.k_min}, {"k_max", ks.k_max}, {"internal", ks.internal}};
}

KnotSet knots_from_json(const json& j) {
    KnotSet ks;
    ks.k_min = j.at("k_min").get<double>();
    ks.k_max = j.at("k_max").get<double>();
    ks.internal = j.at("internal").get<std::vector<double>>();
    return ks;
}

} // namespace

std::string model_to_json(const Model& m) {
    json leaf{{"family", family_name(m.spec.family)}};
    if (m.spec.spline()) leaf["knots"] = knots_to_json(m.spec.knots);
    json j{
        {"format", "sst-v1"},
        {"depth", m.params.topo.depth},
        {"leaf_model", leaf},
        {"omega", m.params.omega},
        {"beta", m.params.beta},
        {"feature_names", m.feature_names},
        {"scaling",
         {{"min", m.scaler.min},
          {"max", m.scaler.max},
          {"impute", m.scaler.impute},
          {"categorical", m.scaler.categorical}}},
    };
    return j.dump(2);
}

Model model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("model json: ") + e.what());
    }
    if (!j.contains("format") || j["format"] != "sst-v1")
        throw SchemaMismatch("model json: expected format \"sst-v1\"");
    Model m;
    try {
        m.params.topo.depth = j.at("depth").get<int>();
        m.spec.family = family_from_name(j.at("leaf_model").at("family").get<std::string>());
        if (m.spec.spline()) {
            m.spec.knots = knots_from_json(j.at("leaf_model").at("knots"));
            m.spec.knots_m = m.spec.knots.m();
        }
        m.params.omega = j.at("omega").get<std::vector<std::vector<double>>>();
        m.params.beta = j.at("beta").get<std::vector<std::vector<double>>>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        const auto& sc = j.at("scaling");
        m.scaler.min = sc.at("min").get<std::vector<double>>();
        m.scaler.max = sc.at("max").get<std::vector<double>>();
        m.scaler.impute = sc.at("impute").get<std::vector<double>>();
        m.scaler.categorical = sc.at("categorical").get<std::vector<bool>>();
    } catch (const json::exception& e) {
        throw SchemaMismatch(std::string("model json: ") + e.what());
    }
    m.params.p = m.feature_names.size();
    if (m.params.omega.size() != static_cast<std::size_t>(m.params.topo.n_branch()) ||
        m.params.beta.size() != static_cast<std::size_t>(m.params.topo.n_leaf()))
        throw SchemaMismatch("model json: omega/beta sizes do not match the depth");
    for (const auto& w : m.params.omega)
        if (w.size() != m.params.p + 1)
            throw SchemaMismatch("model json: omega block size does not match feature count");
    const std::size_t bd = m.spec.beta_dim(m.params.p);
    for (const auto& b : m.params.beta)
        if (b.size() != bd) throw SchemaMismatch("model json: beta block size does not match");
    return m;
}

void save_model(const Model& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("save_model: cannot open " + path);
    out << model_to_json(m) << "\n";
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_model: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

namespace {

// Compact SHA-256 (FIPS 180-4), enough for dataset fingerprints.
struct Sha256 {
    std::array<std::uint32_t, 8> h{0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                                   0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
    std::array<std::uint8_t, 64> block{};
    std::uint64_t total = 0;
    std::size_t fill = 0;

    static std::uint32_t rotr(std::uint32_t v, int s) { return (v >> s) | (v << (32 - s)); }

    void compress(const std::uint8_t* p) {
        static constexpr std::uint32_t K[64] = {
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
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        auto a = h;
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t S1 = rotr(a[4], 6) ^ rotr(a[4], 11) ^ rotr(a[4], 25);
            const std::uint32_t ch = (a[4] & a[5]) ^ (~a[4] & a[6]);
            const std::uint32_t t1 = a[7] + S1 + ch + K[i] + w[i];
            const std::uint32_t S0 = rotr(a[0], 2) ^ rotr(a[0], 13) ^ rotr(a[0], 22);
            const std::uint32_t maj = (a[0] & a[1]) ^ (a[0] & a[2]) ^ (a[1] & a[2]);
            const std::uint32_t t2 = S0 + maj;
            a = {t1 + t2, a[0], a[1], a[2], a[3] + t1, a[4], a[5], a[6]};
        }
        for (int i = 0; i < 8; ++i) h[i] += a[i];
    }

    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        total += len;
        while (len > 0) {
            const std::size_t take = std::min(len, block.size() - fill);
            std::memcpy(block.data() + fill, p, take);
            fill += take;
            p += take;
            len -= take;
            if (fill == block.size()) {
                compress(block.data());
                fill = 0;
            }
        }
    }

    std::string hex_digest() {
        const std::uint64_t bits = total * 8;
        const std::uint8_t one = 0x80;
        update(&one, 1);
        const std::uint8_t zero = 0;
        while (fill != 56) update(&zero, 1);
        for (int i = 7; i >= 0; --i) {
            const std::uint8_t b = static_cast<std::uint8_t>(bits >> (8 * i));
            update(&b, 1);
        }
        static const char* hexd = "0123456789abcdef";
        std::string out;
        for (std::uint32_t v : h)
            for (int i = 7; i >= 0; --i) out.push_back(hexd[(v >> (4 * i)) & 0xF]);
        return out;
    }
};

} // namespace

std::string sha256_bytes(const std::string& bytes) {
    Sha256 s;
    s.update(bytes.data(), bytes.size());
    return s.hex_digest();
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("sha256_file: cannot open " + path);
    Sha256 s;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        s.update(buf, static_cast<std::size_t>(in.gcount()));
    return s.hex_digest();
}

} // namespace sst
