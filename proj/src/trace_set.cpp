#include "sca/trace_set.hpp"

#include "sca/errors.hpp"
#include "sca/rng.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <utility>

namespace sca {

namespace {

const std::uint8_t kAesSbox[256] = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab,
    0x76, 0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4,
    0x72, 0xc0, 0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71,
    0xd8, 0x31, 0x15, 0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2,
    0xeb, 0x27, 0xb2, 0x75, 0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6,
    0xb3, 0x29, 0xe3, 0x2f, 0x84, 0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb,
    0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf, 0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45,
    0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8, 0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5,
    0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2, 0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44,
    0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73, 0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a,
    0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb, 0xe0, 0x32, 0x3a, 0x0a, 0x49,
    0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79, 0xe7, 0xc8, 0x37, 0x6d,
    0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08, 0xba, 0x78, 0x25,
    0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a, 0x70, 0x3e,
    0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e, 0xe1,
    0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb,
    0x16};

std::string bytes_to_hex(const std::vector<std::uint8_t> &bytes) {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

int hex_digit(char c) {
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

std::vector<std::uint8_t> hex_to_bytes(const std::string &hex, const std::string &field) {
    if (hex.size() % 2 != 0)
        throw FormatError("odd-length hex string in field '" + field + "'");
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = hex_digit(hex[2 * i]);
        const int lo = hex_digit(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw FormatError("invalid hex digit in field '" + field + "'");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

template <typename T> void write_le(std::ostream &os, T value) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char *>(buf), sizeof(T));
}

template <typename T> T read_le(std::istream &is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char *>(buf), sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        value |= static_cast<T>(buf[i]) << (8 * i);
    return value;
}

constexpr std::uint16_t kFormatVersion = 1;

} // namespace

std::string scheme_name(Scheme s) {
    switch (s) {
    case Scheme::unprotected:
        return "unprotected";
    case Scheme::ms1:
        return "ms1";
    case Scheme::ms2:
        return "ms2";
    case Scheme::external:
        return "external";
    }
    return "unprotected";
}

Scheme scheme_from_name(const std::string &name) {
    if (name == "unprotected")
        return Scheme::unprotected;
    if (name == "ms1")
        return Scheme::ms1;
    if (name == "ms2")
        return Scheme::ms2;
    if (name == "external")
        return Scheme::external;
    throw ArgumentError("unknown scheme '" + name + "'");
}

std::uint8_t compute_intermediate(std::uint8_t p, std::uint8_t k) {
    return kAesSbox[p ^ k];
}

std::string leakage_model_name(LeakageModel m) {
    return m == LeakageModel::identity ? "identity" : "hamming_weight";
}

LeakageModel leakage_model_from_name(const std::string &name) {
    if (name == "identity")
        return LeakageModel::identity;
    if (name == "hamming_weight")
        return LeakageModel::hamming_weight;
    throw ArgumentError("unknown leakage model '" + name + "'");
}

std::uint8_t leakage_label(LeakageModel m, std::uint8_t v) {
    return m == LeakageModel::identity ? v : static_cast<std::uint8_t>(std::popcount(v));
}

TraceSet::TraceSet(std::size_t n_traces, std::size_t n_samples, std::vector<float> samples,
                   std::vector<std::uint8_t> plaintexts, std::vector<std::uint8_t> keys,
                   std::optional<std::vector<std::uint8_t>> masks, Scheme scheme,
                   std::optional<std::uint64_t> seed)
    : n_traces_(n_traces), n_samples_(n_samples), samples_(std::move(samples)),
      plaintexts_(std::move(plaintexts)), keys_(std::move(keys)), masks_(std::move(masks)),
      scheme_(scheme), seed_(seed) {
    if (n_traces_ < 1 || n_samples_ < 1)
        throw IntegrityError("trace set must have at least one trace and one sample");
    if (samples_.size() != n_traces_ * n_samples_)
        throw IntegrityError("sample payload does not match declared dimensions");
    if (plaintexts_.size() != n_traces_)
        throw IntegrityError("plaintext metadata length does not match trace count");
    if (keys_.size() != n_traces_)
        throw IntegrityError("key metadata length does not match trace count");
    const bool masked_scheme = scheme_ == Scheme::ms1 || scheme_ == Scheme::ms2;
    if (masked_scheme != masks_.has_value())
        throw IntegrityError("masks must be present exactly for schemes ms1 and ms2");
    if (masks_ && masks_->size() != n_traces_)
        throw IntegrityError("mask metadata length does not match trace count");
    for (float v : samples_)
        if (!std::isfinite(v))
            throw IntegrityError("non-finite sample value");
}

TraceSet TraceSet::subset(const std::vector<std::size_t> &rows) const {
    std::vector<float> samples;
    samples.reserve(rows.size() * n_samples_);
    std::vector<std::uint8_t> plaintexts, keys;
    plaintexts.reserve(rows.size());
    keys.reserve(rows.size());
    std::optional<std::vector<std::uint8_t>> masks;
    if (masks_)
        masks.emplace();
    for (std::size_t r : rows) {
        if (r >= n_traces_)
            throw ArgumentError("subset row index out of range");
        auto row = trace(r);
        samples.insert(samples.end(), row.begin(), row.end());
        plaintexts.push_back(plaintexts_[r]);
        keys.push_back(keys_[r]);
        if (masks_)
            masks->push_back((*masks_)[r]);
    }
    return TraceSet(rows.size(), n_samples_, std::move(samples), std::move(plaintexts),
                    std::move(keys), std::move(masks), scheme_, seed_);
}

std::vector<std::uint8_t> label_traces(const TraceSet &ts, LeakageModel model) {
    std::vector<std::uint8_t> labels(ts.n_traces());
    for (std::size_t i = 0; i < ts.n_traces(); ++i)
        labels[i] = leakage_label(model, compute_intermediate(ts.plaintexts()[i], ts.keys()[i]));
    return labels;
}

void save_traceset(const TraceSet &ts, const std::string &path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error("cannot open '" + path + "' for writing");

    os.write("SCAT", 4);
    write_le<std::uint16_t>(os, kFormatVersion);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ts.n_traces()));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ts.n_samples()));
    for (float v : ts.samples()) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        write_le<std::uint32_t>(os, bits);
    }

    nlohmann::json trailer;
    trailer["scheme"] = scheme_name(ts.scheme());
    trailer["plaintexts"] = bytes_to_hex(ts.plaintexts());
    trailer["keys"] = bytes_to_hex(ts.keys());
    trailer["masks"] = ts.masks() ? nlohmann::json(bytes_to_hex(*ts.masks())) : nlohmann::json();
    trailer["seed"] = ts.seed() ? nlohmann::json(*ts.seed()) : nlohmann::json();
    const std::string text = trailer.dump();
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));

    if (!os)
        throw Error("write to '" + path + "' failed");
}

TraceSet load_traceset(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error("cannot open '" + path + "' for reading");

    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SCAT", 4) != 0)
        throw FormatError("'" + path + "' is not a SCAT trace container (bad magic)");
    const auto version = read_le<std::uint16_t>(is);
    if (version != kFormatVersion)
        throw FormatError("unsupported SCAT version " + std::to_string(version));
    const auto n_traces = read_le<std::uint32_t>(is);
    const auto n_samples = read_le<std::uint32_t>(is);
    if (!is)
        throw FormatError("truncated SCAT header");

    const std::uint64_t n_values = std::uint64_t{n_traces} * n_samples;
    std::vector<float> samples(n_values);
    for (std::uint64_t i = 0; i < n_values; ++i) {
        const std::uint32_t bits = read_le<std::uint32_t>(is);
        float v;
        std::memcpy(&v, &bits, sizeof v);
        samples[i] = v;
    }
    if (!is)
        throw IntegrityError("sample payload shorter than declared dimensions");

    // Trailer: JSON text followed by its u32 length at the very end.
    const std::streampos payload_end = is.tellg();
    is.seekg(0, std::ios::end);
    const std::streampos file_end = is.tellg();
    if (file_end - payload_end < 4)
        throw FormatError("missing trailer");
    is.seekg(file_end - std::streampos(4));
    const auto trailer_len = read_le<std::uint32_t>(is);
    if (std::streamoff(file_end - payload_end) != std::streamoff(trailer_len) + 4)
        throw IntegrityError("trailer length does not match file size");
    std::string text(trailer_len, '\0');
    is.seekg(payload_end);
    is.read(text.data(), trailer_len);
    if (!is)
        throw FormatError("truncated trailer");

    nlohmann::json trailer;
    try {
        trailer = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw FormatError(std::string("trailer is not valid JSON: ") + e.what());
    }

    try {
        const Scheme scheme = scheme_from_name(trailer.at("scheme").get<std::string>());
        auto plaintexts = hex_to_bytes(trailer.at("plaintexts").get<std::string>(), "plaintexts");
        auto keys = hex_to_bytes(trailer.at("keys").get<std::string>(), "keys");
        std::optional<std::vector<std::uint8_t>> masks;
        if (!trailer.at("masks").is_null())
            masks = hex_to_bytes(trailer.at("masks").get<std::string>(), "masks");
        std::optional<std::uint64_t> seed;
        if (!trailer.at("seed").is_null())
            seed = trailer.at("seed").get<std::uint64_t>();
        return TraceSet(n_traces, n_samples, std::move(samples), std::move(plaintexts),
                        std::move(keys), std::move(masks), scheme, seed);
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(std::string("malformed trailer: ") + e.what());
    }
}

std::pair<TraceSet, TraceSet> split_traceset(const TraceSet &ts, std::size_t n_profiling,
                                             std::uint64_t seed) {
    if (n_profiling < 1 || n_profiling >= ts.n_traces())
        throw ArgumentError("n_profiling must satisfy 1 <= n_profiling < n_traces");
    SeededRng rng(seed);
    const auto order = rng.permutation(ts.n_traces());
    std::vector<std::size_t> head(order.begin(), order.begin() + n_profiling);
    std::vector<std::size_t> tail(order.begin() + n_profiling, order.end());
    return {ts.subset(head), ts.subset(tail)};
}

} // namespace sca
