#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "ipsim/io.hpp"

namespace ipsim {

namespace {

class ByteWriter {
public:
    void bytes(const char* s, std::size_t n) { buf_.append(s, n); }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    std::uint16_t u16() {
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(u8()) << (8 * i);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    double f32() { return std::bit_cast<float>(u32()); }
    bool at_end() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw IoError(name_ + ": unexpected end of file");
    }

    std::string data_;
    std::string name_;
    std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

WeightBank read_weight_bank(const std::filesystem::path& path) {
    ByteReader in(slurp(path), path.string());
    if (in.bytes(4) != "IPWB") throw IoError(path.string() + ": not a weight bank (bad magic)");
    const auto version = in.u16();
    if (version != kWeightBankVersion) throw IoError(path.string() + ": unsupported version " + std::to_string(version));
    const std::size_t m = in.u32();
    const std::size_t cols = in.u32();
    const auto flags = in.u8();
    if (m == 0 || cols == 0) throw IoError(path.string() + ": empty weight bank");
    const bool has_rgb = flags & 1u;
    const std::size_t expected = 4 * (m * cols + m + (has_rgb ? m * cols * 3 : 0));
    if (in.remaining() != expected) throw IoError(path.string() + ": payload size does not match header");

    Matrix w(m, cols);
    for (double& v : w.data) v = in.f32();
    std::vector<double> bias(m);
    for (double& b : bias) b = in.f32();
    std::optional<Matrix> src;
    if (has_rgb) {
        src.emplace(m, cols * 3);
        for (double& v : src->data) v = in.f32();
    }
    try {
        return WeightBank::from_raw(std::move(w), std::move(bias), std::move(src));
    } catch (const std::invalid_argument& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_weight_bank(const std::filesystem::path& path, const WeightBank& bank) {
    ByteWriter out;
    out.bytes("IPWB", 4);
    out.u16(kWeightBankVersion);
    out.u32(static_cast<std::uint32_t>(bank.vectors()));
    out.u32(static_cast<std::uint32_t>(bank.columns()));
    out.u8(bank.source_rgb() ? 1 : 0);
    for (double v : bank.raw_weights().data) out.f32(v);
    for (double b : bank.biases()) out.f32(b);
    if (bank.source_rgb()) {
        for (double v : bank.source_rgb()->data) out.f32(v);
    }
    spill(path, out.str());
}

SelectionMask read_selection_mask(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mask " + path.string());
    std::vector<std::uint8_t> bits;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (line != "0" && line != "1") {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 0 or 1");
        }
        bits.push_back(line == "1" ? 1 : 0);
    }
    return SelectionMask(std::move(bits));
}

void write_selection_mask(const std::filesystem::path& path, const SelectionMask& mask) {
    std::string s;
    for (auto b : mask.bits()) s += b ? "1\n" : "0\n";
    spill(path, s);
}

std::string encode_features(const DigitalFeatureFrame& frame, FeatureFormat format) {
    if (format == FeatureFormat::kBinary) {
        ByteWriter out;
        out.bytes("IPFF", 4);
        out.u16(kFeatureFileVersion);
        out.u32(frame.frame);
        out.u32(static_cast<std::uint32_t>(frame.entries.size()));
        out.u32(static_cast<std::uint32_t>(frame.vectors));
        for (const auto& e : frame.entries) {
            out.u32(e.patch);
            for (double v : e.features) out.f32(v);
        }
        return out.str();
    }
    std::ostringstream os;
    os << "frame,patch,vector,value\n";
    os << std::setprecision(std::numeric_limits<float>::max_digits10);
    for (const auto& e : frame.entries) {
        for (std::size_t v = 0; v < e.features.size(); ++v) {
            os << frame.frame << ',' << e.patch << ',' << v << ',' << static_cast<float>(e.features[v]) << '\n';
        }
    }
    return os.str();
}

void write_features(const std::filesystem::path& path, const DigitalFeatureFrame& frame,
                    FeatureFormat format) {
    spill(path, encode_features(frame, format));
}

namespace {

DigitalFeatureFrame parse_csv_features(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("frame,patch,vector,value", 0) != 0) {
        throw IoError(name + ": missing CSV header");
    }
    std::map<std::uint32_t, std::map<std::size_t, double>> patches;
    DigitalFeatureFrame frame;
    bool seen = false;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string f[4];
        for (auto& field : f) {
            if (!std::getline(ls, field, ',')) throw IoError(name + ":" + std::to_string(lineno) + ": expected 4 fields");
        }
        try {
            const auto fr = static_cast<std::uint32_t>(std::stoul(f[0]));
            if (seen && fr != frame.frame) throw IoError(name + ": multiple frames in one file");
            frame.frame = fr;
            seen = true;
            patches[static_cast<std::uint32_t>(std::stoul(f[1]))][std::stoul(f[2])] = static_cast<double>(std::stof(f[3]));
        } catch (const std::logic_error&) {
            throw IoError(name + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    for (auto& [patch, vec] : patches) {
        frame.vectors = std::max(frame.vectors, vec.empty() ? 0 : vec.rbegin()->first + 1);
    }
    for (auto& [patch, vec] : patches) {
        if (vec.size() != frame.vectors) throw IoError(name + ": patch " + std::to_string(patch) + " has missing vectors");
        DigitalPatch dp{patch, {}};
        for (auto& [v, value] : vec) dp.features.push_back(value);
        frame.entries.push_back(std::move(dp));
    }
    return frame;
}

}  // namespace

DigitalFeatureFrame read_features(const std::filesystem::path& path) {
    std::string data = slurp(path);
    if (data.rfind("IPFF", 0) != 0) return parse_csv_features(data, path.string());
    ByteReader in(std::move(data), path.string());
    in.bytes(4);
    const auto version = in.u16();
    if (version != kFeatureFileVersion) throw IoError(path.string() + ": unsupported version " + std::to_string(version));
    DigitalFeatureFrame frame;
    frame.frame = in.u32();
    const std::size_t count = in.u32();
    frame.vectors = in.u32();
    if (in.remaining() != count * (4 + 4 * frame.vectors)) {
        throw IoError(path.string() + ": payload size does not match header");
    }
    for (std::size_t p = 0; p < count; ++p) {
        DigitalPatch dp{in.u32(), std::vector<double>(frame.vectors)};
        for (double& v : dp.features) v = in.f32();
        frame.entries.push_back(std::move(dp));
    }
    return frame;
}

}  // namespace ipsim
