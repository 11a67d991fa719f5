#include "fpd/io/artifact.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "fpd/error.hpp"

namespace fpd::io {

namespace {

constexpr char kMagic[8] = {'F', 'P', 'D', 'S', 'T', 'A', 'C', 'K'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    Reader(const std::vector<std::uint8_t>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

    std::uint64_t u(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return end_ - pos_; }

private:
    void need(std::size_t n) const {
        if (n > end_ - pos_) throw FormatError("model artifact is truncated");
    }
    const std::vector<std::uint8_t>& bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
    return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

/// Every persisted array of a module, in a fixed order.
std::vector<std::vector<double>*> arrays_of(LevelModule& m) {
    std::vector<std::vector<double>*> out;
    for (nn::Parameter* p : m.body.parameters()) out.push_back(&p->value);
    for (auto* b : m.body.buffers()) out.push_back(b);
    out.push_back(&m.scaler.mean);
    out.push_back(&m.scaler.scale);
    return out;
}

}  // namespace

std::vector<std::uint8_t> serialize_stack(const ExtractorStack& stack) {
    if (!stack.frozen()) {
        throw StateError("save_stack: finalize the stack before saving");
    }
    ExtractorStack copy = stack;
    nlohmann::json meta;
    meta["format"] = "fpd-stack";
    meta["architecture"] = copy.architecture().to_json();
    meta["schedule"] = nlohmann::json::array();
    for (Resolution r : copy.schedule()) meta["schedule"].push_back(to_string(r));
    meta["version"] = copy.version();
    meta["training_config"] = copy.training_config();
    meta["modules"] = nlohmann::json::array();

    std::vector<double> payload;
    for (LevelModule* m : copy.modules()) {
        nlohmann::json mj = {{"level", to_string(m->level)},
                             {"input_channels", m->input_channels},
                             {"input_length", m->input_length},
                             {"classes", m->classes},
                             {"trained", m->trained},
                             {"body", m->body.config()}};
        nlohmann::json sizes = nlohmann::json::array();
        for (auto* a : arrays_of(*m)) {
            sizes.push_back(a->size());
            payload.insert(payload.end(), a->begin(), a->end());
        }
        mj["array_sizes"] = sizes;
        meta["modules"].push_back(mj);
    }

    const std::string text = meta.dump();
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kArtifactVersion);
    put_u64(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    put_u64(out, payload.size());
    for (double v : payload) put_u64(out, std::bit_cast<std::uint64_t>(v));
    put_u32(out, crc_of(out.data(), out.size()));
    return out;
}

ExtractorStack deserialize_stack(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < sizeof kMagic + 4 + 4 ||
        std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw FormatError("not a model artifact (bad magic)");
    }
    const std::size_t body_end = bytes.size() - 4;
    Reader header(bytes, body_end);
    header.text(sizeof kMagic);
    const auto version = static_cast<std::uint32_t>(header.u(4));
    Reader tail(bytes, bytes.size());
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body_end + i]) << (8 * i);
    const bool crc_ok = stored == crc_of(bytes.data(), body_end);
    if (version != kArtifactVersion) {
        throw VersionError("model artifact format version " + std::to_string(version) +
                           " is not supported (expected " + std::to_string(kArtifactVersion) + ")");
    }
    if (!crc_ok) {
        throw ChecksumError("model artifact checksum mismatch (file corrupted)");
    }

    const std::size_t meta_len = header.u(8);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(header.text(meta_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model artifact metadata: ") + e.what());
    }
    const std::uint64_t count = header.u(8);
    if (count > header.remaining() / 8) {
        throw FormatError("model artifact payload is truncated");
    }
    std::vector<double> payload(count);
    for (auto& v : payload) v = std::bit_cast<double>(header.u(8));
    if (header.remaining() != 0) {
        throw FormatError("model artifact has trailing bytes");
    }

    try {
        const ArchitectureConfig arch = ArchitectureConfig::from_json(meta.at("architecture"));
        std::vector<Resolution> schedule;
        for (const auto& r : meta.at("schedule")) schedule.push_back(parse_resolution(r.get<std::string>()));
        ExtractorStack stack = ExtractorStack::create(arch, {}, 0);
        stack.set_schedule(schedule);
        stack.training_config() = meta.value("training_config", nlohmann::json::object());
        std::size_t off = 0;
        for (const auto& mj : meta.at("modules")) {
            LevelModule m;
            m.level = parse_resolution(mj.at("level").get<std::string>());
            m.input_channels = mj.at("input_channels").get<std::size_t>();
            m.input_length = mj.at("input_length").get<std::size_t>();
            m.classes = mj.at("classes").get<std::size_t>();
            m.trained = mj.at("trained").get<bool>();
            auto body = nn::make_layer(mj.at("body"));
            if (body->kind() != nn::LayerKind::Sequential) {
                throw FormatError("model artifact: module body must be a sequential network");
            }
            m.body = std::move(static_cast<nn::Sequential&>(*body));
            m.body.set_name(m.level == Resolution::Transient ? "transient" : std::string(to_string(m.level)));
            const auto& sizes = mj.at("array_sizes");
            auto arrays = arrays_of(m);
            if (sizes.size() != arrays.size()) {
                throw FormatError("model artifact: array count does not match the network");
            }
            for (std::size_t a = 0; a < arrays.size(); ++a) {
                const std::size_t n = sizes[a].get<std::size_t>();
                const bool scaler = a + 2 >= arrays.size();
                if ((!scaler && n != arrays[a]->size()) || off + n > payload.size()) {
                    throw FormatError("model artifact: array size does not match the network");
                }
                arrays[a]->assign(payload.begin() + static_cast<std::ptrdiff_t>(off),
                                  payload.begin() + static_cast<std::ptrdiff_t>(off + n));
                off += n;
            }
            stack.put(std::move(m));
        }
        if (off != payload.size()) {
            throw FormatError("model artifact: unused payload values");
        }
        stack.freeze(meta.at("version").get<std::string>());
        return stack;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model artifact metadata: ") + e.what());
    }
}

void save_stack(const ExtractorStack& stack, const std::string& path) {
    const auto bytes = serialize_stack(stack);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write '" + path + "'");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw FormatError("error while writing '" + path + "'");
    }
}

ExtractorStack load_stack(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open model '" + path + "'");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_stack(bytes);
}

}  // namespace fpd::io
