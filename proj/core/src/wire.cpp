#include "plume/wire.hpp"

#include <cstring>

namespace plume {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(out, u);
}

struct Reader {
    std::span<const std::uint8_t> bytes;
    size_t pos = 0;

    std::uint8_t u8() {
        if (pos + 1 > bytes.size()) throw CodecError("truncated message");
        return bytes[pos++];
    }
    std::uint16_t u16() {
        if (pos + 2 > bytes.size()) throw CodecError("truncated message");
        const std::uint16_t v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        if (pos + 4 > bytes.size()) throw CodecError("truncated message");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() {
        const std::uint32_t u = u32();
        float v;
        std::memcpy(&v, &u, 4);
        return v;
    }
    void finish() const {
        if (pos != bytes.size()) throw CodecError("trailing bytes");
    }
};

}  // namespace

UplinkMsg UplinkMsg::from_samples(const SampleSet& set) {
    UplinkMsg msg;
    msg.agent_id = static_cast<std::uint16_t>(set.agent_id);
    msg.slot = static_cast<std::uint32_t>(set.slot_index);
    msg.records.reserve(set.records.size());
    for (const auto& r : set.records)
        msg.records.push_back({static_cast<float>(r.x.x), static_cast<float>(r.x.y),
                               static_cast<float>(r.t), static_cast<float>(r.y)});
    return msg;
}

SampleSet UplinkMsg::to_samples() const {
    SampleSet set;
    set.agent_id = agent_id;
    set.slot_index = static_cast<int>(slot);
    set.records.reserve(records.size());
    for (const auto& r : records)
        set.records.push_back({{static_cast<double>(r.x_east), static_cast<double>(r.x_north)},
                               static_cast<double>(r.t),
                               static_cast<double>(r.y)});
    return set;
}

std::vector<std::uint8_t> encode_uplink(const UplinkMsg& msg) {
    if (msg.records.empty() || msg.records.size() > 10) throw CodecError("record count outside [1,10]");
    std::vector<std::uint8_t> out;
    out.reserve(msg.encoded_size());
    put_u16(out, msg.agent_id);
    put_u32(out, msg.slot);
    out.push_back(static_cast<std::uint8_t>(msg.records.size()));
    for (const auto& r : msg.records) {
        put_f32(out, r.x_east);
        put_f32(out, r.x_north);
        put_f32(out, r.t);
        put_f32(out, r.y);
    }
    return out;
}

UplinkMsg decode_uplink(std::span<const std::uint8_t> bytes) {
    Reader rd{bytes};
    UplinkMsg msg;
    msg.agent_id = rd.u16();
    msg.slot = rd.u32();
    const auto z = rd.u8();
    if (z == 0 || z > 10) throw CodecError("record count outside [1,10]");
    msg.records.resize(z);
    for (auto& r : msg.records) {
        r.x_east = rd.f32();
        r.x_north = rd.f32();
        r.t = rd.f32();
        r.y = rd.f32();
    }
    rd.finish();
    return msg;
}

std::vector<std::uint8_t> encode_downlink(const DownlinkMsg& msg) {
    if (msg.dir_code > 7) throw CodecError("direction code outside [0,7]");
    if (msg.spd_code > 1) throw CodecError("speed code outside [0,1]");
    std::vector<std::uint8_t> out;
    out.reserve(DownlinkMsg::kSize);
    put_u16(out, msg.agent_id);
    put_u32(out, msg.slot);
    out.push_back(msg.dir_code);
    out.push_back(msg.spd_code);
    return out;
}

DownlinkMsg decode_downlink(std::span<const std::uint8_t> bytes) {
    Reader rd{bytes};
    DownlinkMsg msg;
    msg.agent_id = rd.u16();
    msg.slot = rd.u32();
    msg.dir_code = rd.u8();
    msg.spd_code = rd.u8();
    rd.finish();
    if (msg.dir_code > 7) throw CodecError("direction code outside [0,7]");
    if (msg.spd_code > 1) throw CodecError("speed code outside [0,1]");
    return msg;
}

}  // namespace plume
