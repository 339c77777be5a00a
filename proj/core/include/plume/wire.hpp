#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "plume/vehicle.hpp"

namespace plume {

struct CodecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Little-endian uplink frame: u16 agent_id, u32 slot, u8 z, then z records
/// of (f32 x_east, f32 x_north, f32 t, f32 y). 7 + 16z bytes, z <= 10.
struct UplinkMsg {
    std::uint16_t agent_id = 0;
    std::uint32_t slot = 0;
    struct Record {
        float x_east = 0, x_north = 0, t = 0, y = 0;
    };
    std::vector<Record> records;

    static UplinkMsg from_samples(const SampleSet& set);
    SampleSet to_samples() const;
    size_t encoded_size() const { return 7 + 16 * records.size(); }
};

/// Little-endian downlink frame: u16 agent_id, u32 slot, u8 dir_code (0..7),
/// u8 spd_code (0..1). Always 8 bytes.
struct DownlinkMsg {
    std::uint16_t agent_id = 0;
    std::uint32_t slot = 0;
    std::uint8_t dir_code = 0;
    std::uint8_t spd_code = 0;

    static constexpr size_t kSize = 8;
};

std::vector<std::uint8_t> encode_uplink(const UplinkMsg& msg);
UplinkMsg decode_uplink(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_downlink(const DownlinkMsg& msg);
DownlinkMsg decode_downlink(std::span<const std::uint8_t> bytes);

}  // namespace plume
