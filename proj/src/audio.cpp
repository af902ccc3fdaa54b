#include "aca/audio.hpp"

#include "aca/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

namespace aca {

namespace {

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ostream& out, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

} // namespace

AudioBuffer read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::MissingFile, "cannot open wav file: " + path);

    char tag[4];
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "RIFF", 4) != 0)
        throw Error(ErrorCode::MalformedRiff, "missing RIFF header: " + path);
    read_u32(in); // riff size, unused
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "WAVE", 4) != 0)
        throw Error(ErrorCode::MalformedRiff, "missing WAVE form type: " + path);

    uint16_t format = 0;
    uint16_t channels = 0;
    uint32_t sample_rate = 0;
    uint16_t bits_per_sample = 0;
    bool have_fmt = false;
    std::vector<char> data;
    bool have_data = false;

    while (in) {
        in.read(tag, 4);
        if (!in)
            break;
        uint32_t chunk_size = read_u32(in);
        if (!in)
            throw Error(ErrorCode::MalformedRiff, "truncated chunk header: " + path);

        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (chunk_size < 16)
                throw Error(ErrorCode::MalformedRiff, "fmt chunk too small: " + path);
            format = read_u16(in);
            channels = read_u16(in);
            sample_rate = read_u32(in);
            read_u32(in); // byte rate
            read_u16(in); // block align
            bits_per_sample = read_u16(in);
            in.ignore(chunk_size - 16);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data.resize(chunk_size);
            in.read(data.data(), chunk_size);
            if (static_cast<uint32_t>(in.gcount()) != chunk_size)
                throw Error(ErrorCode::MalformedRiff, "truncated data chunk: " + path);
            have_data = true;
        } else {
            in.ignore(chunk_size);
        }
        if (chunk_size % 2 == 1)
            in.ignore(1); // chunks are word-aligned
    }

    if (!have_fmt)
        throw Error(ErrorCode::MalformedRiff, "no fmt chunk: " + path);
    if (!have_data)
        throw Error(ErrorCode::MalformedRiff, "no data chunk: " + path);
    if (sample_rate == 0)
        throw Error(ErrorCode::MalformedRiff, "sample rate is zero: " + path);
    if (channels != 1 && channels != 2)
        throw Error(ErrorCode::UnsupportedEncoding,
                    "unsupported channel count " + std::to_string(channels) + ": " + path);
    if (format == kFormatExtensible)
        throw Error(ErrorCode::UnsupportedEncoding, "WAVE_FORMAT_EXTENSIBLE not supported: " + path);
    if (format != kFormatPcm && format != kFormatFloat)
        throw Error(ErrorCode::UnsupportedEncoding,
                    "unsupported format code " + std::to_string(format) + ": " + path);
    if (format == kFormatPcm && bits_per_sample != 16)
        throw Error(ErrorCode::UnsupportedEncoding,
                    "unsupported PCM depth " + std::to_string(bits_per_sample) + " bits: " + path);
    if (format == kFormatFloat && bits_per_sample != 32)
        throw Error(ErrorCode::UnsupportedEncoding,
                    "unsupported float depth " + std::to_string(bits_per_sample) + " bits: " + path);

    const std::size_t bytes_per_sample = bits_per_sample / 8;
    const std::size_t frame_count = data.size() / (bytes_per_sample * channels);

    AudioBuffer buffer;
    buffer.sample_rate = static_cast<int>(sample_rate);
    buffer.samples.resize(frame_count);

    if (format == kFormatPcm) {
        const auto* raw = reinterpret_cast<const unsigned char*>(data.data());
        for (std::size_t i = 0; i < frame_count; ++i) {
            double acc = 0.0;
            for (std::size_t c = 0; c < channels; ++c) {
                const std::size_t off = (i * channels + c) * 2;
                const int16_t s = static_cast<int16_t>(raw[off] | (raw[off + 1] << 8));
                acc += static_cast<double>(s) / 32768.0;
            }
            buffer.samples[i] = acc / channels;
        }
    } else {
        for (std::size_t i = 0; i < frame_count; ++i) {
            double acc = 0.0;
            for (std::size_t c = 0; c < channels; ++c) {
                const std::size_t off = (i * channels + c) * 4;
                float s;
                std::memcpy(&s, data.data() + off, 4);
                acc += static_cast<double>(s);
            }
            buffer.samples[i] = acc / channels;
        }
    }
    return buffer;
}

void write_wav(const std::string& path, const AudioBuffer& buffer, int bits) {
    if (bits != 16 && bits != 32)
        throw Error(ErrorCode::InvalidArgument, "write_wav supports 16 or 32 bits");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoFailure, "cannot open for writing: " + path);

    const uint32_t n = static_cast<uint32_t>(buffer.samples.size());
    const uint16_t bytes = static_cast<uint16_t>(bits / 8);
    const uint32_t data_size = n * bytes;

    out.write("RIFF", 4);
    write_u32(out, 36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, bits == 16 ? kFormatPcm : kFormatFloat);
    write_u16(out, 1);
    write_u32(out, static_cast<uint32_t>(buffer.sample_rate));
    write_u32(out, static_cast<uint32_t>(buffer.sample_rate) * bytes);
    write_u16(out, bytes);
    write_u16(out, static_cast<uint16_t>(bits));
    out.write("data", 4);
    write_u32(out, data_size);

    if (bits == 16) {
        for (double x : buffer.samples) {
            const double clipped = std::clamp(x, -1.0, 32767.0 / 32768.0);
            const int16_t q = static_cast<int16_t>(std::lrint(clipped * 32768.0) > 32767
                                                       ? 32767
                                                       : std::lrint(clipped * 32768.0));
            write_u16(out, static_cast<uint16_t>(q));
        }
    } else {
        for (double x : buffer.samples) {
            const float f = static_cast<float>(x);
            uint32_t u;
            std::memcpy(&u, &f, 4);
            write_u32(out, u);
        }
    }
    if (!out)
        throw Error(ErrorCode::IoFailure, "short write: " + path);
}

} // namespace aca
