#pragma once

#include <string>
#include <vector>

namespace aca {

/// Mono audio: a sample sequence in nominal [-1, 1] plus its sample rate.
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate = 44100;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

/// Reads a RIFF/WAVE file with 16-bit PCM or 32-bit IEEE float samples,
/// 1 or 2 channels. Integer samples are scaled by 1/32768; stereo is
/// downmixed by per-sample channel mean. Extra chunks are skipped.
AudioBuffer read_wav(const std::string& path);

/// Writes a mono buffer as 16-bit PCM (bits = 16) or 32-bit float
/// (bits = 32). PCM samples are clipped to [-1, 1) before quantization.
void write_wav(const std::string& path, const AudioBuffer& buffer, int bits = 16);

} // namespace aca
