#include "aca/app.hpp"

#include "aca/audio.hpp"
#include "aca/classify.hpp"
#include "aca/error.hpp"
#include "aca/features.hpp"
#include "aca/fingerprint.hpp"
#include "aca/nmf.hpp"
#include "aca/rhythm.hpp"
#include "aca/signal.hpp"
#include "aca/structure.hpp"
#include "aca/tonal.hpp"
#include "aca/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <glob.h>
#include <map>
#include <ostream>
#include <thread>

namespace aca::app {

using nlohmann::json;

namespace {

const std::vector<std::string> kAnalysisCommands = {
    "features", "chroma", "key",   "f0",    "nmf",
    "novelty",  "onsets", "tempo", "beats", "structure"};

struct Options {
    std::size_t block = 0; // 0 = per-analysis default
    std::size_t hop = 0;
    std::string window;
    std::string profile = "krumhansl";
    std::string distance = "correlation";
    std::string method;
    std::string source = "envelope";
    double bpm_min = 60.0;
    double bpm_max = 180.0;
    std::uint64_t seed = 0;
    std::size_t rank = 8;
    std::size_t iterations = 100;
    std::string format = "json";
    double threshold = -1.0; // context-dependent default
    double min_distance = 0.05;
    double fmin = 0.0;
    double fmax = 0.0;
    std::size_t kernel_half_size = 16;
    std::string ssm_csv;
    std::size_t ssm_downsample = 1;
    double min_lag = 1.0;
    std::string db;
    std::string out;
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

BlockSpec resolve_spec(const std::string& analysis, const Options& opt) {
    BlockSpec spec;
    if (analysis == "novelty" || analysis == "onsets" || analysis == "tempo" ||
        analysis == "beats")
        spec = rhythm_block_spec();
    else
        spec = tonal_block_spec();
    // the time-domain f0 path reads raw periodicity; its blocks stay unwindowed
    if (analysis == "f0" && (opt.method.empty() || opt.method == "acf"))
        spec.window = Window::rectangular;
    if (opt.block != 0)
        spec.block_size = opt.block;
    if (opt.hop != 0)
        spec.hop_size = opt.hop;
    if (!opt.window.empty())
        spec.window = window_from_name(opt.window);
    spec.validate();
    return spec;
}

json spec_to_json(const BlockSpec& spec) {
    return json{{"block", spec.block_size},
                {"hop", spec.hop_size},
                {"window", window_name(spec.window)}};
}

NoveltyCurve make_novelty(const AudioBuffer& buffer, const BlockSpec& spec,
                          const Options& opt) {
    return novelty(buffer, spec, novelty_source_from_name(opt.source));
}

TempoEstimate make_tempo(const std::string& method, const NoveltyCurve& curve,
                         const Options& opt) {
    const TempoRange range{opt.bpm_min, opt.bpm_max};
    if (method == "acf" || method.empty())
        return tempo_acf(curve, range);
    if (method == "comb")
        return tempo_comb(curve, default_bpm_grid(range));
    if (method == "ioi") {
        const double ratio = opt.threshold >= 0.0 ? opt.threshold : 0.1;
        return tempo_ioi(pick_onsets(curve, ratio, opt.min_distance), range);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown tempo method: " + method);
}

struct AnalysisOutput {
    json config;
    json result;
    std::string csv; // empty unless the analysis has a time-series payload
    bool seeded = false;
};

std::string matrix_csv(const Matrix& m) {
    std::string out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j > 0)
                out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

std::string series_csv(const std::vector<std::string>& header,
                       const std::vector<double>& times, const Matrix& values) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i > 0)
            out += ',';
        out += header[i];
    }
    out += '\n';
    for (std::size_t t = 0; t < values.rows(); ++t) {
        out += format_double(times[t]);
        for (std::size_t j = 0; j < values.cols(); ++j) {
            out += ',';
            out += format_double(values(t, j));
        }
        out += '\n';
    }
    return out;
}

AnalysisOutput analyze_features(const AudioBuffer& buffer, const BlockSpec& spec) {
    const Spectrogram sg = stft_magnitude(buffer, spec);
    std::vector<FeatureSeries> series;
    series.push_back(spectral_centroid(sg));
    series.push_back(rms(buffer, spec));
    series.push_back(envelope_peak(buffer, spec));
    series.push_back(mfcc(sg));
    const AggregatedFeatures agg = aggregate(series);

    AnalysisOutput out;
    out.result = {{"aggregated", {{"names", agg.names}, {"values", agg.vector}}},
                  {"num_frames", sg.num_frames()}};

    std::vector<std::string> header = {"time"};
    std::size_t total_dims = 0;
    for (const FeatureSeries& s : series) {
        total_dims += s.dim();
        for (std::size_t d = 0; d < s.dim(); ++d)
            header.push_back(s.dim() > 1 ? s.name + "." + std::to_string(d) : s.name);
    }
    Matrix combined(sg.num_frames(), total_dims);
    std::size_t col = 0;
    for (const FeatureSeries& s : series) {
        for (std::size_t d = 0; d < s.dim(); ++d, ++col)
            for (std::size_t t = 0; t < s.num_frames(); ++t)
                combined(t, col) = s.values(t, d);
    }
    out.csv = series_csv(header, series[0].frame_times, combined);
    return out;
}

AnalysisOutput analyze_chroma(const AudioBuffer& buffer, const BlockSpec& spec) {
    const ChromaSequence seq = pitch_chroma(stft_magnitude(buffer, spec));
    AnalysisOutput out;
    json frames = json::array();
    Matrix values(seq.frames.size(), 12);
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        frames.push_back(seq.frames[t]);
        for (std::size_t c = 0; c < 12; ++c)
            values(t, c) = seq.frames[t][c];
    }
    out.result = {{"times", seq.frame_times}, {"frames", frames}};
    out.csv = series_csv({"time", "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#",
                          "B"},
                         seq.frame_times, values);
    return out;
}

AnalysisOutput analyze_key(const AudioBuffer& buffer, const BlockSpec& spec,
                           const Options& opt) {
    const ChromaSequence seq = pitch_chroma(stft_magnitude(buffer, spec));
    const KeyProfile& profile = key_profile(key_profile_from_name(opt.profile));
    if (opt.distance != "correlation" && opt.distance != "euclidean")
        throw Error(ErrorCode::InvalidArgument, "unknown key distance: " + opt.distance);
    const KeyDistance distance = opt.distance == "euclidean" ? KeyDistance::euclidean
                                                             : KeyDistance::correlation;
    const KeyEstimate est = detect_key(average_chroma(seq), profile, distance);

    AnalysisOutput out;
    out.config = {{"profile", opt.profile}, {"distance", opt.distance}};
    json ranking = json::array();
    for (const KeyCandidate& c : est.ranking)
        ranking.push_back({{"key", key_name(c.tonic, c.mode)},
                           {"tonic", c.tonic},
                           {"mode", key_mode_name(c.mode)},
                           {"score", c.score}});
    out.result = {{"key", key_name(est.tonic, est.mode)},
                  {"tonic", est.tonic},
                  {"mode", key_mode_name(est.mode)},
                  {"score", est.score},
                  {"ranking", ranking}};
    return out;
}

AnalysisOutput analyze_f0(const AudioBuffer& buffer, const BlockSpec& spec,
                          const Options& opt) {
    F0Track track;
    AnalysisOutput out;
    const std::string method = opt.method.empty() ? "acf" : opt.method;
    if (method == "acf") {
        AcfF0Params params;
        if (opt.fmin > 0.0)
            params.fmin = opt.fmin;
        if (opt.fmax > 0.0)
            params.fmax = opt.fmax;
        track = acf_f0(buffer, spec, params);
        out.config = {{"method", "acf"}, {"fmin", params.fmin}, {"fmax", params.fmax}};
    } else if (method == "hps") {
        HpsParams params;
        params.fmin = opt.fmin > 0.0 ? opt.fmin : 50.0;
        params.fmax = opt.fmax > 0.0 ? opt.fmax : 2000.0;
        track = hps_f0(stft_magnitude(buffer, spec), params);
        out.config = {{"method", "hps"},
                      {"order", params.order},
                      {"fmin", params.fmin},
                      {"fmax", params.fmax}};
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown f0 method: " + method);
    }

    out.result = {{"times", track.frame_times}, {"frequencies", track.frequencies}};
    Matrix values(track.frequencies.size(), 1);
    for (std::size_t t = 0; t < track.frequencies.size(); ++t)
        values(t, 0) = track.frequencies[t];
    out.csv = series_csv({"time", "f0"}, track.frame_times, values);
    return out;
}

AnalysisOutput analyze_nmf(const AudioBuffer& buffer, const BlockSpec& spec,
                           const Options& opt) {
    const Spectrogram sg = stft_magnitude(buffer, spec);
    Matrix v(sg.num_bins(), sg.num_frames());
    for (std::size_t t = 0; t < sg.num_frames(); ++t)
        for (std::size_t k = 0; k < sg.num_bins(); ++k)
            v(k, t) = sg.magnitudes(t, k);

    const NmfResult result = nmf(v, opt.rank, opt.iterations, opt.seed);

    AnalysisOutput out;
    out.seeded = true;
    out.config = {{"rank", opt.rank}, {"iterations", opt.iterations}};
    out.result = {{"rank", opt.rank},
                  {"iterations", opt.iterations},
                  {"final_loss", result.loss_history.back()},
                  {"loss_history", result.loss_history}};

    if (!opt.out.empty()) {
        std::ofstream w(opt.out + ".W.csv");
        std::ofstream h(opt.out + ".H.csv");
        if (!w || !h)
            throw Error(ErrorCode::IoFailure, "cannot write factor matrices: " + opt.out);
        w << matrix_csv(result.templates);
        h << matrix_csv(result.activations);
        out.result["templates_csv"] = opt.out + ".W.csv";
        out.result["activations_csv"] = opt.out + ".H.csv";
    }
    return out;
}

AnalysisOutput analyze_novelty(const AudioBuffer& buffer, const BlockSpec& spec,
                               const Options& opt) {
    const NoveltyCurve curve = make_novelty(buffer, spec, opt);
    AnalysisOutput out;
    out.config = {{"source", opt.source}};
    out.result = {{"frame_rate", curve.frame_rate},
                  {"time_offset", curve.time_offset},
                  {"values", curve.values}};
    Matrix values(curve.values.size(), 1);
    std::vector<double> times(curve.values.size());
    for (std::size_t t = 0; t < curve.values.size(); ++t) {
        times[t] = curve.time_of(t);
        values(t, 0) = curve.values[t];
    }
    out.csv = series_csv({"time", "novelty"}, times, values);
    return out;
}

AnalysisOutput analyze_onsets(const AudioBuffer& buffer, const BlockSpec& spec,
                              const Options& opt) {
    const NoveltyCurve curve = make_novelty(buffer, spec, opt);
    const double ratio = opt.threshold >= 0.0 ? opt.threshold : 0.1;
    const OnsetList onsets = pick_onsets(curve, ratio, opt.min_distance);
    AnalysisOutput out;
    out.config = {{"source", opt.source},
                  {"threshold_ratio", ratio},
                  {"min_distance", opt.min_distance}};
    out.result = {{"times", onsets.times}, {"strengths", onsets.strengths}};
    return out;
}

AnalysisOutput analyze_tempo(const AudioBuffer& buffer, const BlockSpec& spec,
                             const Options& opt) {
    const NoveltyCurve curve = make_novelty(buffer, spec, opt);
    const std::string method = opt.method.empty() ? "acf" : opt.method;
    const TempoEstimate est = make_tempo(method, curve, opt);
    AnalysisOutput out;
    out.config = {{"method", method},
                  {"source", opt.source},
                  {"bpm_min", opt.bpm_min},
                  {"bpm_max", opt.bpm_max}};
    json candidates = json::array();
    for (const TempoCandidate& c : est.candidates)
        candidates.push_back({{"bpm", c.bpm}, {"strength", c.strength}});
    out.result = {{"bpm", est.bpm},
                  {"periodicity_strength", est.periodicity_strength},
                  {"candidates", candidates}};
    return out;
}

AnalysisOutput analyze_beats(const AudioBuffer& buffer, const BlockSpec& spec,
                             const Options& opt) {
    const NoveltyCurve curve = make_novelty(buffer, spec, opt);
    const double ratio = opt.threshold >= 0.0 ? opt.threshold : 0.1;
    const OnsetList onsets = pick_onsets(curve, ratio, opt.min_distance);
    const TempoEstimate tempo = make_tempo("acf", curve, opt);
    BeatTrackerParams params;
    params.range = {opt.bpm_min, opt.bpm_max};
    const BeatGrid grid = track_beats(curve, onsets, tempo, params);
    AnalysisOutput out;
    out.config = {{"source", opt.source}, {"bpm_min", opt.bpm_min}, {"bpm_max", opt.bpm_max}};
    out.result = {{"beat_times", grid.beat_times},
                  {"bpm_track", grid.bpm_track},
                  {"tempo_bpm", tempo.bpm}};
    return out;
}

AnalysisOutput analyze_structure(const AudioBuffer& buffer, const BlockSpec& spec,
                                 const Options& opt) {
    const ChromaSequence seq = pitch_chroma(stft_magnitude(buffer, spec));
    const SelfSimilarityMatrix matrix = ssm(seq);
    BoundaryParams bparams;
    bparams.kernel_half_size = opt.kernel_half_size;
    const SegmentBoundaries boundaries = boundary_novelty(matrix, bparams);
    const double rep_threshold = opt.threshold >= 0.0 ? opt.threshold : 0.6;
    const RepetitionReport repetitions = repetition_lags(matrix, opt.min_lag, rep_threshold);

    AnalysisOutput out;
    out.config = {{"kernel_half_size", opt.kernel_half_size},
                  {"min_lag", opt.min_lag},
                  {"threshold", rep_threshold}};
    json lags = json::array();
    for (const RepetitionLag& lag : repetitions.lags)
        lags.push_back({{"lag_seconds", lag.lag_seconds},
                        {"lag_frames", lag.lag_frames},
                        {"support", lag.support}});
    out.result = {{"boundaries", boundaries.times}, {"repetition_lags", lags}};

    if (!opt.ssm_csv.empty()) {
        const std::size_t step = std::max<std::size_t>(1, opt.ssm_downsample);
        const std::size_t n = (matrix.size() + step - 1) / step;
        Matrix down(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                down(i, j) = matrix.values(i * step, j * step);
        std::ofstream f(opt.ssm_csv);
        if (!f)
            throw Error(ErrorCode::IoFailure, "cannot write ssm csv: " + opt.ssm_csv);
        f << matrix_csv(down);
        out.result["ssm_csv"] = opt.ssm_csv;
        out.config["ssm_downsample"] = step;
    }
    return out;
}

AnalysisOutput analyze(const std::string& analysis, const std::string& input,
                       const Options& opt) {
    const BlockSpec spec = resolve_spec(analysis, opt);
    if (opt.format != "json" && opt.format != "csv")
        throw Error(ErrorCode::InvalidArgument, "unknown format: " + opt.format);
    const AudioBuffer buffer = read_wav(input);

    AnalysisOutput out;
    if (analysis == "features")
        out = analyze_features(buffer, spec);
    else if (analysis == "chroma")
        out = analyze_chroma(buffer, spec);
    else if (analysis == "key")
        out = analyze_key(buffer, spec, opt);
    else if (analysis == "f0")
        out = analyze_f0(buffer, spec, opt);
    else if (analysis == "nmf")
        out = analyze_nmf(buffer, spec, opt);
    else if (analysis == "novelty")
        out = analyze_novelty(buffer, spec, opt);
    else if (analysis == "onsets")
        out = analyze_onsets(buffer, spec, opt);
    else if (analysis == "tempo")
        out = analyze_tempo(buffer, spec, opt);
    else if (analysis == "beats")
        out = analyze_beats(buffer, spec, opt);
    else if (analysis == "structure")
        out = analyze_structure(buffer, spec, opt);
    else
        throw Error(ErrorCode::InvalidArgument, "unknown analysis: " + analysis);

    json config = spec_to_json(spec);
    if (out.config.is_object())
        for (auto& [key, value] : out.config.items())
            config[key] = value;
    out.config = std::move(config);
    return out;
}

json envelope(const std::string& analysis, const std::string& input, const json& config,
              double duration_s) {
    json report = {{"schema_version", kReportSchemaVersion},
                   {"tool", "aca"},
                   {"tool_version", kVersion},
                   {"analysis", analysis},
                   {"config", config},
                   {"duration_s", duration_s}};
    if (!input.empty())
        report["input"] = input;
    return report;
}

void emit(std::ostream& out, const std::string& text, const std::string& path) {
    if (path.empty()) {
        out << text;
        if (text.empty() || text.back() != '\n')
            out << '\n';
        return;
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw Error(ErrorCode::IoFailure, "cannot write output file: " + path);
    f << text;
}

json error_json(const Error& e) {
    return json{{"error", {{"code", error_code_name(e.code())}, {"message", e.what()}}}};
}

int exit_code_for(const Error& e) {
    return e.code() == ErrorCode::InvalidArgument ? 2 : 1;
}

// ---- config file (ACA_CONFIG) ------------------------------------------

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::MissingFile, "cannot open config file: " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    const auto strip = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        line = strip(line);
        if (line.empty() || line[0] == '#' || line[0] == '[')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::BadFormat, "config line is not key = value: " + line);
        std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
            value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        if (key.empty() || value.empty())
            throw Error(ErrorCode::BadFormat, "config line is not key = value: " + line);
        entries[key] = value;
    }
    return entries;
}

// flags a config file may preset; command-line flags win
const std::vector<std::string> kConfigKeys = {
    "block",     "hop",          "window",  "profile", "distance", "method",
    "source",    "bpm-min",      "bpm-max", "seed",    "format",   "db",
    "threshold", "min-distance", "fmin",    "fmax",    "rank",     "iterations"};

std::vector<std::string> apply_config_file(std::vector<std::string> args) {
    const char* env = std::getenv("ACA_CONFIG");
    if (env == nullptr || *env == '\0' || args.empty())
        return args;
    const auto entries = load_config_file(env);

    const auto given = [&args](const std::string& key) {
        const std::string flag = "--" + key;
        for (const std::string& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0)
                return true;
        return false;
    };
    for (const std::string& key : kConfigKeys) {
        const auto it = entries.find(key);
        if (it == entries.end() || given(key))
            continue;
        args.push_back("--" + key);
        args.push_back(it->second);
    }
    return args;
}

void add_shared_options(CLI::App* cmd, Options& opt) {
    cmd->add_option("--block", opt.block, "analysis block size (power of two)");
    cmd->add_option("--hop", opt.hop, "hop size in samples");
    cmd->add_option("--window", opt.window, "window: hann|rectangular");
    cmd->add_option("--profile", opt.profile, "key profile: diatonic|krumhansl|temperley");
    cmd->add_option("--distance", opt.distance, "key similarity: correlation|euclidean");
    cmd->add_option("--method", opt.method,
                    "method selector (f0: acf|hps, tempo: acf|comb|ioi)");
    cmd->add_option("--source", opt.source, "novelty source: envelope|rms|spectral_flux");
    cmd->add_option("--bpm-min", opt.bpm_min, "lower tempo bound");
    cmd->add_option("--bpm-max", opt.bpm_max, "upper tempo bound");
    cmd->add_option("--seed", opt.seed, "seed for randomized analyses");
    cmd->add_option("--format", opt.format, "output format: json|csv");
    cmd->add_option("--db", opt.db, "fingerprint database path (fingerprint match)");
    cmd->add_option("--threshold", opt.threshold,
                    "context threshold (onset ratio, repetition support, match BER)");
    cmd->add_option("--min-distance", opt.min_distance, "minimum onset spacing in seconds");
    cmd->add_option("--fmin", opt.fmin, "lower frequency bound (f0 search)");
    cmd->add_option("--fmax", opt.fmax, "upper frequency bound (f0 search)");
    cmd->add_option("--rank", opt.rank, "nmf rank");
    cmd->add_option("--iterations", opt.iterations, "nmf iterations");
    cmd->add_option("--kernel-half-size", opt.kernel_half_size,
                    "checkerboard kernel half size in frames");
    cmd->add_option("--ssm-csv", opt.ssm_csv, "write the self-similarity matrix as CSV");
    cmd->add_option("--ssm-downsample", opt.ssm_downsample, "SSM CSV downsample factor");
    cmd->add_option("--min-lag", opt.min_lag, "minimum repetition lag in seconds");
    cmd->add_option("-o,--output", opt.out, "write the report (or CSV) to this path");
}

int run_single(const std::string& analysis, const std::string& input, const Options& opt,
               std::ostream& out, std::ostream& err) {
    try {
        const auto start = std::chrono::steady_clock::now();
        AnalysisOutput result = analyze(analysis, input, opt);
        const double duration_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        if (opt.format == "csv" && !result.csv.empty()) {
            emit(out, result.csv, opt.out);
            return 0;
        }
        json report = envelope(analysis, input, result.config, duration_s);
        if (result.seeded) {
            report["seed"] = opt.seed;
            report["config"]["seed"] = opt.seed;
        }
        report["result"] = std::move(result.result);
        emit(out, report.dump(2), opt.out);
        return 0;
    } catch (const Error& e) {
        err << error_json(e).dump(2) << '\n';
        return exit_code_for(e);
    }
}

int run_batch(const std::string& pattern, const std::string& analysis, std::size_t parallelism,
              const Options& opt, std::ostream& out, std::ostream& err) {
    if (std::find(kAnalysisCommands.begin(), kAnalysisCommands.end(), analysis) ==
        kAnalysisCommands.end()) {
        err << json{{"error",
                     {{"code", "invalid_argument"},
                      {"message", "batch does not support subcommand: " + analysis}}}}
                   .dump(2)
            << '\n';
        return 2;
    }

    json config;
    try {
        // config validation happens before any audio is read
        config = spec_to_json(resolve_spec(analysis, opt));
    } catch (const Error& e) {
        err << error_json(e).dump(2) << '\n';
        return 2;
    }

    glob_t results{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &results);
    std::vector<std::string> files;
    if (rc == 0)
        for (std::size_t i = 0; i < results.gl_pathc; ++i)
            files.emplace_back(results.gl_pathv[i]);
    ::globfree(&results);
    if (files.empty()) {
        err << json{{"error",
                     {{"code", "not_found"}, {"message", "no files match: " + pattern}}}}
                   .dump(2)
            << '\n';
        return 2;
    }
    std::sort(files.begin(), files.end());

    const auto start = std::chrono::steady_clock::now();
    std::vector<json> entries(files.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> any_failed{false};

    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= files.size())
                return;
            json entry;
            entry["input"] = files[i];
            try {
                AnalysisOutput result = analyze(analysis, files[i], opt);
                entry["result"] = std::move(result.result);
            } catch (const Error& e) {
                entry["error"] = error_json(e)["error"];
                any_failed = true;
            }
            entries[i] = std::move(entry);
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(parallelism, files.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i)
            pool.emplace_back(worker);
        for (std::thread& t : pool)
            t.join();
    }
    const double duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    config["subcommand"] = analysis;
    config["pattern"] = pattern;
    config["parallelism"] = parallelism;

    json report = envelope("batch", "", config, duration_s);
    report["results"] = entries;
    try {
        emit(out, report.dump(2), opt.out);
    } catch (const Error& e) {
        err << error_json(e).dump(2) << '\n';
        return 1;
    }
    return any_failed ? 1 : 0;
}

int run_fingerprint_build(const std::string& dir, const Options& opt, std::ostream& out,
                          std::ostream& err) {
    try {
        const auto start = std::chrono::steady_clock::now();

        std::vector<std::string> files;
        {
            std::error_code ec;
            std::filesystem::directory_iterator it(dir, ec);
            if (ec)
                throw Error(ErrorCode::MissingFile, "cannot open directory: " + dir);
            for (const auto& entry : it)
                if (entry.is_regular_file() && entry.path().extension() == ".wav")
                    files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw Error(ErrorCode::NotFound, "no wav files in: " + dir);

        FingerprintDB db;
        std::size_t total_words = 0;
        for (const std::string& file : files) {
            const Fingerprint fp = extract_fingerprint(read_wav(file));
            total_words += fp.subfingerprints.size();
            db.add(std::filesystem::path(file).stem().string(), file, fp);
        }
        db.save(opt.out);

        const double duration_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json report = envelope("fingerprint.build", dir, {{"db", opt.out}}, duration_s);
        report["result"] = {{"db", opt.out}, {"tracks", db.size()}, {"words", total_words}};
        emit(out, report.dump(2), "");
        return 0;
    } catch (const Error& e) {
        err << error_json(e).dump(2) << '\n';
        return exit_code_for(e);
    }
}

int run_fingerprint_match(const std::string& input, const std::string& db_path,
                          const Options& opt, std::ostream& out, std::ostream& err) {
    try {
        const auto start = std::chrono::steady_clock::now();
        const FingerprintDB db = FingerprintDB::load(db_path);
        const Fingerprint query = extract_fingerprint(read_wav(input));
        const double threshold = opt.threshold >= 0.0 ? opt.threshold : 0.35;
        const auto match = db.identify(query, threshold);

        const double duration_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json report = envelope("fingerprint.match", input,
                               {{"db", db_path}, {"threshold", threshold}}, duration_s);
        if (match)
            report["result"] = {{"match",
                                 {{"id", match->id},
                                  {"metadata", match->metadata},
                                  {"offset_seconds", match->offset_seconds},
                                  {"bit_error_rate", match->bit_error_rate}}}};
        else
            report["result"] = {{"match", nullptr}};
        emit(out, report.dump(2), opt.out);
        return 0;
    } catch (const Error& e) {
        err << error_json(e).dump(2) << '\n';
        return exit_code_for(e);
    }
}

struct ClassifyArgs {
    std::string algo = "knn";
    std::string data_path;
    std::string model_path;
    std::size_t k = 3;
    std::size_t feature_index = 0;
};

int run_classify(const std::string& verb, const ClassifyArgs& cls, const Options& opt,
                 std::ostream& out, std::ostream& err) {
    try {
        const auto start = std::chrono::steady_clock::now();
        json report;

        if (verb == "train") {
            if (opt.out.empty())
                throw Error(ErrorCode::InvalidArgument, "classify train requires -o <model>");
            const LabeledDataset data = read_dataset_csv(cls.data_path);
            json model;
            model["model_version"] = 1;
            model["algo"] = cls.algo;
            model["feature_names"] = data.feature_names;
            double training_accuracy = -1.0;
            if (cls.algo == "knn") {
                const KnnModel m = fit_knn(data, cls.k);
                model["k"] = m.k;
                model["normalizer"] = {{"mean", m.normalizer.mean},
                                       {"std", m.normalizer.std_dev}};
                model["points"] = m.points;
                model["labels"] = m.labels;
            } else if (cls.algo == "threshold") {
                const ThresholdModel m = fit_threshold(data, cls.feature_index);
                model["feature_index"] = m.feature_index;
                model["threshold"] = m.threshold;
                model["label_above"] = m.label_above;
                model["label_below"] = m.label_below;
                model["training_accuracy"] = training_accuracy = m.training_accuracy;
            } else {
                throw Error(ErrorCode::InvalidArgument, "unknown algo: " + cls.algo);
            }
            std::ofstream f(opt.out, std::ios::trunc);
            if (!f)
                throw Error(ErrorCode::IoFailure, "cannot write model: " + opt.out);
            f << model.dump(2) << '\n';

            const double duration_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
            report = envelope("classify.train", cls.data_path,
                              {{"algo", cls.algo}, {"model", opt.out}}, duration_s);
            report["result"] = {{"model", opt.out},
                                {"points", data.points.size()},
                                {"classes", data.labels()}};
            if (training_accuracy >= 0.0)
                report["result"]["training_accuracy"] = training_accuracy;
            emit(out, report.dump(2), "");
            return 0;
        }

        std::ifstream mf(cls.model_path);
        if (!mf)
            throw Error(ErrorCode::MissingFile, "cannot open model: " + cls.model_path);
        json model = json::parse(mf, nullptr, false);
        if (model.is_discarded() || !model.is_object() || model.value("model_version", 0) != 1)
            throw Error(ErrorCode::BadFormat, "not a model file: " + cls.model_path);
        const LabeledDataset data = read_dataset_csv(cls.data_path);

        KnnModel knn;
        ThresholdModel threshold_model;
        const bool is_knn = model.value("algo", "") == "knn";
        if (is_knn) {
            knn.k = model.at("k").get<std::size_t>();
            knn.normalizer.mean = model.at("normalizer").at("mean").get<std::vector<double>>();
            knn.normalizer.std_dev =
                model.at("normalizer").at("std").get<std::vector<double>>();
            knn.points = model.at("points").get<std::vector<std::vector<double>>>();
            knn.labels = model.at("labels").get<std::vector<std::string>>();
        } else {
            threshold_model.feature_index = model.at("feature_index").get<std::size_t>();
            threshold_model.threshold = model.at("threshold").get<double>();
            threshold_model.label_above = model.at("label_above").get<std::string>();
            threshold_model.label_below = model.at("label_below").get<std::string>();
        }
        const auto predictor = [&](const std::vector<double>& v) -> std::string {
            return is_knn ? predict_knn(knn, v).label : threshold_model.predict(v);
        };

        if (verb == "predict") {
            json predictions = json::array();
            for (const DataPoint& p : data.points)
                predictions.push_back({{"source", p.source}, {"label", predictor(p.features)}});
            const double duration_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
            report = envelope("classify.predict", cls.data_path, {{"model", cls.model_path}},
                              duration_s);
            report["result"] = {{"predictions", predictions}};
        } else {
            const EvaluationReport eval_report = evaluate(predictor, data);
            json confusion = json::array();
            for (const auto& row : eval_report.confusion)
                confusion.push_back(row);
            const double duration_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
            report = envelope("classify.eval", cls.data_path, {{"model", cls.model_path}},
                              duration_s);
            report["result"] = {{"accuracy", eval_report.accuracy},
                                {"labels", eval_report.label_order},
                                {"confusion", confusion},
                                {"precision", eval_report.precision},
                                {"recall", eval_report.recall}};
        }
        emit(out, report.dump(2), opt.out);
        return 0;
    } catch (const Error& e) {
        err << error_json(e).dump(2) << '\n';
        return exit_code_for(e);
    } catch (const json::exception& e) {
        err << json{{"error", {{"code", "bad_format"}, {"message", e.what()}}}}.dump(2) << '\n';
        return 1;
    }
}

} // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    try {
        args = apply_config_file(raw_args);
    } catch (const Error& e) {
        err << error_json(e).dump(2) << '\n';
        return 2;
    }

    CLI::App app{"audio content analysis toolkit"};
    app.require_subcommand(1);

    Options opt;
    std::string input;
    std::string pattern;
    std::string batch_subcommand;
    std::string dir;
    std::size_t parallelism = 1;
    ClassifyArgs cls;

    std::map<std::string, CLI::App*> analysis_cmds;
    for (const std::string& name : kAnalysisCommands) {
        CLI::App* cmd = app.add_subcommand(name, name + " analysis of a wav file");
        cmd->add_option("input", input, "input wav file")->required();
        add_shared_options(cmd, opt);
        analysis_cmds[name] = cmd;
    }

    CLI::App* fingerprint = app.add_subcommand("fingerprint", "fingerprint database tools");
    fingerprint->require_subcommand(1);
    CLI::App* fp_build = fingerprint->add_subcommand("build", "fingerprint a directory of wavs");
    fp_build->add_option("dir", dir, "directory of wav files")->required();
    add_shared_options(fp_build, opt);
    CLI::App* fp_match = fingerprint->add_subcommand("match", "identify a wav against a db");
    fp_match->add_option("input", input, "query wav file")->required();
    add_shared_options(fp_match, opt);

    CLI::App* classify = app.add_subcommand("classify", "train and apply classifiers");
    classify->require_subcommand(1);
    CLI::App* cls_train = classify->add_subcommand("train", "fit a model on a dataset csv");
    cls_train->add_option("--data", cls.data_path, "training dataset csv")->required();
    cls_train->add_option("--algo", cls.algo, "classifier: knn|threshold");
    cls_train->add_option("--k", cls.k, "neighbors for knn (odd)");
    cls_train->add_option("--feature-index", cls.feature_index, "feature column for threshold");
    add_shared_options(cls_train, opt);
    CLI::App* cls_predict = classify->add_subcommand("predict", "predict labels for a csv");
    cls_predict->add_option("--model", cls.model_path, "model json")->required();
    cls_predict->add_option("--data", cls.data_path, "dataset csv")->required();
    add_shared_options(cls_predict, opt);
    CLI::App* cls_eval = classify->add_subcommand("eval", "evaluate a model on a labeled csv");
    cls_eval->add_option("--model", cls.model_path, "model json")->required();
    cls_eval->add_option("--data", cls.data_path, "labeled dataset csv")->required();
    add_shared_options(cls_eval, opt);

    CLI::App* batch = app.add_subcommand("batch", "run one analysis over many files");
    batch->add_option("pattern", pattern, "glob pattern of input files")->required();
    batch->add_option("subcommand", batch_subcommand, "analysis to run per file")->required();
    batch->add_option("--parallelism", parallelism, "worker threads");
    add_shared_options(batch, opt);

    std::vector<const char*> argv;
    argv.push_back("aca");
    for (const std::string& a : args)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), const_cast<char**>(argv.data()));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return 2;
    }

    for (const auto& [name, cmd] : analysis_cmds)
        if (cmd->parsed())
            return run_single(name, input, opt, out, err);

    if (fingerprint->parsed()) {
        if (fp_build->parsed()) {
            if (opt.out.empty()) {
                err << json{{"error",
                             {{"code", "invalid_argument"},
                              {"message", "fingerprint build requires -o <db>"}}}}
                           .dump(2)
                    << '\n';
                return 2;
            }
            return run_fingerprint_build(dir, opt, out, err);
        }
        if (opt.db.empty()) {
            err << json{{"error",
                         {{"code", "invalid_argument"},
                          {"message", "fingerprint match requires --db <db>"}}}}
                       .dump(2)
                << '\n';
            return 2;
        }
        return run_fingerprint_match(input, opt.db, opt, out, err);
    }

    if (classify->parsed()) {
        const std::string verb = cls_train->parsed()   ? "train"
                                 : cls_predict->parsed() ? "predict"
                                                         : "eval";
        return run_classify(verb, cls, opt, out, err);
    }

    if (batch->parsed())
        return run_batch(pattern, batch_subcommand, parallelism, opt, out, err);

    err << app.help();
    return 2;
}

} // namespace aca::app
