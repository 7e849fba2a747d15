#include "ipsim/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ipsim/noise.hpp"
#include "ipsim/parallel.hpp"

namespace ipsim {

namespace fs = std::filesystem;
using nlohmann::json;

AnalogPixelArray sense_frame(const RgbImage& img, const RunConfig& cfg, std::uint32_t frame) {
    img.validate();
    const RgbImage filtered = cfg.antialias_cutoff ? gaussian_antialias(img, *cfg.antialias_cutoff) : img;
    return capture(mosaic_bayer(filtered, cfg.pattern), cfg.exposure, cfg.hardware.noise_seed, frame);
}

PatchTiling tiling_for(const AnalogPixelArray& arr, const RunConfig& cfg) {
    return build_tiling(arr.width, arr.height, cfg.tiling.patch_w, cfg.tiling.patch_h, cfg.tiling.origin_x,
                        cfg.tiling.origin_y);
}

DigitalFeatureFrame simulate_frame(const AnalogPixelArray& pixels, const PatchTiling& tiling,
                                   const WeightBank& bank, const SelectionMask& mask,
                                   const RunConfig& cfg, std::uint32_t frame) {
    const auto dumped = charge_dump(pixels, tiling, mask);
    FrameOptions opts;
    opts.fidelity = cfg.fidelity;
    opts.frame = frame;
    opts.vector_offsets = cfg.tiling.vector_offsets;
    opts.threads = resolve_threads(cfg.threads);
    const auto analog = run_frame(dumped, tiling, bank, mask, cfg.hardware, opts);
    ReadoutMode mode = ReadoutMode::kQuantized;
    if (cfg.fidelity == Fidelity::kIdeal) {
        if (cfg.raw_codes) throw std::invalid_argument("raw ADC codes are only defined for analog fidelity");
        mode = ReadoutMode::kIdealAdc;
    } else if (cfg.raw_codes) {
        mode = ReadoutMode::kRawCodes;
    }
    return assemble_features(analog, cfg.adc, bank, cfg.hardware, mode);
}

DigitalFeatureFrame oracle_frame(const AnalogPixelArray& pixels, const PatchTiling& tiling,
                                 const WeightBank& bank, const SelectionMask& mask,
                                 const RunConfig& cfg, std::uint32_t frame) {
    if (mask.size() != tiling.patch_count()) throw std::invalid_argument("selection mask length does not match patch count");
    if (bank.columns() != tiling.pixels_per_patch()) {
        throw std::invalid_argument("weight bank columns do not match patch pixel count");
    }
    validate_vector_offsets(cfg.tiling.vector_offsets, bank.vectors());
    const auto dumped = charge_dump(pixels, tiling, mask);
    const Matrix w = bank.raw_weights();
    const auto n = static_cast<double>(tiling.pixels_per_patch());

    DigitalFeatureFrame out;
    out.frame = frame;
    out.vectors = bank.vectors();
    for (std::size_t p = 0; p < tiling.patch_count(); ++p) {
        if (!mask.selected(p)) continue;
        const PatchRect& r = tiling.patch(p);
        DigitalPatch dp{static_cast<std::uint32_t>(p), std::vector<double>(bank.vectors())};
        std::vector<double> window = extract_patch(dumped, r);
        for (std::size_t v = 0; v < bank.vectors(); ++v) {
            if (!cfg.tiling.vector_offsets.empty()) {
                const auto o = cfg.tiling.vector_offsets[v];
                window = extract_patch(dumped, {r.x + o.dx, r.y + o.dy, r.w, r.h});
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < window.size(); ++i) acc += w(v, i) * window[i];
            dp.features[v] = acc / n + bank.bias(v);
        }
        out.entries.push_back(std::move(dp));
    }
    return out;
}

CompareStats compare_frames(const DigitalFeatureFrame& a, const DigitalFeatureFrame& b, double full_scale) {
    if (a.vectors != b.vectors || a.entries.size() != b.entries.size()) {
        throw std::invalid_argument("feature frames differ in shape (" + std::to_string(a.entries.size()) + "x" +
                                    std::to_string(a.vectors) + " vs " + std::to_string(b.entries.size()) + "x" +
                                    std::to_string(b.vectors) + ")");
    }
    CompareStats s;
    double sum_abs = 0.0, sum_sq = 0.0;
    for (std::size_t e = 0; e < a.entries.size(); ++e) {
        if (a.entries[e].patch != b.entries[e].patch) throw std::invalid_argument("feature frames cover different patches");
        for (std::size_t v = 0; v < a.vectors; ++v) {
            const double d = std::abs(a.entries[e].features[v] - b.entries[e].features[v]);
            s.max_abs = std::max(s.max_abs, d);
            sum_abs += d;
            sum_sq += d * d;
            ++s.count;
        }
    }
    if (s.count > 0) {
        s.mean_abs = sum_abs / static_cast<double>(s.count);
        s.rms = std::sqrt(sum_sq / static_cast<double>(s.count));
    }
    s.enob = s.rms > 0.0 ? std::log2(full_scale / (s.rms * std::sqrt(12.0)))
                         : std::numeric_limits<double>::infinity();
    return s;
}

namespace {

// Maps a failure onto an exit code and a one-line diagnostic.
struct CliFailure {
    int code;
    std::string kind;
    std::string message;
};

bool is_image(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ".pgm" || e == ".ppm" || e == ".png";
}

std::vector<fs::path> sorted_files(const fs::path& dir, bool images_only) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && (!images_only || is_image(entry.path()))) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

struct RunOptions {
    std::string config;
    std::string input;
    std::string weights;
    std::string mask;
    std::string out;
    std::string fidelity;
    std::string format;
    std::int64_t seed = -1;
    bool raw_codes = false;
};

RunConfig effective_config(const RunOptions& o) {
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (!o.fidelity.empty()) cfg.fidelity = parse_fidelity(o.fidelity);
    if (o.seed >= 0) cfg.hardware.noise_seed = static_cast<std::uint64_t>(o.seed);
    if (o.format == "csv") cfg.format = FeatureFormat::kCsv;
    if (o.format == "bin") cfg.format = FeatureFormat::kBinary;
    if (o.raw_codes) cfg.raw_codes = true;
    cfg.validate();
    return cfg;
}

int run_frames(const RunOptions& o, bool oracle, std::ostream& out) {
    const RunConfig cfg = effective_config(o);
    if (!fs::exists(o.input)) throw IoError("no such input: " + o.input);
    const WeightBank bank = read_weight_bank(o.weights);
    bank.check_source(cfg.tiling.patch_w, cfg.tiling.patch_h, cfg.pattern);

    const bool multi = fs::is_directory(o.input);
    const std::vector<fs::path> inputs = multi ? sorted_files(o.input, true) : std::vector<fs::path>{o.input};
    if (inputs.empty()) throw IoError("no images in " + o.input);

    std::vector<fs::path> masks;
    if (!o.mask.empty()) {
        if (!fs::exists(o.mask)) throw IoError("no such mask: " + o.mask);
        masks = fs::is_directory(o.mask) ? sorted_files(o.mask, false) : std::vector<fs::path>{o.mask};
        if (masks.size() != 1 && masks.size() != inputs.size()) {
            throw std::invalid_argument("need one mask file or one per frame (" + std::to_string(inputs.size()) + ")");
        }
    }

    const fs::path out_path(o.out);
    if (multi) fs::create_directories(out_path);
    const std::string ext = cfg.format == FeatureFormat::kCsv ? ".csv" : ".ipff";

    json log_inputs = json::array(), log_outputs = json::array(), log_frames = json::array();
    for (std::size_t f = 0; f < inputs.size(); ++f) {
        const auto frame = static_cast<std::uint32_t>(f);
        const RgbImage img = read_image(inputs[f]);
        const AnalogPixelArray pixels = sense_frame(img, cfg, frame);
        const PatchTiling tiling = tiling_for(pixels, cfg);
        SelectionMask mask;
        if (masks.empty()) {
            mask = select_by_variance(pixels, tiling, cfg.selection_fraction);
        } else {
            mask = read_selection_mask(masks.size() == 1 ? masks[0] : masks[f]);
            if (mask.size() != tiling.patch_count()) {
                throw std::invalid_argument("mask has " + std::to_string(mask.size()) + " entries but the tiling has " +
                                            std::to_string(tiling.patch_count()) + " patches");
            }
        }
        const DigitalFeatureFrame features = oracle ? oracle_frame(pixels, tiling, bank, mask, cfg, frame)
                                                    : simulate_frame(pixels, tiling, bank, mask, cfg, frame);
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05u", frame);
        const fs::path target = multi ? out_path / (std::string(name) + ext) : out_path;
        write_features(target, features, cfg.format);
        log_inputs.push_back(inputs[f].string());
        log_outputs.push_back(target.string());
        log_frames.push_back({{"frame", frame},
                              {"patches", tiling.patch_count()},
                              {"selected", mask.selected_count()},
                              {"features", features.feature_count()}});
        out << target.string() << ": " << features.entries.size() << " patches x " << features.vectors
            << " features\n";
    }

    const json log = {
        {"command", oracle ? "oracle" : "simulate"},
        {"fidelity", oracle ? "oracle" : to_string(cfg.fidelity)},
        {"seed", cfg.hardware.noise_seed},
        {"weights", o.weights},
        {"weight_bank", {{"M", bank.vectors()}, {"columns", bank.columns()}, {"scale", bank.scale()}}},
        {"mask", o.mask.empty() ? json("variance-fallback") : json(o.mask)},
        {"inputs", log_inputs},
        {"outputs", log_outputs},
        {"frames", log_frames},
        {"config", config_to_json(cfg)},
    };
    const fs::path log_path = multi ? out_path / "run.log.json" : fs::path(o.out + ".log.json");
    write_text(log_path, log.dump(2) + "\n");
    return kExitOk;
}

int run_compare(const std::string& a, const std::string& b, double tolerance, double full_scale, std::ostream& out) {
    const auto fa = read_features(a);
    const auto fb = read_features(b);
    const CompareStats s = compare_frames(fa, fb, full_scale);
    out << std::setprecision(9);
    out << "count=" << s.count << '\n'
        << "max_abs_error=" << s.max_abs << '\n'
        << "mean_abs_error=" << s.mean_abs << '\n'
        << "rms_error=" << s.rms << '\n'
        << "enob=" << (std::isinf(s.enob) ? std::string("inf") : std::to_string(s.enob)) << '\n'
        << "tolerance=" << tolerance << '\n'
        << "result=" << (s.max_abs <= tolerance ? "PASS" : "FAIL") << '\n';
    return s.max_abs <= tolerance ? kExitOk : kExitMismatch;
}

int run_report(const std::string& config, const std::string& out_path, std::ostream& out) {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
    cfg.validate();
    const PerfReport report = make_report(cfg.timing, cfg.power, cfg.area);
    const std::string text = report_text(report);
    out << text;
    if (!out_path.empty()) {
        write_text(out_path, report_json(report).dump(2) + "\n");
        fs::path txt(out_path);
        txt.replace_extension(".txt");
        write_text(txt, text);
    }
    return kExitOk;
}

struct GenOptions {
    std::string pattern;
    int width = 64;
    int height = 64;
    std::uint64_t seed = 0;
    std::string out;
    int rows = 4;
    bool rgb = false;
    std::string bayer = "RGGB";
    double fraction = 0.25;
    int count = 0;
};

double synthetic(std::uint64_t seed, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    return uniform01({seed, a, b, c, 0, NoiseStream::kSynthetic});
}

int run_gen(const GenOptions& g, std::ostream& out) {
    std::string kind = g.pattern;
    std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return std::tolower(c); });
    if (kind == "weights") {
        if (g.rows < 1) throw std::invalid_argument("--rows must be >= 1");
        const auto cols = static_cast<std::size_t>(g.width) * g.height;
        std::vector<double> bias(g.rows);
        for (int v = 0; v < g.rows; ++v) bias[v] = 0.2 * synthetic(g.seed, 2, v, 0) - 0.1;
        auto random_matrix = [&](std::size_t c, std::uint32_t tag) {
            Matrix m(g.rows, c);
            for (std::size_t v = 0; v < m.rows; ++v) {
                for (std::size_t i = 0; i < c; ++i) {
                    // Round through f32 so the file stores exactly these values.
                    m(v, i) = static_cast<float>(2.0 * synthetic(g.seed, tag, static_cast<std::uint32_t>(v),
                                                                 static_cast<std::uint32_t>(i)) - 1.0);
                }
            }
            return m;
        };
        for (double& b : bias) b = static_cast<float>(b);
        const WeightBank bank =
            g.rgb ? WeightBank::from_rgb(random_matrix(cols * 3, 1), bias, g.width, g.height, parse_bayer_pattern(g.bayer))
                  : WeightBank::from_raw(random_matrix(cols, 0), bias);
        write_weight_bank(g.out, bank);
        out << g.out << ": weight bank " << bank.vectors() << " x " << bank.columns() << "\n";
        return kExitOk;
    }
    if (kind == "mask") {
        if (g.count < 1) throw std::invalid_argument("--count must be >= 1");
        if (!(g.fraction >= 0.0 && g.fraction <= 1.0)) throw std::invalid_argument("--fraction must lie in [0, 1]");
        std::vector<std::size_t> order(g.count);
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> keys(g.count);
        for (int i = 0; i < g.count; ++i) keys[i] = synthetic(g.seed, 3, i, 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });
        const auto keep = static_cast<std::size_t>(std::llround(g.fraction * g.count));
        std::vector<std::uint8_t> bits(g.count, 0);
        for (std::size_t k = 0; k < keep; ++k) bits[order[k]] = 1;
        write_selection_mask(g.out, SelectionMask(std::move(bits)));
        out << g.out << ": mask " << keep << " of " << g.count << " selected\n";
        return kExitOk;
    }

    if (g.width < 1 || g.height < 1) throw std::invalid_argument("image dimensions must be >= 1");
    RgbImage img(g.width, g.height);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = 0.0;
                if (kind == "gradient") {
                    v = g.width > 1 ? static_cast<double>(x) / (g.width - 1) : 0.0;
                } else if (kind == "checker") {
                    v = (x + y) % 2 == 0 ? 0.0 : 1.0;
                } else if (kind == "noise") {
                    v = synthetic(g.seed, static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(y),
                                  static_cast<std::uint32_t>(x));
                } else {
                    throw std::invalid_argument("unknown pattern '" + g.pattern +
                                                "' (gradient, checker, noise, weights, mask)");
                }
                img.at(x, y, c) = v;
            }
        }
    }
    write_image(g.out, img);
    out << g.out << ": " << kind << " " << g.width << "x" << g.height << "\n";
    return kExitOk;
}

void add_run_options(CLI::App* cmd, RunOptions& o, bool with_fidelity) {
    cmd->add_option("--config", o.config, "JSON run configuration");
    cmd->add_option("--input", o.input, "image file or directory of numbered images")->required();
    cmd->add_option("--weights", o.weights, "weight bank file (.ipwb)")->required();
    cmd->add_option("--mask", o.mask, "selection mask file or directory of per-frame masks");
    cmd->add_option("--out", o.out, "feature file (or directory for multi-frame input)")->required();
    cmd->add_option("--seed", o.seed, "noise seed (overrides hardware.noise_seed)");
    cmd->add_option("--format", o.format, "feature file format")->check(CLI::IsMember({"bin", "csv"}));
    if (with_fidelity) {
        cmd->add_option("--fidelity", o.fidelity, "circuit fidelity")->check(CLI::IsMember({"ideal", "analog"}));
        cmd->add_flag("--raw-codes", o.raw_codes, "emit ADC codes instead of dequantized features");
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"In-pixel switched-capacitor compute simulator", "ipsim"};
    app.require_subcommand(1);

    RunOptions sim_opts, oracle_opts;
    auto* simulate = app.add_subcommand("simulate", "simulate the sensor and in-pixel projection");
    add_run_options(simulate, sim_opts, true);
    auto* oracle = app.add_subcommand("oracle", "reference features in exact arithmetic");
    add_run_options(oracle, oracle_opts, false);

    std::string cmp_a, cmp_b;
    double tolerance = 0.0;
    double full_scale = 2.0;
    auto* compare = app.add_subcommand("compare", "error statistics between two feature files");
    compare->add_option("a", cmp_a, "feature file")->required();
    compare->add_option("b", cmp_b, "reference feature file")->required();
    compare->add_option("--tolerance", tolerance, "pass threshold on max |error|");
    compare->add_option("--full-scale", full_scale, "full-scale range for the ENOB estimate (feature units)");

    std::string report_config, report_out;
    auto* report = app.add_subcommand("report", "throughput / power / area report");
    report->add_option("--config", report_config, "JSON run configuration");
    report->add_option("--out", report_out, "JSON report path (text goes next to it as .txt)");

    GenOptions gen_opts;
    auto* gen = app.add_subcommand("gen", "synthetic images, weight banks and masks");
    gen->add_option("--pattern", gen_opts.pattern, "gradient | checker | noise | weights | mask")->required();
    gen->add_option("--width", gen_opts.width, "image width (weights: patch width)");
    gen->add_option("--height", gen_opts.height, "image height (weights: patch height)");
    gen->add_option("--seed", gen_opts.seed, "generator seed");
    gen->add_option("--out", gen_opts.out, "output path")->required();
    gen->add_option("--rows", gen_opts.rows, "weights: vectors per patch M");
    gen->add_flag("--rgb", gen_opts.rgb, "weights: draw an RGB source matrix and reduce it");
    gen->add_option("--bayer", gen_opts.bayer, "weights: Bayer pattern for --rgb");
    gen->add_option("--fraction", gen_opts.fraction, "mask: selected fraction");
    gen->add_option("--count", gen_opts.count, "mask: patch count");

    std::vector<std::string> argv_store = args;
    argv_store.insert(argv_store.begin(), "ipsim");
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    auto fail = [&](const CliFailure& f) {
        std::string msg = f.message;
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "ipsim: error: " << f.kind << ": " << msg << std::endl;
        return f.code;
    };

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return fail({kExitInput, "usage", e.what()});
    }

    try {
        if (simulate->parsed()) return run_frames(sim_opts, false, out);
        if (oracle->parsed()) return run_frames(oracle_opts, true, out);
        if (compare->parsed()) {
            try {
                return run_compare(cmp_a, cmp_b, tolerance, full_scale, out);
            } catch (const std::invalid_argument& e) {
                return fail({kExitInput, "shape", e.what()});
            }
        }
        if (report->parsed()) return run_report(report_config, report_out, out);
        if (gen->parsed()) return run_gen(gen_opts, out);
    } catch (const IoError& e) {
        return fail({kExitInput, "io", e.what()});
    } catch (const fs::filesystem_error& e) {
        return fail({kExitInput, "io", e.what()});
    } catch (const std::invalid_argument& e) {
        return fail({kExitInvariant, "invariant", e.what()});
    } catch (const std::exception& e) {
        return fail({kExitInvariant, "invariant", e.what()});
    }
    return fail({kExitInput, "usage", "no subcommand"});
}

}  // namespace ipsim
