// Acceptance gate: one PASS/FAIL line per criterion, exit 1 if any fails.
// Every check compares against a reference computed here, independently of
// the code path under test.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ipsim/harness.hpp"
#include "ipsim/io.hpp"
#include "ipsim/noise.hpp"
#include "ipsim/perf_model.hpp"

namespace fs = std::filesystem;
using namespace ipsim;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double draw(std::uint64_t seed, std::uint32_t a, std::uint32_t b = 0, std::uint32_t c = 0) {
    return uniform01({seed, a, b, c, 0, NoiseStream::kSynthetic});
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = 2.0 * draw(seed, 1, r, c) - 1.0;
    }
    return m;
}

// Channel index from the pattern's letters, e.g. "GRBG".
int channel_at(const std::string& pattern, int x, int y) {
    const char ch = pattern[(y % 2) * 2 + (x % 2)];
    return ch == 'R' ? 0 : ch == 'G' ? 1 : 2;
}

// 1. IDEAL signal path against a dense b + W p / N product.
Outcome projection_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    const int sizes[] = {8, 16, 24, 32};
    const int ms[] = {1, 16, 100, 400, 768};
    RunConfig cfg;
    cfg.fidelity = Fidelity::kIdeal;
    cfg.threads = 1;
    int instances = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 120; ++trial) {
        const int pw = sizes[trial % 4];
        const int ph = sizes[(trial / 4) % 4];
        const int m = ms[trial % 5];
        const std::uint64_t seed = 1000 + trial;
        AnalogPixelArray arr(pw, ph, 1.0);
        for (std::size_t i = 0; i < arr.voltages.size(); ++i) arr.voltages[i] = draw(seed, 2, static_cast<std::uint32_t>(i));
        const Matrix w = random_matrix(m, static_cast<std::size_t>(pw) * ph, seed);
        std::vector<double> bias(m);
        for (int v = 0; v < m; ++v) bias[v] = draw(seed, 3, v) - 0.5;
        const auto bank = WeightBank::from_raw(w, bias);
        cfg.tiling.patch_w = pw;
        cfg.tiling.patch_h = ph;
        const auto tiling = build_tiling(pw, ph, pw, ph);
        const auto out = simulate_frame(arr, tiling, bank, SelectionMask::all(1, true), cfg, 0);

        double err = 0.0, ref = 0.0;
        for (int v = 0; v < m; ++v) {
            long double acc = 0.0L;
            for (std::size_t i = 0; i < w.cols; ++i) acc += static_cast<long double>(w(v, i)) * arr.voltages[i];
            const double want = static_cast<double>(bias[v] + acc / static_cast<long double>(w.cols));
            err = std::max(err, std::abs(out.entries[0].features[v] - want));
            ref = std::max(ref, std::abs(want));
        }
        worst = std::max(worst, err / ref);
        ++instances;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst <= 1e-12 && secs < 10.0,
            fmt("%d instances up to 32x32, M<=768: max rel err %.2e (tol 1e-12), %.2f s (limit 10 s)", instances, worst, secs)};
}

// 2. Charge sharing of 768 charged and 768 empty caps.
Outcome charge_share_benchmark() {
    HardwareProfile p;
    std::vector<CapCharge> caps(1536);
    for (std::size_t i = 0; i < 768; ++i) caps[i].voltage = 1.0;
    const double opamp = charge_share_sum(caps, {SumVariant::kOpamp, 0.0}, p);
    const double passive = charge_share_sum(caps, {SumVariant::kPassive, 10e-6}, p);
    const bool ok = std::abs(opamp - 0.5) <= 0.5 * 1e-12 && std::abs(passive - 0.45) <= 1e-6;
    return {ok, fmt("opamp %.15f V (want 0.5, 1e-12); passive @10 us, tau %.2f us: %.9f V (want 0.45 +- 1e-6)",
                    opamp, p.tau_leak * 1e6, passive)};
}

// 3. ANALOG defaults vs the exact reference over random 8x8 patches.
Outcome analog_enob() {
    RunConfig cfg;
    cfg.tiling.patch_w = cfg.tiling.patch_h = 8;
    cfg.hardware.noise_seed = 31;
    cfg.threads = 0;
    const Matrix w = random_matrix(8, 64, 32);
    std::vector<double> bias(8);
    for (int v = 0; v < 8; ++v) bias[v] = 0.2 * draw(33, 0, v) - 0.1;
    const auto bank = WeightBank::from_raw(w, bias);
    double sq = 0.0, max_err = 0.0;
    std::size_t n = 0, patches = 0;
    for (std::uint32_t frame = 0; frame < 2; ++frame) {
        RgbImage img(256, 256);
        for (int y = 0; y < 256; ++y) {
            for (int x = 0; x < 256; ++x) {
                for (int c = 0; c < 3; ++c) img.at(x, y, c) = draw(34 + frame, c, y, x);
            }
        }
        const auto pixels = sense_frame(img, cfg, frame);
        const auto tiling = tiling_for(pixels, cfg);
        const auto mask = SelectionMask::all(tiling.patch_count(), true);
        const auto sim = simulate_frame(pixels, tiling, bank, mask, cfg, frame);
        // Reference from the mosaicked intensities, bypassing the sensor model.
        const auto bayer = mosaic_bayer(img, cfg.pattern);
        for (const auto& e : sim.entries) {
            const auto& r = tiling.patch(e.patch);
            for (std::size_t v = 0; v < 8; ++v) {
                double acc = 0.0;
                std::size_t i = 0;
                for (int y = r.y; y < r.y + 8; ++y) {
                    for (int x = r.x; x < r.x + 8; ++x) acc += w(v, i++) * bayer.at(x, y);
                }
                const double d = e.features[v] - (bias[v] + acc / 64.0);
                sq += d * d;
                max_err = std::max(max_err, std::abs(d));
                ++n;
            }
            ++patches;
        }
    }
    const double rms = std::sqrt(sq / static_cast<double>(n));
    const double full_scale = 2.0;  // features span [-1, 1] for |W| <= 1
    const double enob = std::log2(full_scale / (rms * std::sqrt(12.0)));
    return {patches >= 1000 && enob >= 6.0,
            fmt("%zu patches x 8 vectors, 8-bit PWM/DAC/ADC, 6-bit noise: rms %.3e, max %.3e, ENOB %.2f (want >= 6)",
                patches, rms, max_err, enob)};
}

// 4. Antialias response measured on a filtered cosine at the design frequency.
Outcome antialias_response() {
    std::string detail;
    bool ok = true;
    for (double cutoff : {0.25, 0.5}) {
        const double f = cutoff / 2.0;  // cycles/pixel; cutoff is a fraction of Nyquist
        RgbImage img(128, 8);
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 128; ++x) {
                for (int c = 0; c < 3; ++c) img.at(x, y, c) = 0.5 + 0.4 * std::cos(2 * std::numbers::pi * f * x);
            }
        }
        const RgbImage out = gaussian_antialias(img, cutoff);
        // Amplitude by projection onto cos/sin over whole periods in the interior.
        double ci = 0.0, si = 0.0, co = 0.0, so = 0.0;
        for (int x = 32; x < 96; ++x) {
            const double c = std::cos(2 * std::numbers::pi * f * x), s = std::sin(2 * std::numbers::pi * f * x);
            ci += (img.at(x, 4, 0) - 0.5) * c;
            si += (img.at(x, 4, 0) - 0.5) * s;
            co += (out.at(x, 4, 0) - 0.5) * c;
            so += (out.at(x, 4, 0) - 0.5) * s;
        }
        const double gain = std::hypot(co, so) / std::hypot(ci, si);
        ok = ok && std::abs(gain - 0.707) <= 0.01;
        detail += fmt("%scutoff %.2f: |H| %.4f", detail.empty() ? "" : ", ", cutoff, gain);
    }
    return {ok, detail + " (want 0.707 +- 0.01)"};
}

// 5. Bayer reduction of an RGB projection.
Outcome bayer_reduction() {
    const char* patterns[] = {"RGGB", "BGGR", "GRBG", "GBRG"};
    const int sizes[] = {8, 16, 24, 32};
    double worst = 0.0;
    int pairs = 0;
    for (int trial = 0; trial < 120; ++trial) {
        const std::string pat = patterns[trial % 4];
        const int pw = sizes[trial % 4], ph = sizes[(trial / 4) % 4];
        const int m = 1 + trial % 9;
        const std::uint64_t seed = 5000 + trial;
        const Matrix a = random_matrix(m, static_cast<std::size_t>(pw) * ph * 3, seed);
        RgbImage x(pw, ph);
        for (int yy = 0; yy < ph; ++yy) {
            for (int xx = 0; xx < pw; ++xx) {
                for (int c = 0; c < 3; ++c) x.at(xx, yy, c) = draw(seed, 4, yy * pw + xx, c);
            }
        }
        const Matrix ap = strike_columns(a, pw, ph, parse_bayer_pattern(pat));
        const BayerFrame mos = mosaic_bayer(x, parse_bayer_pattern(pat));
        double err = 0.0, ref = 0.0;
        for (int v = 0; v < m; ++v) {
            double lhs = 0.0, rhs = 0.0;
            for (int yy = 0; yy < ph; ++yy) {
                for (int xx = 0; xx < pw; ++xx) {
                    const std::size_t p = static_cast<std::size_t>(yy) * pw + xx;
                    lhs += ap(v, p) * mos.at(xx, yy);
                    const int keep = channel_at(pat, xx, yy);
                    for (int c = 0; c < 3; ++c) rhs += a(v, p * 3 + c) * (c == keep ? x.at(xx, yy, c) : 0.0);
                }
            }
            err = std::max(err, std::abs(lhs - rhs));
            ref = std::max(ref, std::abs(rhs));
        }
        worst = std::max(worst, err / ref);
        ++pairs;
    }
    return {worst <= 1e-12, fmt("%d (A, x) pairs, 4 patterns: max rel err %.2e (tol 1e-12)", pairs, worst)};
}

// 6. Frame rate and pixel throughput.
Outcome throughput_point() {
    const TimingConfig hd;
    const auto r = throughput(hd);
    TimingConfig small = hd;
    small.patch_w = small.patch_h = 8;
    small.M = 192;
    const double small_hz = throughput(small).frame_rate_hz;
    bool exact = true;
    for (int c : {1, 2, 4}) {
        TimingConfig a = hd, b = hd;
        a.C = c;
        b.C = 2 * c;
        const double expect = static_cast<double>(hd.M) * (hd.patch_h / c) * (hd.t_dac + hd.t_pwm);
        exact = exact && timing_breakdown(a).compute_s / timing_breakdown(b).compute_s == 2.0 &&
                std::abs(timing_breakdown(a).compute_s - expect) <= 1e-15 * expect;
    }
    const bool ok = r.frame_rate_hz >= 90.0 && r.mpix_per_s >= 100.0 && small_hz > 30.0 && exact;
    return {ok, fmt("1080p/C=2/M=400/32x32: %.2f Hz (>= 90), %.1f Mpix/s (>= 100); 8x8/M=192: %.1f Hz (> 30); "
                    "C 1->2->4->8 compute ratio exactly 2: %s",
                    r.frame_rate_hz, r.mpix_per_s, small_hz, exact ? "yes" : "no")};
}

// 7. Power budget at 30 Hz.
Outcome power_point() {
    const TimingConfig t;
    const PowerConfig p;
    const auto pw = power_estimate(t, p);
    const double mpix = t.sensor_w * static_cast<double>(t.sensor_h) / 1e6;
    const bool adc_largest = pw.adc_mw > pw.dac_mw && pw.adc_mw > pw.analog_mw && pw.adc_mw > pw.opamp_mw &&
                             pw.adc_mw > pw.misc_mw;
    const bool ok = pw.frame_rate_hz == 30.0 && pw.total_mw <= 60.0 && adc_largest && pw.total_mw / mpix <= 30.0;
    return {ok, fmt("%.2f Mpix @ %.0f Hz, 25%% active: total %.2f mW (<= 60), ADC %.2f mW largest: %s, "
                    "%.2f mW/Mpix (<= 30) [calibration consistency]",
                    mpix, pw.frame_rate_hz, pw.total_mw, pw.adc_mw, adc_largest ? "yes" : "no", pw.total_mw / mpix)};
}

// 8. Per-pixel area budget.
Outcome area_point() {
    const auto a = area_estimate(default_area_table());
    const double want[] = {0.13, 0.40, 0.42, 0.03, 0.02};
    bool occ = a.occupancy.size() == 5;
    std::string occ_text;
    for (std::size_t i = 0; occ && i < 5; ++i) {
        occ = occ && std::abs(a.occupancy[i] - want[i]) <= 0.01;
        occ_text += fmt("%s%.1f", i ? "/" : "", a.occupancy[i] * 100);
    }
    const bool ok = a.total_um2 == 485.0 && std::abs(a.pitch_um - 22.0) <= 0.1 && occ;
    return {ok, fmt("total %.1f um2 (485), pitch %.3f um (22.0 +- 0.1), occupancy %s %% (13/40/42/3/2 +- 1)",
                    a.total_um2, a.pitch_um, occ_text.c_str())};
}

// 9. Output data reduction.
Outcome data_reduction_point() {
    const auto r = data_reduction(32, 32, 400, 0.25);
    const bool ok = std::abs(r.vs_bayer - 10.24) <= 1e-12 && std::abs(r.vs_rgb - 30.72) <= 1e-12;
    return {ok, fmt("32x32, M=400, 25%%: %.4fx vs Bayer (10.24), %.4fx vs RGB (30.72)", r.vs_bayer, r.vs_rgb)};
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 10. Feature files under different thread counts.
Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / ("ipsim_accept_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ostringstream sink;
    auto run = [&](std::vector<std::string> args) { return run_cli(args, sink, sink); };
    const std::string img = (dir / "in.ppm").string(), bank = (dir / "w.ipwb").string();
    bool ok = run({"gen", "--pattern", "noise", "--seed", "7", "--width", "320", "--height", "256", "--out", img}) == 0 &&
              run({"gen", "--pattern", "weights", "--width", "32", "--height", "32", "--rows", "24", "--seed", "8", "--out", bank}) == 0;
    const unsigned many = std::max(4u, std::thread::hardware_concurrency());
    std::vector<std::string> files;
    for (unsigned threads : {1u, many, 1u}) {
        ::setenv("IPSIM_THREADS", std::to_string(threads).c_str(), 1);
        const std::string out = (dir / ("t" + std::to_string(files.size()) + ".ipff")).string();
        ok = ok && run({"simulate", "--input", img, "--weights", bank, "--seed", "42", "--out", out}) == 0;
        files.push_back(read_bytes(out));
    }
    ::unsetenv("IPSIM_THREADS");
    fs::remove_all(dir);
    const bool same = files.size() == 3 && !files[0].empty() && files[0] == files[1] && files[0] == files[2];
    if (!ok) return {false, "simulation failed: " + sink.str()};
    return {same, fmt("ANALOG with noise, 1 vs %u vs 1 threads: %zu-byte feature files %s", many, files[0].size(),
                      same ? "identical" : "DIFFER")};
}

// 11. Four connected 8x8 patches vs one 16x16 patch.
Outcome patch_combination() {
    HardwareProfile prof;
    double worst = 0.0;
    int trials = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t seed = 9000 + trial;
        std::vector<double> pix(256);
        for (std::uint32_t i = 0; i < 256; ++i) pix[i] = draw(seed, 5, i);
        const Matrix w16 = random_matrix(1 + trial % 12, 256, seed);
        const auto big = project_patch_swing(pix, WeightBank::from_raw(w16, std::vector<double>(w16.rows, 0.0)), prof,
                                             Fidelity::kIdeal);
        // Quadrants in row-major order, each with its own pixel run and weights.
        std::vector<std::vector<double>> segs;
        Matrix joined(w16.rows, 256);
        std::size_t col = 0;
        for (int qy = 0; qy < 2; ++qy) {
            for (int qx = 0; qx < 2; ++qx) {
                std::vector<double> s;
                for (int y = qy * 8; y < qy * 8 + 8; ++y) {
                    for (int x = qx * 8; x < qx * 8 + 8; ++x, ++col) {
                        s.push_back(pix[y * 16 + x]);
                        for (std::size_t v = 0; v < w16.rows; ++v) joined(v, col) = w16(v, y * 16 + x);
                    }
                }
                segs.push_back(std::move(s));
            }
        }
        const std::vector<std::span<const double>> spans(segs.begin(), segs.end());
        const auto small = project_connected_swing(
            spans, WeightBank::from_raw(joined, std::vector<double>(w16.rows, 0.0)), prof, Fidelity::kIdeal);
        double err = 0.0, ref = 0.0;
        for (std::size_t v = 0; v < w16.rows; ++v) {
            err = std::max(err, std::abs(small[v] - big[v]));
            ref = std::max(ref, std::abs(big[v]));
        }
        worst = std::max(worst, err / ref);
        ++trials;
    }
    return {worst <= 1e-12, fmt("%d random 16x16 patches: max rel err %.2e (tol 1e-12)", trials, worst)};
}

// 12. Power-of-two quantizer sweep.
Outcome qth_sweep() {
    const int n = 1000000;
    const double bound = std::numbers::sqrt2 - 1.0;
    double worst = 0.0;
    long bad = qth_quantize(0.0) == 0.0 ? 0 : 1;
    for (int i = 0; i < n; ++i) {
        // 10^-30 .. 10^30, alternating sign.
        const double mag = std::pow(10.0, -30.0 + 60.0 * i / (n - 1));
        const double w = i % 2 ? -mag : mag;
        const double q = qth_quantize(w);
        int e = 0;
        const bool pow2 = std::frexp(std::abs(q), &e) == 0.5;
        const bool sign = std::signbit(q) == std::signbit(w);
        const double rel = std::abs(q - w) / std::abs(w);
        worst = std::max(worst, rel);
        // The bound is evaluated in floating point; allow its last-bit rounding.
        if (!pow2 || !sign || rel > bound * (1 + 4e-16)) ++bad;
    }
    return {bad == 0, fmt("%d log-spaced inputs over 1e-30..1e30 plus 0: %ld violations, max rel err %.15f (<= %.15f)",
                          n, bad, worst, bound)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"projection equivalence", projection_equivalence},
        {"charge-share benchmark", charge_share_benchmark},
        {"analog fidelity", analog_enob},
        {"antialias filter", antialias_response},
        {"RGB to Bayer weights", bayer_reduction},
        {"throughput point", throughput_point},
        {"power point", power_point},
        {"area", area_point},
        {"data reduction", data_reduction_point},
        {"determinism", determinism},
        {"patch combination", patch_combination},
        {"power-of-two quantizer", qth_sweep},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
