// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "ecgnet/data/split.hpp"
#include "ecgnet/dsp/butterworth.hpp"
#include "ecgnet/dsp/resample.hpp"
#include "ecgnet/dsp/scale.hpp"
#include "ecgnet/metrics.hpp"
#include "ecgnet/nn/checkpoint.hpp"
#include "ecgnet/nn/model.hpp"
#include "ecgnet/train/schedule.hpp"
#include "ecgnet/train/trainer.hpp"
#include "ecgnet/windowing.hpp"
#include "support/architecture_table.hpp"
#include "support/gradient_scenarios.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace ecgnet;
namespace t = ecgnet::testing;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail.clear();
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) {
    if (pass) detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    v.pass = false;
    v.detail += (v.detail.empty() ? "" : "; ") + fmt("over the %.0f s budget", budget_s);
  }
  failures += !v.pass;
  std::printf("%s  %-22s %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
  std::fflush(stdout);
}

Verdict parameter_counts() {
  Verdict v;
  const std::size_t expect[3] = {1203364, 1203364, 4087972};
  const char* rounded[3] = {"1.2M", "1.2M", "4.1M"};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& col = t::kTable[i];
    const auto params = nn::build_model<double>(nn::ArchitectureConfig::standard(col.window, col.layers, 4), 1);
    const std::size_t n = params.total_count();
    const std::string name = params.config().name();
    v.require(n == expect[i], name + " has " + std::to_string(n));
    v.require(n == t::counting_oracle(col.layers, 4, false), name + " disagrees with the closed form");
    v.require(fmt("%.1fM", std::round(static_cast<double>(n) / 1e5) / 10) == rounded[i], name + " rounding");
    v.note(name + "=" + std::to_string(n));
  }
  return v;
}

Verdict shape_trace() {
  Verdict v;
  Rng rng(5);
  const auto signal = t::rr_pulse_train(30.0, 200.0, false, rng);
  v.require(signal.size() == 6000, "30 s at 200 Hz is not 6000 samples");
  for (const auto& col : t::kTable) {
    const auto config = nn::ArchitectureConfig::standard(col.window, col.layers, 4);
    const auto params = nn::build_model<double>(config, 3);
    const auto windows = extract_windows<double>(signal, col.window);
    const std::size_t n = windows.windows();
    v.require(n == (col.window == 512 ? 22u : 10u), config.name() + ": " + std::to_string(n) + " windows");
    std::vector<nn::LayerShape> trace;
    const auto probs = nn::model_forward(windows, params, nn::Mode::eval, nullptr, &trace);
    bool ok = trace.size() == col.layers + 4 && trace[0].dims == std::vector<std::size_t>{n, col.window, 1};
    for (std::size_t l = 0; ok && l < col.layers; ++l)
      ok = trace[l + 1].dims == std::vector<std::size_t>{n, col.conv_rows[l][0], col.conv_rows[l][1]};
    ok = ok && trace[col.layers + 1].dims == std::vector<std::size_t>{n, col.pooled} &&
         trace[col.layers + 2].dims == std::vector<std::size_t>{128} &&
         trace[col.layers + 3].dims == std::vector<std::size_t>{4} && probs.size() == 4;
    v.require(ok, config.name() + " trace differs from the table");
    v.note(config.name() + ": " + std::to_string(n) + " windows");
  }
  return v;
}

Verdict gradient_checks() {
  Verdict v;
  double worst = 0.0;
  auto take = [&](const t::GradCheck& r, const std::string& what) {
    worst = std::max(worst, r.max_rel_err);
    v.require(r.max_rel_err < 1e-5, what + ": " + r.worst + fmt(" rel err %.2e", r.max_rel_err));
  };
  take(t::conv_block_check(11), "conv block");
  take(t::global_pool_check(12), "global average pool");
  take(t::lstm_check(13, false), "lstm");
  take(t::lstm_check(13, true), "lstm with dropout masks");
  take(t::head_check(14, nn::HeadKind::softmax), "softmax head");
  take(t::head_check(14, nn::HeadKind::logistic), "logistic head");
  take(t::composed_check(3, 21, true, 2), "3-layer model, softmax, dropout");
  take(t::composed_check(2, 31, false, 1), "3-layer model, logistic");
  v.note(fmt("max relative error %.2e", worst));
  return v;
}

Verdict windowing_oracle() {
  Verdict v;
  std::size_t cases = 0;
  for (std::size_t w : {512u, 1024u})
    for (std::size_t m = w; m <= 4 * w; ++m, ++cases) {
      const auto [n, off] = t::window_placement_brute_force(m, w);
      if (window_count(m, w) != n || max_offset(m, w) != off) {
        v.require(false, "M=" + std::to_string(m) + " W=" + std::to_string(w));
        return v;
      }
    }
  v.require(max_offset(6000, 512) == 112, "max offset for 6000/512");
  v.require(max_offset(6000, 1024) == 368, "max offset for 6000/1024");
  v.note(std::to_string(cases) + " lengths; offsets 112 and 368");
  return v;
}

Verdict dsp_checks() {
  Verdict v;
  const double rates[] = {128.0, 250.0, 300.0, 360.0};
  Rng rng(3);
  double min_gain = 1.0, max_dc = 0.0, worst_db = -1e9, worst_amp = 0.0;
  for (double fs : rates) {
    const auto sos = dsp::butter_bandpass(4, 0.5, 40.0, fs);

    std::vector<double> x(1000);
    for (double& s : x) s = rng.normal();
    const std::size_t pad = 24;
    std::vector<double> ext;
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2 * x.back() - x[x.size() - 1 - i]);
    auto fwd = dsp::sosfilt_steady(sos, ext);
    std::reverse(fwd.begin(), fwd.end());
    auto bwd = dsp::sosfilt_steady(sos, fwd);
    std::reverse(bwd.begin(), bwd.end());
    v.require(dsp::bandpass_zero_phase(x, fs) == std::vector<double>(bwd.begin() + pad, bwd.end() - pad),
              fmt("zero-phase composition differs at %g Hz", fs));

    const auto n20 = static_cast<std::size_t>(20 * fs);
    const auto tone = t::sine(n20, 10.0, fs);
    const auto y = dsp::bandpass_zero_phase(tone, fs);
    const auto fit = t::fit_sine(y, 10.0, fs, n20 / 5, n20 - n20 / 5);
    min_gain = std::min(min_gain, fit.amplitude);
    v.require(fit.amplitude >= 0.9 && fit.amplitude <= 1.0, fmt("10 Hz gain %.4f", fit.amplitude));
    v.require(std::abs(fit.phase) < 1e-6 && t::xcorr_peak_lag(tone, y, n20 / 5, n20 - n20 / 5, 20) == 0,
              fmt("10 Hz phase shift at %g Hz", fs));

    const std::vector<double> dc(static_cast<std::size_t>(10 * fs), 3.7);
    double peak = 0.0;
    for (double s : dsp::bandpass_zero_phase(dc, fs)) peak = std::max(peak, std::abs(s));
    max_dc = std::max(max_dc, peak / 3.7);
    v.require(peak < 0.01 * 3.7, fmt("DC residual %.4f", peak / 3.7));

    const auto n200 = static_cast<std::size_t>(200 * fs);
    std::vector<double> stop{0.1};
    if (fs / 2 > 70.0) stop.push_back(70.0); // 70 Hz does not exist below a 140 Hz rate
    for (double f : stop) {
      const auto ys = dsp::bandpass_zero_phase(t::sine(n200, f, fs), fs);
      const double db = 20 * std::log10(t::fit_sine(ys, f, fs, n200 / 4, n200 - n200 / 4).amplitude);
      worst_db = std::max(worst_db, db);
      v.require(db <= -20.0, fmt("%g Hz", f) + fmt(" only %.1f dB down", -db));
    }

    const auto ratio = dsp::rate_ratio(fs, 200.0);
    v.require(dsp::resample(std::vector<double>(static_cast<std::size_t>(30 * fs), 0.0), fs).size() == 6000,
              fmt("30 s at %g Hz does not map to 6000 samples", fs));
    for (std::size_t n = 2; n < 2000; ++n) {
      // round(n * 200 / fs) in integers, halves rounding up
      const auto num = 2 * n * 200 * 1000, den = 2 * static_cast<std::size_t>(fs * 1000);
      const std::size_t want = (num + den / 2) / den;
      if (dsp::resampled_length(n, ratio) != want) {
        v.require(false, fmt("length mapping wrong at %g Hz", fs) + " n=" + std::to_string(n));
        break;
      }
    }
    for (double f : {0.5, 1.0, 5.0, 10.0, 25.0, 40.0}) {
      const auto r = dsp::resample(t::sine(n20, f, fs, 1.3, 0.4), fs);
      const auto rf = t::fit_sine(r, f, 200.0, r.size() / 10, r.size() - r.size() / 10);
      const double err = std::abs(rf.amplitude - 1.3) / 1.3;
      worst_amp = std::max(worst_amp, err);
      v.require(err < 0.02, fmt("resampled %g Hz", f) + fmt(" amplitude error %.4f", err));
    }
  }
  v.note(fmt("10 Hz gain >= %.4f", min_gain) + fmt(", DC residual %.2e", max_dc) +
         fmt(", stop band <= %.1f dB", worst_db) + fmt(", resampled amplitude error <= %.2e", worst_amp));
  return v;
}

Verdict metrics_oracle() {
  Verdict v;
  Rng rng(17);
  std::size_t four_class = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng.uniform_int(2);
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) cm.at(i, j) = rng.uniform_int(trial % 10 == 0 ? 3 : 40);
    if (cm.total() == 0) cm.at(0, 0) = 1;
    std::vector<std::pair<std::size_t, std::size_t>> records;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        for (std::uint64_t c = 0; c < cm.at(i, j); ++c) records.emplace_back(i, j);
    rng.shuffle(records);

    const auto oracle = t::f1_fractions(records, k);
    const auto f1 = f1_per_class(cm);
    for (std::size_t c = 0; c < k; ++c)
      if (f1[c] != t::fraction_value(oracle[c])) v.require(false, "F1 mismatch in matrix " + std::to_string(trial));
    if (k == 4) {
      ++four_class;
      const double s = (t::fraction_value(oracle[0]) + t::fraction_value(oracle[1]) + t::fraction_value(oracle[2])) / 3;
      if (cinc_score(cm) != s) v.require(false, "score mismatch in matrix " + std::to_string(trial));
      ConfusionMatrix changed = cm;
      changed.at(3, 3) = rng.uniform_int(1000);
      if (cinc_score(changed) != cinc_score(cm)) v.require(false, "score depends on the noise cell");
    }
    if (!v.pass) return v;
  }
  v.note("1000 matrices exact, " + std::to_string(four_class) + " four-class score checks");
  return v;
}

Verdict split_properties() {
  Verdict v;
  double worst_size = 0.0, worst_class = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = t::split_manifest(154, seed);
    const auto result = data::stratified_subject_split(m, data::SplitTargets::physionet(), seed);
    v.require(result.assignment == data::stratified_subject_split(m, data::SplitTargets::physionet(), seed).assignment,
              "not deterministic");
    std::map<std::string, std::set<data::Split>> subjects;
    std::array<double, 3> size{};
    std::array<std::array<double, 2>, 3> per_class{};
    std::array<double, 2> overall{};
    for (const auto& r : m.records) {
      const data::Split s = result.assignment.at(r.record_id);
      subjects[r.subject_id].insert(s);
      size[static_cast<std::size_t>(s)] += 1;
      per_class[static_cast<std::size_t>(s)][r.label] += 1;
      overall[r.label] += 1;
    }
    for (const auto& [subject, splits] : subjects) v.require(splits.size() == 1, "subject " + subject + " overlaps");
    const double n = static_cast<double>(m.records.size());
    const double target[3] = {0.6, 0.2, 0.2};
    for (std::size_t s = 0; s < 3; ++s) {
      worst_size = std::max(worst_size, std::abs(size[s] / n - target[s]));
      for (std::size_t c = 0; c < 2; ++c)
        worst_class = std::max(worst_class, std::abs(per_class[s][c] / size[s] - overall[c] / n));
    }
  }
  v.require(worst_size <= 0.03, fmt("split size off by %.4f", worst_size));
  v.require(worst_class <= 0.02, fmt("class share off by %.4f", worst_class));
  v.note(fmt("10 seeds: size deviation <= %.4f", worst_size) + fmt(", class deviation <= %.4f", worst_class));
  return v;
}

Verdict learnability() {
  Verdict v;

  // Hand-walked schedule (patience 5, halving, floor 1e-5):
  //   epochs 1-3 improve; 4-8 do not beat 0.80 (epoch 7 ties it) -> halved
  //   after epoch 8; 9 improves; 10-14 do not -> halved after epoch 14.
  const std::vector<double> losses{1.0, 0.9, 0.8, 0.85, 0.82, 0.81, 0.80, 0.83, 0.79, 0.79, 0.80, 0.81, 0.9, 0.95, 0.5};
  const std::vector<double> expect{5e-4,   5e-4,   5e-4,   5e-4,   5e-4,   5e-4,    5e-4,   2.5e-4,
                                   2.5e-4, 2.5e-4, 2.5e-4, 2.5e-4, 2.5e-4, 1.25e-4, 1.25e-4};
  train::PlateauSchedule schedule;
  std::vector<double> history;
  double lr = 5e-4;
  for (std::size_t e = 0; e < losses.size(); ++e) {
    history.push_back(losses[e]);
    const double next = schedule.update(losses[e]);
    v.require(next == expect[e] && train::lr_plateau_update(history, lr) == expect[e],
              "scripted schedule differs at epoch " + std::to_string(e + 1));
    lr = next;
  }
  train::PlateauSchedule low(1.6e-5);
  for (int e = 0; e < 6; ++e) low.update(1.0);
  v.require(low.learning_rate() == 1e-5, "floor not applied");
  for (int e = 0; e < 5; ++e) low.update(1.0);
  v.require(low.learning_rate() == 1e-5, "rate left the floor");

  // Regular vs irregular beat spacing, 15 s at 200 Hz, scaled by the
  // training mean of standard deviations.
  const auto raw = t::rr_records(200, 15.0, 1, "tr");
  std::vector<std::span<const double>> spans;
  for (const auto& r : raw) spans.emplace_back(r.signal);
  const double scale = dsp::mean_of_stds(spans);
  const auto train_set = t::rr_records(200, 15.0, 1, "tr", scale);
  const auto val_set = t::rr_records(50, 15.0, 2, "va", scale);

  nn::ArchitectureConfig config;
  config.window_size = 512;
  config.conv_layers = 4;
  config.num_classes = 2;
  config.head = nn::HeadKind::logistic;
  config.allow_nonstandard = true;
  config.validate();
  train::TrainOptions options;
  options.epochs = 30;
  options.batch_size = 10;
  options.seed = 7;
  const auto result = train::train<double>(config, train_set, val_set, options);

  const double train_acc = accuracy(train::evaluate(result.best, train_set).confusion);
  v.require(result.log.size() == 30, "did not run 30 epochs");
  v.require(train_acc >= 0.95, fmt("training accuracy %.3f", train_acc));
  v.require(result.best_val_acc >= 0.90, fmt("validation accuracy %.3f", result.best_val_acc));

  // The rates the trainer used follow the schedule replayed on its own losses.
  train::PlateauSchedule replay(options.learning_rate);
  for (const auto& e : result.log) {
    v.require(e.lr == replay.learning_rate(), "logged rate differs from the schedule at epoch " +
                                                  std::to_string(e.epoch));
    replay.update(e.val_loss);
  }
  v.note(fmt("training accuracy %.3f", train_acc) + fmt(", validation accuracy %.3f", result.best_val_acc) +
         " at epoch " + std::to_string(result.best_epoch) + "; scripted plateau schedule exact");
  return v;
}

std::string checkpoint_bytes(const nn::ModelParams<double>& p) {
  std::ostringstream os;
  nn::write_checkpoint(os, p);
  return os.str();
}

Verdict determinism() {
  Verdict v;
  const auto train_set = t::rr_records(30, 15.0, 11, "dtr");
  const auto val_set = t::rr_records(10, 15.0, 12, "dva");
  nn::ArchitectureConfig config;
  config.window_size = 512;
  config.conv_layers = 4;
  config.num_classes = 2;
  config.head = nn::HeadKind::logistic;
  config.allow_nonstandard = true;
  train::TrainOptions options;
  options.epochs = 3;
  options.batch_size = 10;
  options.seed = 2024;
  const auto a = train::train<double>(config, train_set, val_set, options);
  options.threads = 1;
  const auto b = train::train<double>(config, train_set, val_set, options);

  v.require(a.log.size() == b.log.size(), "log lengths differ");
  for (std::size_t i = 0; i < std::min(a.log.size(), b.log.size()); ++i) {
    auto ja = train::epoch_log_json(a.log[i]), jb = train::epoch_log_json(b.log[i]);
    ja.erase("seconds");
    jb.erase("seconds");
    v.require(ja.dump() == jb.dump(), "epoch " + std::to_string(i + 1) + " log differs");
  }
  v.require(checkpoint_bytes(a.best) == checkpoint_bytes(b.best), "best checkpoints differ");
  v.require(checkpoint_bytes(a.last) == checkpoint_bytes(b.last), "final checkpoints differ");
  v.note("3 epochs, all-core vs single-thread runs bit-identical (" +
         std::to_string(checkpoint_bytes(a.last).size()) + "-byte checkpoints)");
  return v;
}

} // namespace

int main() {
  criterion("parameter_counts", 1, parameter_counts);
  criterion("shape_trace", 10, shape_trace);
  criterion("gradient_checks", 120, gradient_checks);
  criterion("windowing_oracle", 30, windowing_oracle);
  criterion("dsp", 30, dsp_checks);
  criterion("metrics", 10, metrics_oracle);
  criterion("split_properties", 10, split_properties);
  criterion("learnability", 600, learnability);
  criterion("determinism", 600, determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
