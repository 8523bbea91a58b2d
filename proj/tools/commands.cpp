#include "commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "prnu/decision.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/image_io.hpp"
#include "prnu/simulator.hpp"

namespace prnu::cli {
namespace fs = std::filesystem;

namespace {

struct AttributeOptions {
  std::string variant = "Inv";
  std::string model = "cubic";
  std::optional<double> threshold;
  std::string numerator = "per-annulus";
  bool no_early_stop = false;
  AttributeConfig cfg;
};

void add_attribute_options(CLI::App* app, AttributeOptions& o) {
  app->add_option("--variant", o.variant, "Inv, Dir, 2W, ID or DI")->capture_default_str();
  app->add_option("--model", o.model, "cubic or linear")->capture_default_str();
  app->add_option("--threshold", o.threshold, "CPCE threshold (default: table value at FPR 0.05)");
  app->add_option("--r1", o.cfg.r1_px, "inner disk radius in pixels")->capture_default_str();
  app->add_option("--delta", o.cfg.delta_px, "annulus width in pixels")->capture_default_str();
  app->add_option("--U", o.cfg.search.U, "predictor order")->capture_default_str();
  app->add_option("--mu", o.cfg.search.mu, "LMS step size")->capture_default_str();
  app->add_option("--A-min", o.cfg.search.A_min, "smallest candidate set")->capture_default_str();
  app->add_option("--init-min", o.cfg.search.init_min, "initial grid lower bound")->capture_default_str();
  app->add_option("--init-max", o.cfg.search.init_max, "initial grid upper bound")->capture_default_str();
  app->add_option("--init-step", o.cfg.search.init_step, "initial grid step")->capture_default_str();
  app->add_option("--gap-lambda", o.cfg.search.gap_lambda, "resolution after a change in (0.001, 0.01]")
      ->capture_default_str();
  app->add_option("--min-coverage", o.cfg.search.min_coverage,
                  "smallest fraction of an annulus that must stay inside the image")
      ->capture_default_str();
  app->add_option("--alpha-f", o.cfg.alpha_f, "alpha used for the energy floor")->capture_default_str();
  app->add_option("--numerator", o.numerator, "per-annulus or coherent")->capture_default_str();
  app->add_flag("--no-early-stop", o.no_early_stop, "process every annulus");
  app->add_option("--levels", o.cfg.denoiser.levels, "wavelet levels")->capture_default_str();
  app->add_option("--noise-variance", o.cfg.denoiser.noise_variance, "denoiser noise variance")
      ->capture_default_str();
}

AttributeConfig finish(const AttributeOptions& o) {
  AttributeConfig c = o.cfg;
  c.variant = parse_variant(o.variant);
  c.model = parse_model(o.model);
  c.threshold = o.threshold;
  if (o.numerator == "per-annulus") {
    c.numerator = CpceNumerator::per_annulus;
  } else if (o.numerator == "coherent") {
    c.numerator = CpceNumerator::coherent;
  } else {
    throw Error(fmt::format("unknown numerator '{}'", o.numerator));
  }
  c.early_stop = !o.no_early_stop;
  c.validate();
  return c;
}

int env_threads() {
  if (const char* s = std::getenv("PRNU_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string num(double x) { return fmt::format("{}", x); }

// ---------------------------------------------------------------- fingerprint

struct FingerprintOptions {
  std::vector<std::string> images;
  std::string out;
  std::string label;
  DenoiserConfig denoiser;
};

int cmd_fingerprint(const FingerprintOptions& o) {
  std::vector<Plane> planes;
  planes.reserve(o.images.size());
  for (const auto& p : o.images) planes.push_back(load_image(p));
  const Fingerprint fp = estimate_fingerprint(planes, o.denoiser, o.label);
  write_fingerprint(fp, o.out);
  fmt::print("L={} width={} height={} sigma2={} zero_denominator_pixels={}\n", planes.size(), fp.cols(), fp.rows(),
             num(fp.sigma2()), fp.meta().zero_denominator_pixels);
  return 0;
}

// ---------------------------------------------------------------- attribute

struct AttributeCommand {
  std::string fingerprint;
  std::string image;
  std::string trace;
  bool no_timing = false;
  AttributeOptions opts;
};

void write_traces(const Verdict& v, const std::string& path) {
  for (std::size_t i = 0; i < v.runs.size(); ++i) {
    const auto& run = v.runs[i];
    fs::path p = path;
    if (i > 0) p = fs::path(path).replace_extension("").string() + "." + std::string(to_string(run.approach)) +
                   fs::path(path).extension().string();
    std::ofstream out(p);
    if (!out) throw Error(fmt::format("cannot write {}", p.string()));
    write_trace_csv(out, run.traces, run.floors, run.sigma2);
  }
}

int cmd_attribute(const AttributeCommand& c) {
  const AttributeConfig cfg = finish(c.opts);
  const Fingerprint fp = read_fingerprint(c.fingerprint);
  const Plane img = load_image(c.image);
  const Verdict v = attribute(fp, img, cfg);
  if (!c.trace.empty()) write_traces(v, c.trace);
  std::cout << v.to_json(!c.no_timing) << "\n";
  return v.h1 ? 1 : 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string out_dir;
  std::string prefix = "img";
  int count = 1;
  int width = 512;
  int height = 512;
  std::string scene = "flat";
  double level = 128.0;
  double strength = 0.02;
  double theta_sigma = 2.0;
  std::uint64_t prnu_seed = 1;
  std::uint64_t seed = 1000;
  std::string profile = "constant:0";
  std::string prnu_out;
};

SceneKind parse_scene(const std::string& s) {
  if (s == "flat") return SceneKind::flat;
  if (s == "gradient") return SceneKind::gradient;
  if (s == "texture") return SceneKind::texture;
  throw Error(fmt::format("unknown scene '{}'", s));
}

int cmd_simulate(const SimulateOptions& o) {
  if (o.count < 1) throw Error("count must be >= 1");
  const SceneKind kind = parse_scene(o.scene);
  const DistortionProfile prof = DistortionProfile::parse(o.profile);
  const bool identity = prof.kind() == DistortionProfile::Kind::constant && prof(0.0) == 0.0;
  fs::create_directories(o.out_dir);
  const Plane K = synth_prnu(o.width, o.height, o.strength, o.prnu_seed);
  if (!o.prnu_out.empty()) {
    FingerprintMeta meta;
    meta.source_label = fmt::format("planted:{}", o.prnu_seed);
    write_fingerprint(Fingerprint(K, meta), o.prnu_out);
  }
  for (int i = 0; i < o.count; ++i) {
    const std::uint64_t s = o.seed + static_cast<std::uint64_t>(i);
    SyntheticScene scene{synth_scene(kind, o.width, o.height, o.level, s), K, o.theta_sigma, s};
    Plane img = synth_image(scene);
    if (!identity) img = apply_profile(img, prof);
    const std::string stem = fmt::format("{}_{:03d}", o.prefix, i);
    save_png(img, fs::path(o.out_dir) / (stem + ".png"));
    nlohmann::ordered_json j;
    j["image"] = stem + ".png";
    j["width"] = o.width;
    j["height"] = o.height;
    j["scene"] = o.scene;
    j["level"] = o.level;
    j["prnu_strength"] = o.strength;
    j["prnu_seed"] = o.prnu_seed;
    j["theta_sigma"] = o.theta_sigma;
    j["seed"] = s;
    j["profile"] = nlohmann::ordered_json::parse(prof.to_json());
    std::ofstream side(fs::path(o.out_dir) / (stem + ".json"));
    side << j.dump(2) << "\n";
  }
  fmt::print("wrote {} image(s) to {}\n", o.count, o.out_dir);
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchCommand {
  std::string manifest;
  std::string out;
  std::string timing;
  std::string profiles;
  std::string trajectories;
  int workers = 0;
  AttributeOptions opts;
};

struct ManifestRow {
  std::string fingerprint;
  std::string image;
  std::optional<bool> h1;
  std::string raw_label;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto a = f.find_first_not_of(" \t");
    const auto b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? std::string() : f.substr(a, b - a + 1);
  }
  return out;
}

std::optional<bool> parse_label(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "h1" || s == "1" || s == "match") return true;
  if (s == "h0" || s == "0" || s == "nomatch") return false;
  return std::nullopt;
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot read manifest {}", path));
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (base / p).string();
  };
  std::vector<ManifestRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (first) {
      first = false;
      if (!f.empty() && f[0] == "fingerprint") continue;
    }
    ManifestRow r;
    r.fingerprint = resolve(f.size() > 0 ? f[0] : "");
    r.image = resolve(f.size() > 1 ? f[1] : "");
    r.raw_label = f.size() > 2 ? f[2] : "";
    r.h1 = parse_label(r.raw_label);
    rows.push_back(std::move(r));
  }
  return rows;
}

struct BenchResult {
  std::optional<Verdict> verdict;
  std::string status = "ok";
  double ms = 0.0;
  int rows = 0;
  int cols = 0;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

int cmd_bench(const BenchCommand& c) {
  const AttributeConfig cfg = finish(c.opts);
  const auto rows = read_manifest(c.manifest);

  std::map<std::string, std::shared_ptr<const Fingerprint>> fps;
  std::map<std::string, std::string> fp_errors;
  for (const auto& r : rows) {
    if (fps.count(r.fingerprint) || fp_errors.count(r.fingerprint)) continue;
    try {
      fps[r.fingerprint] = std::make_shared<const Fingerprint>(read_fingerprint(r.fingerprint));
    } catch (const std::exception& e) {
      fp_errors[r.fingerprint] = e.what();
    }
  }

  std::vector<BenchResult> results(rows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      auto& res = results[i];
      const auto& row = rows[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (auto it = fp_errors.find(row.fingerprint); it != fp_errors.end()) throw Error(it->second);
        const Plane img = load_image(row.image);
        res.rows = img.rows();
        res.cols = img.cols();
        res.verdict = attribute(*fps.at(row.fingerprint), img, cfg);
      } catch (const std::exception& e) {
        res.status = fmt::format("error: {}", e.what());
      }
      res.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const int n_workers = std::max(1, std::min<int>(c.workers > 0 ? c.workers : env_threads(),
                                                  static_cast<int>(std::max<std::size_t>(rows.size(), 1))));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream out(c.out);
  if (!out) throw Error(fmt::format("cannot write {}", c.out));
  out << "index,fingerprint,image,label,decision,cpce_max,stop_index,annuli,annuli_processed,k0,status\n";
  int tp = 0, pos = 0, fp_count = 0, neg = 0, errors = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const auto& res = results[i];
    std::string decision, cpce, stop, annuli, processed, k0;
    if (res.verdict) {
      const auto& v = *res.verdict;
      decision = v.h1 ? "H1" : "H0";
      cpce = num(v.cpce_max());
      stop = v.stop_index ? std::to_string(*v.stop_index) : "";
      annuli = std::to_string(v.annuli);
      processed = std::to_string(v.annuli_processed);
      k0 = v.runs.empty() ? "" : std::to_string(v.runs.front().k0);
      if (row.h1) {
        if (*row.h1) {
          ++pos;
          tp += v.h1;
        } else {
          ++neg;
          fp_count += v.h1;
        }
      }
    } else {
      ++errors;
    }
    out << i << ',' << csv_field(row.fingerprint) << ',' << csv_field(row.image) << ',' << csv_field(row.raw_label)
        << ',' << decision << ',' << cpce << ',' << stop << ',' << annuli << ',' << processed << ',' << k0 << ','
        << csv_field(res.status) << '\n';
  }

  if (!c.timing.empty()) {
    std::ofstream t(c.timing);
    if (!t) throw Error(fmt::format("cannot write {}", c.timing));
    t << "index,image,wall_ms,attribute_ms\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double a = results[i].verdict ? results[i].verdict->elapsed_ms : 0.0;
      t << i << ',' << csv_field(rows[i].image) << ',' << fmt::format("{:.3f}", results[i].ms) << ','
        << fmt::format("{:.3f}", a) << '\n';
    }
  }

  if (!c.profiles.empty()) {
    std::ofstream p(c.profiles);
    if (!p) throw Error(fmt::format("cannot write {}", c.profiles));
    p << "index,image,k,r_mid,alpha_star\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!results[i].verdict) continue;
      const auto& fp = *fps.at(rows[i].fingerprint);
      const auto part = partition(std::min(fp.cols(), results[i].cols), std::min(fp.rows(), results[i].rows),
                                  cfg.r1_px, cfg.delta_px);
      const auto& prof = results[i].verdict->alpha_profile;
      for (std::size_t k = 0; k < prof.size(); ++k) {
        if (!prof[k]) continue;
        p << i << ',' << csv_field(rows[i].image) << ',' << k << ',' << num(part.mid_radius(static_cast<int>(k)))
          << ',' << num(*prof[k]) << '\n';
      }
    }
  }

  if (!c.trajectories.empty()) {
    std::ofstream p(c.trajectories);
    if (!p) throw Error(fmt::format("cannot write {}", c.trajectories));
    p << "index,image,n,cpce\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!results[i].verdict) continue;
      const auto& tr = results[i].verdict->cpce_trajectory;
      for (std::size_t n = 0; n < tr.size(); ++n) {
        p << i << ',' << csv_field(rows[i].image) << ',' << n + 1 << ',' << num(tr[n]) << '\n';
      }
    }
  }

  auto rate = [](int a, int b) { return b == 0 ? std::string("nan") : fmt::format("{:.4f}", double(a) / b); };
  fmt::print("rows={} errors={} threshold={} TPR={} ({}/{}) FPR={} ({}/{})\n", rows.size(), errors,
             num(cfg.effective_threshold()), rate(tp, pos), tp, pos, rate(fp_count, neg), fp_count, neg);
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"PRNU camera attribution under radially varying lens distortion"};
  app.set_config("--config", "", "TOML-style configuration file; command-line flags take precedence");
  app.require_subcommand(1);

  FingerprintOptions fpo;
  auto* fpc = app.add_subcommand("fingerprint", "estimate a reference fingerprint from images");
  fpc->add_option("images", fpo.images, "input images (same size)")->required();
  fpc->add_option("-o,--out", fpo.out, "output fingerprint file")->required();
  fpc->add_option("--label", fpo.label, "source label stored in metadata");
  fpc->add_option("--levels", fpo.denoiser.levels, "wavelet levels")->capture_default_str();
  fpc->add_option("--noise-variance", fpo.denoiser.noise_variance, "denoiser noise variance")->capture_default_str();

  AttributeCommand ac;
  auto* atc = app.add_subcommand("attribute", "test an image against a fingerprint; exit 1 on match");
  atc->add_option("-f,--fingerprint", ac.fingerprint, "fingerprint file")->required();
  atc->add_option("-i,--image", ac.image, "test image")->required();
  atc->add_option("--trace", ac.trace, "per-annulus trace CSV (second approach gets a suffix)");
  atc->add_flag("--no-timing", ac.no_timing, "omit elapsed_ms from the report");
  add_attribute_options(atc, ac.opts);

  SimulateOptions so;
  auto* sic = app.add_subcommand("simulate", "write synthetic images with a planted PRNU and radial warp");
  sic->add_option("-o,--out-dir", so.out_dir, "output directory")->required();
  sic->add_option("--prefix", so.prefix, "file name prefix")->capture_default_str();
  sic->add_option("-n,--count", so.count, "number of images")->capture_default_str();
  sic->add_option("--width", so.width)->capture_default_str();
  sic->add_option("--height", so.height)->capture_default_str();
  sic->add_option("--scene", so.scene, "flat, gradient or texture")->capture_default_str();
  sic->add_option("--level", so.level, "scene intensity")->capture_default_str();
  sic->add_option("--strength", so.strength, "PRNU standard deviation")->capture_default_str();
  sic->add_option("--theta-sigma", so.theta_sigma, "additive noise standard deviation")->capture_default_str();
  sic->add_option("--prnu-seed", so.prnu_seed, "seed of the planted PRNU")->capture_default_str();
  sic->add_option("--seed", so.seed, "seed of the first image; image i uses seed + i")->capture_default_str();
  sic->add_option("--profile", so.profile, "constant:a, affine:a0,a1 or piecewise:r=a,...")->capture_default_str();
  sic->add_option("--prnu-out", so.prnu_out, "also write the planted PRNU as a fingerprint file");

  BenchCommand bc;
  auto* bec = app.add_subcommand("bench", "attribute every manifest row and report TPR/FPR");
  bec->add_option("-m,--manifest", bc.manifest, "CSV with fingerprint,image,label")->required();
  bec->add_option("-o,--out", bc.out, "per-row results CSV")->required();
  bec->add_option("--timing", bc.timing, "per-row wall-clock CSV");
  bec->add_option("--profiles", bc.profiles, "alpha-vs-radius CSV");
  bec->add_option("--trajectories", bc.trajectories, "CPCE trajectory CSV");
  bec->add_option("-j,--workers", bc.workers, "parallel workers (default: PRNU_THREADS or hardware)");
  add_attribute_options(bec, bc.opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fpc) return cmd_fingerprint(fpo);
    if (*atc) return cmd_attribute(ac);
    if (*sic) return cmd_simulate(so);
    if (*bec) return cmd_bench(bc);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 2;
}

}  // namespace prnu::cli
