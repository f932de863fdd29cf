#include "cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cpda/analytic.hpp"
#include "cpda/backend_spec.hpp"
#include "cpda/errors.hpp"
#include "cpda/evaluation.hpp"
#include "cpda/explainers.hpp"
#include "cpda/features.hpp"
#include "cpda/patching.hpp"
#include "cpda/rendering.hpp"
#include "json.hpp"

namespace cpda::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Raised for flag combinations CLI11 cannot check on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeometryFlags {
  int patch = 20;
  int stride = 5;
  int samples = 10;
  std::uint64_t seed = 0;
  int input_side = 224;
  std::size_t batch = 64;
  std::string measure = "probability";
  std::string filler = "mean";
  long timeout_ms = 30'000;
};

void add_geometry_flags(CLI::App* cmd, GeometryFlags& g) {
  cmd->add_option("--patch", g.patch, "Patch side k in pixels")->capture_default_str();
  cmd->add_option("--stride", g.stride, "Patch stride s in pixels")->capture_default_str();
  cmd->add_option("--samples", g.samples, "Samples per patch for pda-marginal")
      ->capture_default_str();
  cmd->add_option("--seed", g.seed, "Seed for sampling and noise fillers")->capture_default_str();
  cmd->add_option("--input-side", g.input_side, "Square input size the backend expects")
      ->capture_default_str();
  cmd->add_option("--batch-size", g.batch, "Images per backend batch")->capture_default_str();
  cmd->add_option("--measure", g.measure, "probability | bits")
      ->check(CLI::IsMember({"probability", "bits"}))
      ->capture_default_str();
  cmd->add_option("--filler", g.filler, "pda-occlusion fill: mean | gray128 | const:<v> | noise:<seed>")
      ->capture_default_str();
  cmd->add_option("--timeout-ms", g.timeout_ms, "External backend timeout per batch")
      ->capture_default_str();
}

MethodSettings make_settings(Method method, const GeometryFlags& g) {
  MethodSettings s;
  s.method = method;
  s.config.patch_size = g.patch;
  s.config.stride = g.stride;
  s.config.batch_size = g.batch;
  s.config.measure = g.measure == "bits" ? DifferenceMeasure::kBits : DifferenceMeasure::kProbability;
  const auto filler = parse_filler(g.filler);
  if (!filler) throw UsageError("invalid --filler '" + g.filler + "'");
  s.filler = *filler;
  s.marginal.samples = g.samples;
  s.marginal.seed = g.seed;
  return s;
}

Method require_method(const std::string& text) {
  const auto m = parse_method(text);
  if (!m) throw UsageError("unknown method '" + text + "'");
  return *m;
}

std::unique_ptr<Classifier> open_backend(const std::string& text, const GeometryFlags& g) {
  ClassifierSpec spec = parse_backend_spec(text, g.input_side);
  spec.timeout = std::chrono::milliseconds(g.timeout_ms);
  return make_classifier(spec);
}

PatchSweep run_sweep(const ImageTensor& img, Classifier& clf, const MethodSettings& s) {
  switch (s.method) {
    case Method::kCpda:
      return sweep_cpda(img, clf, s.config);
    case Method::kPdaOcclusion:
      return sweep_occlusion(img, clf, s.config, s.filler);
    case Method::kPdaMarginal:
      return sweep_marginal(img, clf, s.config, s.marginal);
  }
  throw UsageError("unknown method");
}

std::string format_ratio(double v) {
  std::ostringstream os;
  if (std::abs(v - std::round(v)) < 1e-9) {
    os << static_cast<long long>(std::llround(v));
  } else {
    os << std::setprecision(6) << v;
  }
  return os.str();
}

// ---- explain ------------------------------------------------------------------------

struct ExplainFlags {
  std::string image;
  std::string backend;
  std::string method = "cpda";
  std::string cls = "auto";
  std::string prefix;
  GeometryFlags geo;
};

std::vector<std::size_t> select_classes(const std::string& text, const ClassDistribution& base) {
  if (text == "auto") return {base.argmax()};
  if (text.starts_with("all-topk=")) {
    std::size_t m = 0;
    try {
      m = std::stoul(text.substr(9));
    } catch (const std::exception&) {
      throw UsageError("invalid --class '" + text + "'");
    }
    if (m == 0) throw UsageError("all-topk needs m >= 1");
    return top_classes(base, m);
  }
  std::size_t idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stoul(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw UsageError("invalid --class '" + text + "'");
  }
  if (idx >= base.size()) {
    throw UsageError("--class " + text + " out of range; backend reports " +
                     std::to_string(base.size()) + " classes");
  }
  return {idx};
}

int cmd_explain(const ExplainFlags& f, std::ostream& out) {
  const Method method = require_method(f.method);
  const MethodSettings settings = make_settings(method, f.geo);

  const ImageTensor img = load_png(f.image);
  auto clf = open_backend(f.backend, f.geo);
  const int n = clf->input_side();
  // Fail on geometry before spending inferences.
  predict_calls(method, n, settings.config.patch_size, settings.config.stride, f.geo.samples);

  const auto start = Clock::now();
  const PatchSweep sweep = run_sweep(img, *clf, settings);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();

  const auto classes = select_classes(f.cls, sweep.base);
  const ImageTensor processed = bilinear_resize(img, n, n);

  nlohmann::ordered_json summary;
  nlohmann::ordered_json class_list = nlohmann::ordered_json::array();
  nlohmann::ordered_json score_list = nlohmann::ordered_json::array();
  for (std::size_t c : classes) {
    const SaliencyMap map = explain_class(sweep, c, settings.config.measure);
    const std::string prefix =
        classes.size() == 1 && !f.cls.starts_with("all-topk=") ? f.prefix
                                                                : f.prefix + "-c" + std::to_string(c);
    write_map(map, prefix + ".sal");
    save_png(heatmap(map), prefix + "-heat.png");
    save_png(overlay_mask(processed, map), prefix + "-overlay.png");
    save_png(heatmap(split_signed(map).second), prefix + "-neg-heat.png");
    class_list.push_back(c);
    score_list.push_back(sweep.base.probs[c]);
  }
  if (classes.size() == 1 && !f.cls.starts_with("all-topk=")) {
    summary["class"] = class_list.front();
    summary["base_score"] = score_list.front();
  } else {
    summary["class"] = class_list;
    summary["base_score"] = score_list;
  }
  summary["calls"] = clf->counter().inferences;
  summary["seconds"] = seconds;
  out << summary.dump() << '\n';
  return kExitOk;
}

// ---- demo-saturation ----------------------------------------------------------------

int cmd_demo_saturation(std::ostream& out) {
  // p(c|x) = max(x1, x2, x3) on binary features, explained at x = (1, 1, 0).
  const std::vector<double> x = {1.0, 1.0, 0.0};
  FeatureProblem problem;
  problem.n_features = 3;
  problem.predictor = [](std::span<const double> v) { return *std::max_element(v.begin(), v.end()); };
  problem.domains.assign(3, ValueDomain{{0.0, 1.0}, {0.5, 0.5}});
  const auto subset = [&x](std::span<const std::size_t> s) {
    double m = 0.0;
    for (std::size_t i : s) m = std::max(m, x[i]);
    return m;
  };

  const auto pda = pda_features_exact(problem, x);
  const auto cpda = cpda_features(problem, x, subset);
  const std::vector<double> want_pda = {0.0, 0.0, 0.0};
  const std::vector<double> want_cpda = {0.5, 0.5, 0.0};

  auto print_vec = [&out](const char* label, const std::vector<double>& v) {
    out << label << " (";
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
    out << ")\n";
  };
  out << "max classifier p(c|x) = max(x1,x2,x3), x = (1,1,0), f(x) = " << cpda.base << "\n";
  print_vec("  PDA  relevance:", pda);
  print_vec("  CPDA context R:", cpda.context);
  print_vec("  CPDA relevance:", cpda.relevance);
  bool ok = pda == want_pda && cpda.relevance == want_cpda;

  // Image-scale probe: two fully active 16x16 groups under a soft-OR backend.
  constexpr int kSide = 64;
  const Rect group_a{8, 8, 16, 16};
  const Rect group_b{40, 40, 16, 16};
  SaturatedOrClassifier clf(GroupDef::from_rects(kSide, {group_a, group_b}));
  ImageTensor img(kSide, kSide, 3);
  for (const Rect& g : {group_a, group_b}) {
    for (int r = g.top; r < g.top + g.height; ++r) {
      for (int c = g.left; c < g.left + g.width; ++c) {
        for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = 255;
      }
    }
  }
  struct Row {
    const char* name;
    Rect rect;
    bool single_group;
  };
  const std::vector<Row> rows = {
      {"group A removed", group_a, true},
      {"group B removed", group_b, true},
      {"background removed", Rect{40, 0, 24, 24}, false},
      {"both groups removed", Rect{8, 8, 48, 48}, false},
  };
  std::vector<Rect> regions;
  for (const auto& r : rows) regions.push_back(r.rect);
  const auto probe = saturation_probe(img, regions, clf, 0, Filler::constant(0));

  out << "\nsaturated-or backend, 64x64, groups at (8,8) and (40,40), filler const:0\n";
  out << "  region                 score     delta\n";
  out << std::fixed << std::setprecision(4);
  out << "  original               " << probe.base << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << "  " << std::left << std::setw(22) << rows[i].name << std::right << " "
        << probe.scores[i] << "   " << std::showpos << probe.deltas[i] << std::noshowpos << "\n";
    if (rows[i].single_group && probe.deltas[i] != 0.0) ok = false;
  }
  out.unsetf(std::ios::fixed);
  out << (ok ? "demo OK\n" : "demo MISMATCH\n");
  return ok ? kExitOk : kExitFailure;
}

// ---- evaluate -----------------------------------------------------------------------

struct EvaluateFlags {
  std::string corpus;
  std::string backend;
  std::string method = "cpda";
  std::string out;
  std::size_t workers = 1;
  GeometryFlags geo;
};

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out) {
  const MethodSettings settings = make_settings(require_method(f.method), f.geo);
  if (!fs::is_directory(f.corpus)) throw UsageError("--corpus is not a directory: " + f.corpus);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(f.corpus)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("corpus " + f.corpus + " holds no .png files");

  std::vector<CorpusImage> corpus;
  for (const auto& p : files) corpus.push_back({p.string(), load_png(p)});

  auto clf = open_backend(f.backend, f.geo);
  predict_calls(settings.method, clf->input_side(), settings.config.patch_size,
                settings.config.stride, f.geo.samples);
  const LogOddsReport report = evaluate_logodds(corpus, *clf, settings, f.workers);

  std::ofstream file(f.out, std::ios::trunc);
  if (!file) throw IoError("cannot open " + f.out + " for writing");
  file << report.to_json() << '\n';
  if (!file) throw IoError("failed writing " + f.out);

  out << to_string(settings.method) << ": log odds ratio " << report.mean << " +/- "
      << report.stddev << " over " << report.per_image.size() << " images";
  if (!report.failures.empty()) out << " (" << report.failures.size() << " failed)";
  out << '\n';
  return kExitOk;
}

// ---- compare ------------------------------------------------------------------------

struct CompareFlags {
  std::string methods = "cpda,pda-occlusion,pda-marginal";
  std::string backend = "analytic:constant:0.5";
  std::string image;
  GeometryFlags geo;
};

int cmd_compare(const CompareFlags& f, std::ostream& out) {
  std::vector<Method> methods;
  std::stringstream ss(f.methods);
  for (std::string item; std::getline(ss, item, ',');) methods.push_back(require_method(item));
  if (methods.empty()) throw UsageError("--methods is empty");

  auto clf = open_backend(f.backend, f.geo);
  const int n = clf->input_side();
  const ImageTensor img =
      f.image.empty() ? ImageTensor::filled(n, n, 3, 128) : load_png(f.image);

  std::vector<CostModel> rows;
  for (Method m : methods) {
    MethodSettings s = make_settings(m, f.geo);
    // PDA's usual accounting slides its patch with stride 1.
    if (m == Method::kPdaMarginal) s.config.stride = 1;
    CostModel row;
    row.method = m;
    row.n = n;
    row.k = s.config.patch_size;
    row.s = s.config.stride;
    row.samples = m == Method::kPdaMarginal ? f.geo.samples : 1;
    row.predicted_calls = predict_calls(m, n, row.k, row.s, f.geo.samples);
    clf->reset_counter();
    const auto start = Clock::now();
    run_sweep(img, *clf, s);
    row.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    row.measured_calls = clf->counter().inferences;
    rows.push_back(row);
  }

  out << std::left << std::setw(15) << "method" << std::right << std::setw(6) << "n"
      << std::setw(5) << "k" << std::setw(5) << "s" << std::setw(5) << "S" << std::setw(12)
      << "predicted" << std::setw(12) << "measured" << std::setw(12) << "seconds" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(15) << to_string(r.method) << std::right << std::setw(6) << r.n
        << std::setw(5) << r.k << std::setw(5) << r.s << std::setw(5) << r.samples
        << std::setw(12) << r.predicted_calls << std::setw(12) << r.measured_calls
        << std::setw(12) << std::fixed << std::setprecision(3) << r.seconds << '\n';
    out.unsetf(std::ios::fixed);
  }

  const auto find = [&rows](Method m) -> const CostModel* {
    for (const auto& r : rows) {
      if (r.method == m) return &r;
    }
    return nullptr;
  };
  const CostModel* cpda = find(Method::kCpda);
  const CostModel* pda = find(Method::kPdaMarginal);
  if (cpda != nullptr && pda != nullptr) {
    // Base calls are excluded from the ratio.
    const double predicted = static_cast<double>(pda->predicted_calls - 1) /
                             static_cast<double>(cpda->predicted_calls - 1);
    const double measured = static_cast<double>(pda->measured_calls - 1) /
                            static_cast<double>(cpda->measured_calls - 1);
    const long long reference = static_cast<long long>(f.geo.samples) * f.geo.stride * f.geo.stride;
    out << "pda-marginal/cpda call ratio: reference S*s^2 = " << reference
        << ", predicted = " << format_ratio(predicted) << ", measured = " << format_ratio(measured)
        << '\n';
  }
  bool consistent = true;
  for (const auto& r : rows) consistent = consistent && r.measured_calls == r.predicted_calls;
  out << (consistent ? "measured calls match predictions\n"
                     : "measured calls DIFFER from predictions\n");
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model-agnostic saliency maps by contextual prediction difference analysis"};
  app.require_subcommand(1);

  ExplainFlags explain;
  auto* c_explain = app.add_subcommand("explain", "Explain one image classification");
  c_explain->add_option("--image", explain.image, "Input PNG")->required();
  c_explain->add_option("--backend", explain.backend, "Backend spec string")->required();
  c_explain->add_option("--method", explain.method, "cpda | pda-occlusion | pda-marginal")
      ->capture_default_str();
  c_explain->add_option("--class", explain.cls, "auto | <index> | all-topk=<m>")
      ->capture_default_str();
  c_explain->add_option("--out-prefix", explain.prefix, "Output path prefix")->required();
  add_geometry_flags(c_explain, explain.geo);

  auto* c_demo = app.add_subcommand("demo-saturation", "Show PDA failing and CPDA succeeding on a saturated classifier");

  EvaluateFlags evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Log odds ratio over a corpus of PNGs");
  c_eval->add_option("--corpus", evaluate.corpus, "Directory of PNG images")->required();
  c_eval->add_option("--backend", evaluate.backend, "Backend spec string")->required();
  c_eval->add_option("--method", evaluate.method, "cpda | pda-occlusion | pda-marginal")
      ->capture_default_str();
  c_eval->add_option("--out", evaluate.out, "JSON report path")->required();
  c_eval->add_option("--workers", evaluate.workers, "Images evaluated concurrently")
      ->capture_default_str();
  add_geometry_flags(c_eval, evaluate.geo);

  CompareFlags compare;
  auto* c_compare = app.add_subcommand("compare", "Inference counts and timing per method");
  c_compare->add_option("--methods", compare.methods, "Comma-separated methods")
      ->capture_default_str();
  c_compare->add_option("--backend", compare.backend, "Backend spec string")->capture_default_str();
  c_compare->add_option("--image", compare.image, "Input PNG (default: uniform gray)");
  add_geometry_flags(c_compare, compare.geo);

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (c_explain->parsed()) return cmd_explain(explain, out);
    if (c_demo->parsed()) return cmd_demo_saturation(out);
    if (c_eval->parsed()) return cmd_evaluate(evaluate, out);
    if (c_compare->parsed()) return cmd_compare(compare, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidGeometry& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace cpda::cli
