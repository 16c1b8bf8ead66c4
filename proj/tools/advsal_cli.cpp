// advsal: train models, craft adversarial corpora, render saliency maps and
// run the saliency evaluations from the command line.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "advsal/advsal.h"

namespace fs = std::filesystem;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kNumeric = 3, kEmpty = 4 };

// Failure carrying the process exit code.
struct Failure : std::runtime_error {
  Failure(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
  int code;
};

int exit_code_for(advsal_status s) {
  switch (s) {
    case ADVSAL_OK: return kOk;
    case ADVSAL_E_IO:
    case ADVSAL_E_FORMAT: return kIo;
    case ADVSAL_E_NUMERIC: return kNumeric;
    case ADVSAL_E_EMPTY: return kEmpty;
    default: return kUsage;
  }
}

void check(advsal_status s, const std::string& context) {
  if (s != ADVSAL_OK) throw Failure(exit_code_for(s), context + ": " + advsal_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using TensorPtr = std::unique_ptr<advsal_tensor, Deleter<advsal_tensor, advsal_tensor_free>>;
using DatasetPtr = std::unique_ptr<advsal_dataset, Deleter<advsal_dataset, advsal_dataset_free>>;
using ModelPtr = std::unique_ptr<advsal_model, Deleter<advsal_model, advsal_model_free>>;
using MapPtr = std::unique_ptr<advsal_map, Deleter<advsal_map, advsal_map_free>>;
using CorpusPtr = std::unique_ptr<advsal_corpus, Deleter<advsal_corpus, advsal_corpus_free>>;

// ---- list flags -------------------------------------------------------------

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    std::string item = text.substr(start, end - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    T v{};
    auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || end != item.data() + item.size()) {
      throw Failure(kUsage, std::string(flag) + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> parse_names(const std::string& text, const char* flag,
                                     std::initializer_list<const char*> allowed) {
  std::vector<std::string> out = split_list(text);
  for (const auto& item : out) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return item == a; })) {
      throw Failure(kUsage, std::string(flag) + ": unknown value '" + item + "'");
    }
  }
  if (out.empty()) throw Failure(kUsage, std::string(flag) + " must not be empty");
  return out;
}

// ---- shared options ---------------------------------------------------------

struct Common {
  std::uint64_t seed = 42;
  std::string out;
  std::string weights;
  std::string dataset;
  std::string split;
  std::size_t threads = 0;
};

struct TrainOpts {
  std::string arch;
  std::size_t epochs = 3;
  double lr = 0.01;
  std::size_t batch = 64;
  std::string eval_dataset;
};

struct AttackOpts {
  std::string attack = "fgsm";
  double eps = 0.1;
  double alpha = 0.01;
  std::size_t iters = 10;
  double cw_c = 1.0;
  double cw_kappa = 0.0;
  double cw_lr = 0.01;
  std::string cw_optimizer = "adam";
  std::size_t count = 100;
};

struct SaliencyOpts {
  std::string methods = "guided";
  std::string classes;
  std::optional<int> contrast;
  std::string norm = "channel-energy";
  std::optional<std::size_t> index;
  std::string input;
};

struct EvalOpts {
  std::string corpora;
  std::string fractions = "0.05,0.1,0.2,0.3,0.4";
  std::string perturb_mode = "mean";
  std::string sources = "enhanced,guided,vanilla,random";
  std::size_t pairs = 200;
  std::optional<std::size_t> case_index;
};

void add_common(CLI::App* sub, Common& c, bool needs_weights) {
  sub->add_option("--seed", c.seed, "Global seed")->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->required();
  auto* w = sub->add_option("--weights", c.weights, "Model weight file (SMW1)");
  if (needs_weights) w->required();
  sub->add_option("--dataset", c.dataset,
                  "MNIST IDX directory, 'images,labels' IDX pair, CIFAR-10 .bin file or "
                  "CIFAR-10 directory");
  sub->add_option("--split", c.split, "Split of a dataset directory: train or test")
      ->check(CLI::IsMember({"train", "test"}));
  sub->add_option("--threads", c.threads, "Worker threads (0 = hardware)");
  // Handled before parsing; registered so it shows in --help.
  sub->add_option("--config", "key=value file; command-line flags take precedence");
}

// ---- config file ------------------------------------------------------------

// Rewrites argv so the key=value pairs of --config FILE come first, as flags.
// Later occurrences win (take_last), so explicit flags override the file.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> cfg_path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw Failure(kUsage, "--config requires a file");
      cfg_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      cfg_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!cfg_path) return rest;
  if (!fs::is_regular_file(*cfg_path)) throw Failure(kIo, "config file not found: " + *cfg_path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(*cfg_path);
  } catch (const CLI::Error& e) {
    throw Failure(kUsage, "cannot parse config " + *cfg_path + ": " + e.what());
  }
  std::vector<std::string> injected;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string value;
    for (std::size_t k = 0; k < item.inputs.size(); ++k) {
      if (k) value += ",";
      value += item.inputs[k];
    }
    injected.push_back("--" + item.name);
    injected.push_back(value);
  }
  if (rest.empty()) return injected;
  // Subcommand name stays first.
  std::vector<std::string> out{rest.front()};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

// ---- inputs -----------------------------------------------------------------

DatasetPtr load_dataset(const std::string& spec, const std::string& split) {
  if (spec.empty()) throw Failure(kUsage, "--dataset is required");
  advsal_dataset* d = nullptr;
  const auto comma = spec.find(',');
  if (comma != std::string::npos) {
    const std::string images = spec.substr(0, comma);
    const std::string labels = spec.substr(comma + 1);
    check(advsal_dataset_load_idx(images.c_str(), labels.c_str(), &d), "dataset " + spec);
    return DatasetPtr(d);
  }
  const fs::path p(spec);
  if (fs::is_directory(p)) {
    const std::string prefix = split == "train" ? "train" : "t10k";
    const fs::path images = p / (prefix + "-images-idx3-ubyte");
    const fs::path labels = p / (prefix + "-labels-idx1-ubyte");
    if (fs::exists(images) || fs::exists(labels)) {
      check(advsal_dataset_load_idx(images.string().c_str(), labels.string().c_str(), &d),
            "dataset " + spec);
      return DatasetPtr(d);
    }
    std::vector<std::string> files;
    if (split == "train") {
      for (int i = 1; i <= 5; ++i) {
        const fs::path f = p / ("data_batch_" + std::to_string(i) + ".bin");
        if (fs::exists(f)) files.push_back(f.string());
      }
    } else if (fs::exists(p / "test_batch.bin")) {
      files.push_back((p / "test_batch.bin").string());
    }
    if (files.empty()) {
      throw Failure(kIo, "dataset " + spec + ": no MNIST IDX or CIFAR-10 files for split '" +
                             split + "'");
    }
    std::vector<const char*> ptrs;
    for (const auto& f : files) ptrs.push_back(f.c_str());
    check(advsal_dataset_load_cifar10(ptrs.data(), ptrs.size(), &d), "dataset " + spec);
    return DatasetPtr(d);
  }
  if (!fs::exists(p)) throw Failure(kIo, "dataset not found: " + spec);
  const char* one = spec.c_str();
  check(advsal_dataset_load_cifar10(&one, 1, &d), "dataset " + spec);
  return DatasetPtr(d);
}

ModelPtr load_model(const std::string& path) {
  advsal_model* m = nullptr;
  check(advsal_model_load(path.c_str(), &m), "weights " + path);
  return ModelPtr(m);
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Failure(kIo, "cannot create output directory " + dir);
  return fs::path(dir);
}

void check_compatible(const advsal_model* m, const advsal_dataset* d) {
  size_t shape[3];
  advsal_model_input_shape(m, shape);
  if (shape[0] != advsal_dataset_channels(d)) {
    throw Failure(kUsage, "model expects " + std::to_string(shape[0]) +
                              " channel(s), dataset has " +
                              std::to_string(advsal_dataset_channels(d)));
  }
}

std::vector<double> channel_means(const advsal_dataset* d) {
  std::vector<double> m(advsal_dataset_channels(d));
  advsal_dataset_channel_means(d, m.data(), m.size());
  return m;
}

// ---- subcommands ------------------------------------------------------------

int cmd_train(const Common& c, const TrainOpts& t) {
  auto data = load_dataset(c.dataset, c.split.empty() ? "train" : c.split);
  DatasetPtr eval;
  if (!t.eval_dataset.empty()) eval = load_dataset(t.eval_dataset, "test");
  const fs::path out = prepare_out(c.out);

  advsal_arch arch = advsal_dataset_channels(data.get()) == 3 ? ADVSAL_ARCH_CIFAR
                                                             : ADVSAL_ARCH_MNIST;
  if (t.arch == "mnist") arch = ADVSAL_ARCH_MNIST;
  if (t.arch == "cifar") arch = ADVSAL_ARCH_CIFAR;
  advsal_model* init = nullptr;
  check(advsal_model_create(arch, c.seed, &init), "model");
  ModelPtr initial(init);
  check_compatible(initial.get(), data.get());
  if (eval) check_compatible(initial.get(), eval.get());

  advsal_train_config cfg{t.epochs, t.lr, t.batch, c.seed};
  std::vector<advsal_epoch_stats> trace(t.epochs);
  advsal_model* trained = nullptr;
  int diverged = 0;
  const advsal_status s = advsal_train(initial.get(), data.get(), eval.get(), &cfg, &trained,
                                       trace.data(), &diverged);
  if (s == ADVSAL_E_NUMERIC && diverged > 0) {
    throw Failure(kNumeric, "training diverged at epoch " + std::to_string(diverged) + ": " +
                                advsal_last_error());
  }
  check(s, "train");
  ModelPtr model(trained);

  const fs::path weights = c.weights.empty() ? out / "model.smw" : fs::path(c.weights);
  check(advsal_model_save(model.get(), weights.string().c_str()), "save " + weights.string());
  const fs::path trace_csv = out / "train_trace.csv";
  check(advsal_write_train_trace_csv(trace.data(), trace.size(), trace_csv.string().c_str()),
        "write " + trace_csv.string());
  for (const auto& e : trace) {
    std::printf("epoch %zu loss %.6f train_acc %.4f", e.epoch, e.mean_loss, e.train_accuracy);
    if (eval) std::printf(" eval_acc %.4f", e.eval_accuracy);
    std::printf("\n");
  }
  std::printf("weights: %s\n", weights.string().c_str());
  return kOk;
}

advsal_attack_config attack_config(const AttackOpts& a) {
  static const std::map<std::string, advsal_attack> families{
      {"fgsm", ADVSAL_ATTACK_FGSM}, {"bim", ADVSAL_ATTACK_BIM}, {"cw", ADVSAL_ATTACK_CW}};
  advsal_attack_config cfg = advsal_attack_config_default();
  cfg.family = families.at(a.attack);
  cfg.epsilon = a.eps;
  cfg.step_size = a.alpha;
  cfg.iterations = a.iters;
  cfg.cw_c = a.cw_c;
  cfg.cw_confidence = a.cw_kappa;
  cfg.cw_lr = a.cw_lr;
  cfg.cw_optimizer = a.cw_optimizer == "gd" ? ADVSAL_CW_GD : ADVSAL_CW_ADAM;
  return cfg;
}

int cmd_attack(const Common& c, const AttackOpts& a) {
  auto model = load_model(c.weights);
  auto data = load_dataset(c.dataset, c.split.empty() ? "test" : c.split);
  check_compatible(model.get(), data.get());
  const fs::path out = prepare_out(c.out);
  const advsal_attack_config cfg = attack_config(a);
  advsal_corpus* corpus = nullptr;
  check(advsal_corpus_generate(model.get(), data.get(), &cfg, a.count, c.seed, &corpus),
        "attack");
  CorpusPtr owned(corpus);
  check(advsal_corpus_save(corpus, out.string().c_str()), "save corpus " + out.string());
  std::printf("%zu images attacked, %zu successful; manifest: %s\n", advsal_corpus_size(corpus),
              advsal_corpus_success_count(corpus), (out / "manifest.csv").string().c_str());
  return kOk;
}

advsal_method parse_method(const std::string& s) {
  if (s == "vanilla") return ADVSAL_METHOD_VANILLA;
  if (s == "guided") return ADVSAL_METHOD_GUIDED;
  return ADVSAL_METHOD_ENHANCED;
}

advsal_norm parse_norm(const std::string& s) {
  if (s == "max") return ADVSAL_NORM_MAX;
  if (s == "energy") return ADVSAL_NORM_ENERGY;
  return ADVSAL_NORM_CHANNEL_ENERGY;
}

int cmd_saliency(const Common& c, const SaliencyOpts& s) {
  auto model = load_model(c.weights);
  TensorPtr image;
  std::string source;
  if (!s.input.empty()) {
    advsal_tensor* t = nullptr;
    check(advsal_tensor_load_f32(s.input.c_str(), &t), "input " + s.input);
    image.reset(t);
    source = s.input;
  } else {
    if (!s.index) throw Failure(kUsage, "saliency needs --input FILE or --dataset with --index");
    auto data = load_dataset(c.dataset, c.split.empty() ? "test" : c.split);
    check_compatible(model.get(), data.get());
    advsal_tensor* t = nullptr;
    check(advsal_dataset_image(data.get(), *s.index, &t), "image " + std::to_string(*s.index));
    image.reset(t);
    source = c.dataset + "#" + std::to_string(*s.index);
  }

  const std::size_t classes = advsal_model_classes(model.get());
  const auto methods = parse_names(s.methods, "--method", {"vanilla", "guided", "enhanced"});
  const bool wants_enhanced =
      std::find(methods.begin(), methods.end(), "enhanced") != methods.end();
  std::vector<int> explained = parse_list<int>(s.classes, "--class");
  if (explained.empty()) {
    int predicted = 0;
    check(advsal_model_predict(model.get(), image.get(), &predicted), "predict");
    explained.push_back(predicted);
  }
  for (int k : explained) {
    if (k < 0 || static_cast<std::size_t>(k) >= classes) {
      throw Failure(kUsage, "--class " + std::to_string(k) + " outside [0, " +
                                std::to_string(classes) + ")");
    }
    if (wants_enhanced && s.contrast && *s.contrast == k) {
      throw Failure(kUsage, "enhanced map needs a contrast class different from the explained "
                            "class (both are " + std::to_string(k) + ")");
    }
  }
  if (s.contrast && (*s.contrast < 0 || static_cast<std::size_t>(*s.contrast) >= classes)) {
    throw Failure(kUsage, "--contrast-class " + std::to_string(*s.contrast) + " out of range");
  }

  const fs::path out = prepare_out(c.out);
  for (const std::string& method : methods) {
    for (int k : explained) {
      advsal_map* map = nullptr;
      std::string stem = method + "_class" + std::to_string(k);
      if (method == "enhanced") {
        std::size_t m = 0;
        if (s.contrast) {
          m = static_cast<std::size_t>(*s.contrast);
        } else {
          check(advsal_select_contrast_class(model.get(), image.get(),
                                             static_cast<std::size_t>(k), &m),
                "contrast class");
        }
        check(advsal_saliency_enhanced(model.get(), image.get(), static_cast<std::size_t>(k), m,
                                       parse_norm(s.norm), &map),
              "saliency");
        stem += "_vs" + std::to_string(m);
      } else {
        check(advsal_saliency(model.get(), image.get(), static_cast<std::size_t>(k),
                              parse_method(method), &map),
              "saliency");
      }
      MapPtr owned(map);
      const fs::path pgm = out / (stem + ".pgm");
      const fs::path raw = out / (stem + ".f64");
      check(advsal_map_write_pgm(map, pgm.string().c_str()), "write " + pgm.string());
      check(advsal_map_dump(map, raw.string().c_str()), "write " + raw.string());
      std::printf("%s: %s, %s\n", source.c_str(), pgm.string().c_str(), raw.string().c_str());
    }
  }
  return kOk;
}

int cmd_eval(const Common& c, const EvalOpts& e) {
  auto model = load_model(c.weights);
  auto data = load_dataset(c.dataset, c.split.empty() ? "test" : c.split);
  check_compatible(model.get(), data.get());
  const auto corpus_dirs = split_list(e.corpora);
  const auto fractions = parse_list<double>(e.fractions, "--fractions");
  const auto source_names =
      parse_names(e.sources, "--sources", {"enhanced", "guided", "vanilla", "random"});
  if (corpus_dirs.empty()) throw Failure(kUsage, "eval needs --corpus DIR");
  std::vector<CorpusPtr> corpora;
  for (const auto& dir : corpus_dirs) {
    if (!fs::is_directory(dir)) throw Failure(kIo, "corpus directory not found: " + dir);
    advsal_corpus* corpus = nullptr;
    check(advsal_corpus_load(dir.c_str(), &corpus), "corpus " + dir);
    corpora.emplace_back(corpus);
    // Stored images are f32; recompute predictions against the loaded model.
    check(advsal_corpus_refresh(corpus, model.get(), data.get()), "corpus " + dir);
  }
  const fs::path out = prepare_out(c.out);
  advsal_corpus* primary = corpora.front().get();

  advsal_pair_summary summary{};
  const std::size_t pairs = std::min(e.pairs, advsal_dataset_size(data.get()));
  check(advsal_eval_pair_analysis(model.get(), data.get(), pairs,
                                  (out / "pair_analysis.csv").string().c_str(),
                                  (out / "pair_histogram.csv").string().c_str(), &summary),
        "pair analysis");
  std::printf("pair analysis: %zu images, mean sim_ratio %.6f, avg_diff range [%.6f, %.6f]\n",
              summary.pairs, summary.mean_sim_ratio, summary.min_avg_diff, summary.max_avg_diff);

  if (advsal_corpus_success_count(primary) == 0) {
    throw Failure(kEmpty, "corpus " + corpus_dirs.front() +
                              " has no successful adversarial images; recovery, "
                              "discriminativity and case reports need at least one");
  }

  static const std::map<std::string, advsal_source> source_ids{
      {"enhanced", ADVSAL_SOURCE_ENHANCED},
      {"guided", ADVSAL_SOURCE_GUIDED},
      {"vanilla", ADVSAL_SOURCE_VANILLA},
      {"random", ADVSAL_SOURCE_RANDOM}};
  std::vector<advsal_source> sources;
  for (const auto& s : source_names) sources.push_back(source_ids.at(s));
  const auto means = channel_means(data.get());
  std::vector<double> acc(sources.size() * fractions.size());
  check(advsal_eval_recovery(model.get(), primary, means.data(), means.size(), sources.data(),
                             sources.size(), fractions.data(), fractions.size(),
                             e.perturb_mode == "noise" ? ADVSAL_PERTURB_NOISE
                                                       : ADVSAL_PERTURB_MEAN,
                             c.seed, (out / "recovery.csv").string().c_str(), acc.data()),
        "recovery");
  for (std::size_t s = 0; s < sources.size(); ++s) {
    double mean = 0.0;
    for (std::size_t f = 0; f < fractions.size(); ++f) mean += acc[s * fractions.size() + f];
    std::printf("recovery %-8s mean accuracy %.6f\n", source_names[s].c_str(),
                mean / static_cast<double>(fractions.size()));
  }

  double cos_enh = 0.0;
  double cos_guided = 0.0;
  check(advsal_eval_discriminativity(model.get(), data.get(), primary,
                                     (out / "discriminativity.csv").string().c_str(), &cos_enh,
                                     &cos_guided),
        "discriminativity");
  std::printf("clean vs adversarial cosine: enhanced %.6f, guided %.6f\n", cos_enh, cos_guided);

  std::size_t case_index = 0;
  if (e.case_index) {
    case_index = *e.case_index;
  } else {
    for (std::size_t i = 0; i < advsal_corpus_size(primary); ++i) {
      advsal_attack_result r{};
      check(advsal_corpus_entry(primary, i, &r), "corpus entry");
      if (r.success) {
        case_index = r.dataset_index;
        break;
      }
    }
  }
  std::vector<const advsal_corpus*> views;
  for (const auto& p : corpora) views.push_back(p.get());
  const advsal_method methods[] = {ADVSAL_METHOD_VANILLA, ADVSAL_METHOD_GUIDED,
                                   ADVSAL_METHOD_ENHANCED};
  std::size_t written = 0;
  check(advsal_eval_case_report(model.get(), data.get(), views.data(), views.size(), case_index,
                                methods, 3, (out / "case").string().c_str(), &written),
        "case report");
  std::printf("case report for image %zu: %zu maps in %s\n", case_index, written,
              (out / "case").string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saliency maps under adversarial attack: train, attack, saliency, eval"};
  app.option_defaults()->take_last();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(advsal_version()));

  Common common;
  TrainOpts train;
  AttackOpts attack;
  SaliencyOpts sal;
  EvalOpts eval;

  auto* t = app.add_subcommand("train", "Train a reference CNN with SGD");
  add_common(t, common, false);
  t->add_option("--arch", train.arch, "mnist or cifar (default: from dataset channels)")
      ->check(CLI::IsMember({"mnist", "cifar"}));
  t->add_option("--epochs", train.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--lr", train.lr)->capture_default_str()->check(CLI::NonNegativeNumber);
  t->add_option("--batch", train.batch)->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--eval-dataset", train.eval_dataset, "Held-out dataset for per-epoch accuracy");

  auto* a = app.add_subcommand("attack", "Build an adversarial corpus");
  add_common(a, common, true);
  a->add_option("--attack", attack.attack)
      ->capture_default_str()
      ->check(CLI::IsMember({"fgsm", "bim", "cw"}));
  a->add_option("--eps", attack.eps)->capture_default_str();
  a->add_option("--alpha", attack.alpha, "BIM step size")->capture_default_str();
  a->add_option("--iters", attack.iters)->capture_default_str();
  a->add_option("--cw-c", attack.cw_c)->capture_default_str();
  a->add_option("--cw-kappa", attack.cw_kappa)->capture_default_str();
  a->add_option("--cw-lr", attack.cw_lr)->capture_default_str();
  a->add_option("--cw-optimizer", attack.cw_optimizer)
      ->capture_default_str()
      ->check(CLI::IsMember({"adam", "gd"}));
  a->add_option("--count", attack.count, "Number of images to attack")->capture_default_str();

  auto* s = app.add_subcommand("saliency", "Render saliency maps for one image");
  add_common(s, common, true);
  s->add_option("--method", sal.methods, "vanilla, guided, enhanced (comma separated)")
      ->capture_default_str();
  s->add_option("--class", sal.classes, "Explained classes, comma separated (default: predicted)");
  s->add_option("--contrast-class", sal.contrast, "Contrast class for enhanced maps");
  s->add_option("--norm", sal.norm)
      ->capture_default_str()
      ->check(CLI::IsMember({"max", "energy", "channel-energy"}));
  s->add_option("--index", sal.index, "Image index within --dataset");
  s->add_option("--input", sal.input, "Raw f32 image dump (e.g. from an attack corpus)");

  auto* e = app.add_subcommand("eval", "Pair analysis, recovery curves, case reports");
  add_common(e, common, true);
  e->add_option("--corpus", eval.corpora,
                "Corpus directories, comma separated; the first feeds recovery and "
                "discriminativity");
  e->add_option("--fractions", eval.fractions)->capture_default_str();
  e->add_option("--perturb-mode", eval.perturb_mode)
      ->capture_default_str()
      ->check(CLI::IsMember({"mean", "noise"}));
  e->add_option("--sources", eval.sources, "enhanced, guided, vanilla, random (comma separated)")
      ->capture_default_str();
  e->add_option("--pairs", eval.pairs, "Images in the pair analysis")->capture_default_str();
  e->add_option("--case-index", eval.case_index, "Dataset index for the case report");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.what());
    return f.code;
  }

  try {
    if (common.threads > 0) advsal_set_threads(common.threads);
    if (t->parsed()) return cmd_train(common, train);
    if (a->parsed()) return cmd_attack(common, attack);
    if (s->parsed()) return cmd_saliency(common, sal);
    return cmd_eval(common, eval);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.what());
    return f.code;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kUsage;
  }
}
