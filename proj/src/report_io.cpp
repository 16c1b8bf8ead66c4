#include "report_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "errors.hpp"
#include "io_util.hpp"

namespace advsal {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string format_exact(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return format_real(v);
  return std::string(buf, end);
}

std::string train_trace_csv(std::span<const EpochStats> trace) {
  std::string out = "epoch,loss,train_accuracy,eval_accuracy\n";
  for (const auto& e : trace) {
    out += std::to_string(e.epoch) + "," + format_real(e.mean_loss) + "," +
           format_real(e.train_accuracy) + "," +
           (e.eval_accuracy ? format_real(*e.eval_accuracy) : std::string()) + "\n";
  }
  return out;
}

std::string pair_analysis_csv(const PairAnalysisReport& report) {
  std::string out = "image,class_k,class_m,sim_ratio,avg_diff\n";
  for (const auto& p : report.pairs) {
    out += std::to_string(p.image_index) + "," + std::to_string(p.class_k) + "," +
           std::to_string(p.class_m) + "," + format_real(p.sim_ratio) + "," +
           format_real(p.avg_diff) + "\n";
  }
  return out;
}

std::string pair_histogram_csv(const PairAnalysisReport& report) {
  std::string out = "metric,bin_lo,bin_hi,count\n";
  auto emit = [&](const char* name, const Histogram& h) {
    const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      out += std::string(name) + "," + format_real(h.lo + width * static_cast<double>(b)) + "," +
             format_real(h.lo + width * static_cast<double>(b + 1)) + "," +
             std::to_string(h.counts[b]) + "\n";
    }
  };
  emit("sim_ratio", report.sim_ratio_hist);
  emit("avg_diff", report.avg_diff_hist);
  return out;
}

std::string recovery_csv(std::span<const RecoveryCurve> curves) {
  std::string out = "fraction,source,accuracy\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.fractions.size(); ++i) {
      out += format_real(c.fractions[i]) + "," + source_name(c.source) + "," +
             format_real(c.accuracies[i]) + "\n";
    }
  }
  return out;
}

std::string discriminativity_csv(const DiscriminativityReport& report) {
  std::string out = "image,label,clean_pred,adv_pred,cos_enhanced,cos_guided\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.dataset_index) + "," + std::to_string(r.label) + "," +
           std::to_string(r.clean_prediction) + "," + std::to_string(r.adversarial_prediction) +
           "," + format_real(r.cos_enhanced) + "," + format_real(r.cos_guided) + "\n";
  }
  return out;
}

std::vector<std::uint8_t> render_heatmap_pgm(const Tensor& map) {
  const Shape& s = map.shape();
  const std::size_t plane = s.plane();
  std::vector<double> mag(plane, 0.0);
  for (std::size_t c = 0; c < s.n * s.c; ++c) {
    for (std::size_t j = 0; j < plane; ++j) mag[j] += std::abs(map[c * plane + j]);
  }
  double lo = 0.0;
  double hi = 0.0;
  if (!mag.empty()) {
    auto [mn, mx] = std::minmax_element(mag.begin(), mag.end());
    lo = *mn;
    hi = *mx;
  }
  const std::string header =
      "P5\n" + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + plane);
  for (double v : mag) {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    out.push_back(static_cast<std::uint8_t>(std::lround(t * 255.0)));
  }
  return out;
}

namespace {

void write_extents(ByteWriter& w, const Shape& s) {
  for (std::size_t e : {s.n, s.c, s.h, s.w}) {
    if (e > 0xffffffffu) throw InvalidArgument("raw dump: extent exceeds 32 bits");
    w.u32(static_cast<std::uint32_t>(e));
  }
}

Shape read_extents(ByteReader& r) { return Shape{r.u32(), r.u32(), r.u32(), r.u32()}; }

}  // namespace

std::vector<std::uint8_t> encode_raw_f64(const Tensor& t) {
  ByteWriter w;
  write_extents(w, t.shape());
  for (double v : t.data()) w.f64(v);
  return w.take();
}

Tensor decode_raw_f64(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "raw f64 dump");
  const Shape s = read_extents(r);
  if (r.remaining() != s.count() * 8) {
    throw FormatError("raw f64 dump: " + std::to_string(r.remaining()) +
                      " payload bytes for extents " + to_string(s));
  }
  Tensor t(s);
  for (double& v : t.data()) v = r.f64();
  return t;
}

std::vector<std::uint8_t> encode_raw_f32(const Tensor& t) {
  ByteWriter w;
  write_extents(w, t.shape());
  for (double v : t.data()) w.f32(static_cast<float>(v));
  return w.take();
}

Tensor decode_raw_f32(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "raw f32 tensor");
  const Shape s = read_extents(r);
  if (r.remaining() != s.count() * 4) {
    throw FormatError("raw f32 tensor: " + std::to_string(r.remaining()) +
                      " payload bytes for extents " + to_string(s));
  }
  Tensor t(s);
  for (double& v : t.data()) v = r.f32();
  return t;
}

void save_map_raw(const SaliencyMap& map, const std::filesystem::path& path) {
  write_file_atomic(path, encode_raw_f64(map.values));
}

SaliencyMap load_map_raw(const std::filesystem::path& path) {
  SaliencyMap m;
  try {
    m.values = decode_raw_f64(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

namespace {

std::string adv_file_name(std::size_t entry) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "adv_%05zu.f32", entry);
  return buf;
}

constexpr const char* kManifestHeader =
    "entry,dataset_index,label,clean_pred,adv_pred,success,attack,epsilon,alpha,iters,cw_c,"
    "cw_kappa,cw_lr,cw_opt,l2,linf,file";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T parse_number(const std::string& s, const char* field) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw FormatError(std::string("manifest: bad ") + field + " value '" + s + "'");
  }
  return v;
}

AttackFamily parse_family(const std::string& s) {
  for (AttackFamily f : {AttackFamily::FGSM, AttackFamily::BIM, AttackFamily::CW_L2}) {
    if (s == attack_name(f)) return f;
  }
  throw FormatError("manifest: unknown attack '" + s + "'");
}

CwOptimizer parse_optimizer(const std::string& s) {
  for (CwOptimizer o : {CwOptimizer::Adam, CwOptimizer::GradientDescent}) {
    if (s == optimizer_name(o)) return o;
  }
  throw FormatError("manifest: unknown optimizer '" + s + "'");
}

}  // namespace

std::string corpus_manifest_csv(const AdversarialCorpus& corpus) {
  const AttackConfig& c = corpus.config;
  std::string out = std::string(kManifestHeader) + "\n";
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& e = corpus.entries[i];
    const auto& r = e.result;
    out += std::to_string(i) + "," + std::to_string(e.dataset_index) + "," +
           std::to_string(r.label) + "," + std::to_string(r.original_prediction) + "," +
           std::to_string(r.adversarial_prediction) + "," + (r.success ? "1" : "0") + "," +
           attack_name(c.family) + "," + format_exact(c.epsilon) + "," +
           format_exact(c.step_size) + "," + std::to_string(c.iterations) + "," +
           format_exact(c.cw_c) + "," + format_exact(c.cw_confidence) + "," +
           format_exact(c.cw_lr) + "," + optimizer_name(c.cw_optimizer) + "," +
           format_real(r.l2) + "," + format_real(r.linf) + "," + adv_file_name(i) + "\n";
  }
  return out;
}

void save_corpus(const AdversarialCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    write_file_atomic(dir / adv_file_name(i), encode_raw_f32(corpus.entries[i].result.image));
  }
  write_file_atomic(dir / kManifestName, corpus_manifest_csv(corpus));
}

AdversarialCorpus load_corpus(const std::filesystem::path& dir) {
  const auto bytes = read_file_bytes(dir / kManifestName);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(kManifestHeader)) {
    throw FormatError((dir / kManifestName).string() + ": unexpected header");
  }
  AdversarialCorpus corpus;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 17) {
      throw FormatError((dir / kManifestName).string() + ": expected 17 fields, got " +
                        std::to_string(f.size()));
    }
    CorpusEntry e;
    e.dataset_index = parse_number<std::size_t>(f[1], "dataset_index");
    e.result.label = parse_number<int>(f[2], "label");
    e.result.original_prediction = parse_number<int>(f[3], "clean_pred");
    e.result.adversarial_prediction = parse_number<int>(f[4], "adv_pred");
    e.result.success = f[5] == "1";
    AttackConfig c;
    c.family = parse_family(f[6]);
    c.epsilon = parse_number<double>(f[7], "epsilon");
    c.step_size = parse_number<double>(f[8], "alpha");
    c.iterations = parse_number<std::size_t>(f[9], "iters");
    c.cw_c = parse_number<double>(f[10], "cw_c");
    c.cw_confidence = parse_number<double>(f[11], "cw_kappa");
    c.cw_lr = parse_number<double>(f[12], "cw_lr");
    c.cw_optimizer = parse_optimizer(f[13]);
    corpus.config = c;
    e.result.l2 = parse_number<double>(f[14], "l2");
    e.result.linf = parse_number<double>(f[15], "linf");
    const std::string& file = f[16];
    if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
      throw FormatError("manifest: file name must be local to the corpus directory");
    }
    try {
      e.result.image = decode_raw_f32(read_file_bytes(dir / file));
    } catch (const FormatError& err) {
      throw FormatError((dir / file).string() + ": " + err.what());
    }
    corpus.entries.push_back(std::move(e));
  }
  return corpus;
}

void refresh_corpus(const ModelGraph& model, const Dataset& clean, AdversarialCorpus& corpus) {
  for (auto& e : corpus.entries) {
    if (e.dataset_index >= clean.size()) {
      throw InvalidArgument("corpus entry refers to dataset index " +
                            std::to_string(e.dataset_index) + " beyond dataset size " +
                            std::to_string(clean.size()));
    }
    const Tensor x = clean.image(e.dataset_index);
    require_same_shape(x.shape(), e.result.image.shape(), "refresh_corpus");
    auto& r = e.result;
    r.label = clean.label(e.dataset_index);
    r.original_prediction = predict(model, x)[0];
    r.adversarial_prediction = predict(model, r.image)[0];
    r.success = r.adversarial_prediction != r.label;
    double sq = 0.0;
    double mx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = r.image[i] - x[i];
      sq += d * d;
      mx = std::max(mx, std::abs(d));
    }
    r.l2 = std::sqrt(sq);
    r.linf = mx;
  }
}

}  // namespace advsal
