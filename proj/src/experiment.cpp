#include "proxyad/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "proxyad/papc.hpp"
#include "proxyad/plot.hpp"

namespace proxyad {

namespace fs = std::filesystem;

namespace {

std::string sanitize_id(const std::string& id) {
  std::string out = id;
  std::replace(out.begin(), out.end(), '/', '_');
  return out;
}

std::string format_score(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

GrayscaleImage mask_to_image(const BinaryMask& mask) {
  GrayscaleImage out(mask.height, mask.width);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = mask.values[i] ? 1.0 : 0.0;
  }
  return out;
}

constexpr const char* kProxyManifest = "proxy_cache.manifest";

std::string proxy_cache_key(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "mode = " << proxy_mode_name(config.proxy_mode) << "\n";
  out << "n_superpixels = " << config.proxy.n_superpixels << "\n";
  out << "compactness = " << config.proxy.compactness << "\n";
  return out.str();
}

bool proxy_cache_valid(const ExperimentConfig& config) {
  std::ifstream in(fs::path(config.root) / kProxyManifest);
  if (!in) return false;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str() == proxy_cache_key(config);
}

fs::path sample_source_path(const ExperimentConfig& config, const std::string& split,
                            const LabeledSample& sample) {
  const std::string stem = sample.id.substr(sample.id.find('/') + 1);
  return fs::path(config.root) / split / label_name(sample.label) / stem;
}

std::optional<ProxyImage> load_cached_proxy(const ExperimentConfig& config,
                                            const std::string& split,
                                            const LabeledSample& sample) {
  const fs::path base = sample_source_path(config, split, sample);
  const fs::path main_path = base.string() + "_proxy.png";
  if (!fs::exists(main_path)) return std::nullopt;
  const int channels = proxy_channel_count(config.proxy_mode);
  ProxyImage proxy(sample.image.height, sample.image.width, channels);
  const GrayscaleImage main = read_png_gray(main_path.string());
  if (main.height != proxy.height || main.width != proxy.width) return std::nullopt;
  std::copy(main.pixels.begin(), main.pixels.end(), proxy.data.begin());
  if (channels == 2) {
    const fs::path edge_path = base.string() + "_proxy_edge.png";
    if (!fs::exists(edge_path)) return std::nullopt;
    const GrayscaleImage edge = read_png_gray(edge_path.string());
    if (edge.height != proxy.height || edge.width != proxy.width) return std::nullopt;
    std::copy(edge.pixels.begin(), edge.pixels.end(),
              proxy.data.begin() + static_cast<std::ptrdiff_t>(proxy.height) * proxy.width);
  }
  return proxy;
}

std::vector<ProxyImage> proxies_for(const ExperimentConfig& config,
                                    const std::vector<LabeledSample>& samples,
                                    const std::string& split, bool try_cache) {
  std::vector<ProxyImage> out(samples.size());
  const bool cache_ok = try_cache && config.source == "directory" &&
                        proxy_cache_valid(config);
  parallel_for(static_cast<int>(samples.size()), [&](int i) {
    if (cache_ok) {
      if (auto cached = load_cached_proxy(config, split, samples[i])) {
        out[i] = std::move(*cached);
        return;
      }
    }
    out[i] = make_proxy(samples[i].image, config.proxy_mode, config.proxy);
  });
  return out;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
  validate_config(config);
  PreparedData data;
  if (config.source == "phantom") {
    PhantomSpec spec = config.phantom;
    spec.seed = config.seed;
    PhantomSet set = generate_phantoms(spec);
    data.train_samples = std::move(set.train);
    data.test_samples = std::move(set.test);
  } else {
    data.train_samples = load_dataset(config.root, "train");
    std::erase_if(data.train_samples,
                  [](const LabeledSample& s) { return s.label != Label::normal; });
    if (data.train_samples.empty()) {
      throw DataError("no normal training images in " + config.root);
    }
    data.test_samples = load_dataset(config.root, "test");
  }

  const std::vector<ProxyImage> train_proxies =
      proxies_for(config, data.train_samples, "train", true);
  const std::vector<ProxyImage> test_proxies =
      proxies_for(config, data.test_samples, "test", true);

  data.train.resize(data.train_samples.size());
  for (std::size_t i = 0; i < data.train_samples.size(); ++i) {
    data.train[i].image = tensor_from_image(data.train_samples[i].image);
    data.train[i].proxy = config.ablation.use_si_proxy
                              ? tensor_from_proxy(train_proxies[i])
                              : data.train[i].image;
  }
  data.test_images.resize(data.test_samples.size());
  data.test_proxies.resize(data.test_samples.size());
  for (std::size_t i = 0; i < data.test_samples.size(); ++i) {
    data.test_images[i] = tensor_from_image(data.test_samples[i].image);
    data.test_proxies[i] = tensor_from_proxy(test_proxies[i]);
  }
  return data;
}

TrainedModel train_model(const ExperimentConfig& config, const PreparedData& data,
                         TrainLogs* logs) {
  TrainedModel model;
  model.ablation = config.ablation;
  model.ablation.proxy_mode = config.proxy_mode;

  Stage1Result stage1 = train_stage1_proxy(data.train, make_train_config(config, false));
  model.pem = std::move(stage1.pem);
  if (logs) logs->stage1 = std::move(stage1.epoch_loss);

  if (config.ablation.use_si_proxy) {
    Stage2Result stage2 =
        train_stage2_recon(data.train, model.pem, make_train_config(config, true));
    model.irm = std::move(stage2.irm);
    model.disc = std::move(stage2.disc);
    if (logs) logs->stage2 = std::move(stage2.epochs);
  }
  return model;
}

std::vector<AnomalyRecord> score_dataset(const TrainedModel& model,
                                         const PreparedData& data) {
  std::vector<AnomalyRecord> records(data.test_samples.size());
  parallel_for(static_cast<int>(data.test_samples.size()), [&](int i) {
    const Tensor& image = data.test_images[i];
    AnomalyRecord& rec = records[i];
    rec.id = data.test_samples[i].id;
    rec.label = data.test_samples[i].label;
    rec.lesion_mask = data.test_samples[i].lesion_mask;

    const PemOutput pem_out = forward_proxy_module(model.pem, image, nullptr);
    const Tensor reconstruction =
        model.irm ? forward_recon_module(*model.irm, pem_out.p_hat, nullptr)
                  : pem_out.p_hat;

    rec.a_img = score_image_latent(model.pem.enc, image, reconstruction);
    rec.a_img_pixelspace = score_image_pixelspace(image, reconstruction);
    rec.a_si_error = score_si_error(pem_out.p_hat, data.test_proxies[i]);
    rec.a_pix = score_pixel(image_from_tensor(image),
                            image_from_tensor(reconstruction));
  });
  return records;
}

MetricsReport evaluate_records(const std::vector<AnomalyRecord>& records,
                               bool score_in_latent, double threshold) {
  std::vector<double> scores(records.size());
  std::vector<Label> labels(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    scores[i] = score_in_latent ? records[i].a_img : records[i].a_img_pixelspace;
    labels[i] = records[i].label;
  }

  MetricsReport report;
  report.threshold = threshold;
  report.auc = compute_auc(scores, labels);
  const AccF1 accf1 = compute_acc_f1(scores, labels, threshold);
  report.acc = accf1.acc;
  report.f1 = accf1.f1;
  report.gap = compute_gap(scores, labels);

  // Pixel-level metrics when any lesion mask exists. The paper's pixel
  // threshold 0.5 applies to the raw |I - I_hat| map.
  const bool any_mask = std::any_of(records.begin(), records.end(),
      [](const AnomalyRecord& r) { return r.lesion_mask.has_value(); });
  if (any_mask) {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    double pos_rank_auc_sum = 0.0;
    int per_image_count = 0;
    std::vector<double> pooled_scores;
    std::vector<Label> pooled_labels;
    for (const AnomalyRecord& rec : records) {
      std::vector<double> img_scores;
      std::vector<Label> img_labels;
      img_scores.reserve(rec.a_pix.pixels.size());
      for (std::size_t p = 0; p < rec.a_pix.pixels.size(); ++p) {
        const bool lesion = rec.lesion_mask && rec.lesion_mask->values[p];
        const double s = rec.a_pix.pixels[p];
        pooled_scores.push_back(s);
        pooled_labels.push_back(lesion ? Label::abnormal : Label::normal);
        img_scores.push_back(s);
        img_labels.push_back(lesion ? Label::abnormal : Label::normal);
        const bool predicted = s >= 0.5;
        if (predicted && lesion) ++tp;
        else if (predicted && !lesion) ++fp;
        else if (!predicted && lesion) ++fn;
        else ++tn;
      }
      if (rec.lesion_mask && rec.lesion_mask->count_positive() > 0 &&
          rec.lesion_mask->count_positive() < rec.a_pix.pixels.size()) {
        pos_rank_auc_sum += compute_auc(img_scores, img_labels);
        ++per_image_count;
      }
    }
    report.pixel_auc_pooled = compute_auc(pooled_scores, pooled_labels);
    if (per_image_count > 0) {
      report.pixel_auc_per_image_mean = pos_rank_auc_sum / per_image_count;
    }
    const std::size_t total = tp + tn + fp + fn;
    report.pixel_acc = static_cast<double>(tp + tn) / static_cast<double>(total);
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    report.pixel_f1 =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return report;
}

void write_scores_csv(const std::string& path, const std::vector<AnomalyRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "id,label,a_img,a_img_pixelspace,a_si_error\n";
  for (const AnomalyRecord& rec : records) {
    out << rec.id << "," << label_name(rec.label) << "," << format_score(rec.a_img)
        << "," << format_score(rec.a_img_pixelspace) << ","
        << format_score(rec.a_si_error) << "\n";
  }
}

std::vector<ScoreRow> read_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "id,label,a_img,a_img_pixelspace,a_si_error") {
    throw DataError("unexpected scores.csv header in " + path);
  }
  std::vector<ScoreRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ScoreRow row;
    std::string label, a, b, c;
    if (!std::getline(ls, row.id, ',') || !std::getline(ls, label, ',') ||
        !std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c)) {
      throw DataError("malformed scores row: " + line);
    }
    if (label == "normal") row.label = Label::normal;
    else if (label == "abnormal") row.label = Label::abnormal;
    else throw DataError("unknown label in scores.csv: " + label);
    row.a_img = std::stod(a);
    row.a_img_pixelspace = std::stod(b);
    row.a_si_error = std::stod(c);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_metrics_report(const std::string& out_dir, const MetricsReport& report,
                          const std::string& tag, bool score_in_latent) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "metrics.txt");
    out << "ablation: " << tag << "\n";
    out << "score space: " << (score_in_latent ? "latent" : "image") << "\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "AUC %.4f  ACC %.4f  F1 %.4f  (threshold %.2f)\n", report.auc,
                  report.acc, report.f1, report.threshold);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "score means: normal %.4f  abnormal %.4f  gap %.4f\n",
                  report.gap.mean_normal, report.gap.mean_abnormal, report.gap.gap);
    out << buf;
    if (report.pixel_auc_pooled) {
      std::snprintf(buf, sizeof(buf), "pixel AUC (pooled) %.4f\n", *report.pixel_auc_pooled);
      out << buf;
    }
    if (report.pixel_auc_per_image_mean) {
      std::snprintf(buf, sizeof(buf), "pixel AUC (per-image mean) %.4f\n",
                    *report.pixel_auc_per_image_mean);
      out << buf;
    }
    if (report.pixel_acc) {
      std::snprintf(buf, sizeof(buf), "pixel ACC %.4f  pixel F1 %.4f\n",
                    *report.pixel_acc, *report.pixel_f1);
      out << buf;
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "metrics.kv");
    out << "ablation = " << tag << "\n";
    out << "score_space = " << (score_in_latent ? "latent" : "image") << "\n";
    out << "auc = " << format_score(report.auc) << "\n";
    out << "acc = " << format_score(report.acc) << "\n";
    out << "f1 = " << format_score(report.f1) << "\n";
    out << "threshold = " << format_score(report.threshold) << "\n";
    out << "mean_normal = " << format_score(report.gap.mean_normal) << "\n";
    out << "mean_abnormal = " << format_score(report.gap.mean_abnormal) << "\n";
    out << "gap = " << format_score(report.gap.gap) << "\n";
    if (report.pixel_auc_pooled) {
      out << "pixel_auc_pooled = " << format_score(*report.pixel_auc_pooled) << "\n";
    }
    if (report.pixel_auc_per_image_mean) {
      out << "pixel_auc_per_image_mean = "
          << format_score(*report.pixel_auc_per_image_mean) << "\n";
    }
    if (report.pixel_acc) {
      out << "pixel_acc = " << format_score(*report.pixel_acc) << "\n";
      out << "pixel_f1 = " << format_score(*report.pixel_f1) << "\n";
    }
  }
}

void write_manifest(const std::string& out_dir, const ExperimentConfig& config) {
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "manifest.txt");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, config_hash(config));
  out << "config_hash = " << buf << "\n\n";
  out << dump_config(config);
}

std::string ablation_tag(const AblationConfig& ablation) {
  if (!ablation.use_si_proxy) {
    return ablation.use_memory ? "EncDec+mem" : "EncDec";
  }
  std::string tag = "2xEncDec+";
  tag += proxy_mode_name(ablation.proxy_mode);
  if (ablation.use_memory) tag += "+mem";
  if (ablation.use_repairing) tag += "+rep";
  if (ablation.score_in_latent) tag += "+lat";
  return tag;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_phantom_gen(const ExperimentConfig& config) {
  validate_config(config);
  PhantomSpec spec = config.phantom;
  spec.seed = config.seed;
  const PhantomSet set = generate_phantoms(spec);
  export_dataset(config.output_dir, "train", set.train);
  export_dataset(config.output_dir, "test", set.test);
  write_manifest(config.output_dir, config);
  std::printf("phantom-gen: wrote %zu train + %zu test samples to %s\n",
              set.train.size(), set.test.size(), config.output_dir.c_str());
}

void cmd_prepare(const ExperimentConfig& config, int emit_pseudo) {
  validate_config(config);
  if (config.source == "directory") {
    for (const std::string split : {"train", "test"}) {
      std::vector<LabeledSample> samples = load_dataset(config.root, split);
      const std::vector<ProxyImage> proxies = proxies_for(config, samples, split, false);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const fs::path base = sample_source_path(config, split, samples[i]);
        write_png_gray16(base.string() + "_proxy.png",
                         image_from_tensor(tensor_from_proxy(proxies[i]), 0));
        if (proxies[i].channels == 2) {
          write_png_gray16(base.string() + "_proxy_edge.png", proxies[i].channel(1));
        }
      }
      std::printf("prepare: cached %zu %s proxies\n", samples.size(), split.c_str());
    }
    std::ofstream manifest(fs::path(config.root) / kProxyManifest);
    manifest << proxy_cache_key(config);
  }

  if (emit_pseudo > 0) {
    PreparedData data = prepare_data(config);
    if (data.train.empty()) throw DataError("prepare: no training data");
    const fs::path dir = fs::path(config.output_dir) / "pseudo";
    fs::create_directories(dir);
    Rng rng(Rng::derive(config.seed, 0x9A9C));
    const int n = static_cast<int>(data.train.size());
    for (int i = 0; i < emit_pseudo; ++i) {
      const int base_index = static_cast<int>(rng.uniform_int(0, n - 1));
      int source = base_index;
      if (config.papc_source == PapcSource::other && n > 1) {
        source = static_cast<int>(rng.uniform_int(0, n - 2));
        if (source >= base_index) ++source;
      }
      const ProxyImage base = proxy_from_tensor(data.train[base_index].proxy);
      PseudoProxy pseudo = construct_pseudo_proxy(
          base, data.train_samples[source].image, rng);
      char name[64];
      std::snprintf(name, sizeof(name), "pseudo_%03d", i);
      write_png_gray16((dir / (std::string(name) + ".png")).string(),
                       pseudo.proxy_prime.channel(0));
      if (pseudo.proxy_prime.channels == 2) {
        write_png_gray16((dir / (std::string(name) + "_edge.png")).string(),
                         pseudo.proxy_prime.channel(1));
      }
      write_png_gray8((dir / (std::string(name) + "_mask.png")).string(),
                      mask_to_image(pseudo.mask));
    }
    std::printf("prepare: wrote %d pseudo proxies to %s\n", emit_pseudo,
                dir.string().c_str());
  }
  write_manifest(config.output_dir, config);
}

namespace {

MetaMap model_meta(const ExperimentConfig& config) {
  MetaMap meta;
  meta["proxy_mode"] = proxy_mode_name(config.proxy_mode);
  meta["use_si_proxy"] = config.ablation.use_si_proxy ? "1" : "0";
  meta["score_in_latent"] = config.ablation.score_in_latent ? "1" : "0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, config_hash(config));
  meta["config_hash"] = buf;
  return meta;
}

}  // namespace

void cmd_train_proxy(const ExperimentConfig& config, const std::string& out_ckpt) {
  PreparedData data = prepare_data(config);
  Stage1Result result = train_stage1_proxy(data.train, make_train_config(config, false));
  if (const fs::path parent = fs::path(out_ckpt).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  save_pem_checkpoint(out_ckpt, result.pem, model_meta(config));

  std::ofstream csv(out_ckpt + ".loss.csv", std::ios::binary);
  csv << "epoch,loss_proxy\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    csv << e + 1 << "," << format_score(result.epoch_loss[e]) << "\n";
  }
  std::printf("train-proxy: %d epochs, final loss %.6f -> %s\n", config.epochs_proxy,
              result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back(),
              out_ckpt.c_str());
}

void cmd_train_recon(const ExperimentConfig& config, const std::string& pem_ckpt,
                     const std::string& out_ckpt) {
  if (!config.ablation.use_si_proxy) {
    throw ConfigError(
        "train-recon: ablation.use_si_proxy = false configures a single-module "
        "model with no reconstruction stage");
  }
  PreparedData data = prepare_data(config);
  const PemCheckpoint pem = load_pem_checkpoint(pem_ckpt);
  Stage2Result result =
      train_stage2_recon(data.train, pem.pem, make_train_config(config, true));
  if (const fs::path parent = fs::path(out_ckpt).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  save_irm_checkpoint(out_ckpt, result.irm, result.disc, model_meta(config));

  std::ofstream csv(out_ckpt + ".loss.csv", std::ios::binary);
  csv << "epoch,loss_rec,loss_global,loss_local,disc_loss\n";
  for (std::size_t e = 0; e < result.epochs.size(); ++e) {
    const Stage2EpochLog& log = result.epochs[e];
    csv << e + 1 << "," << format_score(log.l_rec) << "," << format_score(log.l_global)
        << "," << format_score(log.l_local) << "," << format_score(log.d_loss) << "\n";
  }
  std::printf("train-recon: %d epochs, final L_rec %.6f -> %s\n", config.epochs_recon,
              result.epochs.empty() ? 0.0 : result.epochs.back().l_rec,
              out_ckpt.c_str());
}

void cmd_score(const ExperimentConfig& config, const std::string& pem_ckpt,
               const std::string& irm_ckpt, const std::string& out_dir) {
  PreparedData data = prepare_data(config);
  TrainedModel model;
  model.ablation = config.ablation;
  model.ablation.proxy_mode = config.proxy_mode;
  PemCheckpoint pem = load_pem_checkpoint(pem_ckpt);
  model.pem = std::move(pem.pem);
  if (!irm_ckpt.empty()) {
    IrmCheckpoint irm = load_irm_checkpoint(irm_ckpt);
    model.irm = std::move(irm.irm);
    model.disc = std::move(irm.disc);
  } else if (config.ablation.use_si_proxy) {
    throw ConfigError("score: proxy-bridged configuration needs --irm");
  }

  const std::vector<AnomalyRecord> records = score_dataset(model, data);
  fs::create_directories(out_dir);
  write_scores_csv((fs::path(out_dir) / "scores.csv").string(), records);

  const fs::path heat_dir = fs::path(out_dir) / "heatmaps";
  fs::create_directories(heat_dir);
  for (const AnomalyRecord& rec : records) {
    const std::string stem = sanitize_id(rec.id);
    write_png_gray16((heat_dir / (stem + "_apix.png")).string(), rec.a_pix);
    if (rec.lesion_mask) {
      write_png_gray8((heat_dir / (stem + "_mask.png")).string(),
                      mask_to_image(*rec.lesion_mask));
    }
  }

  // Reconstruction grid: I | P | P_hat | I_hat | A_pix for a few samples.
  std::vector<std::vector<GrayscaleImage>> grid;
  const std::size_t n_grid = std::min<std::size_t>(8, data.test_samples.size());
  for (std::size_t i = 0; i < n_grid; ++i) {
    // Spread across the test set so both classes appear.
    const std::size_t index = i * data.test_samples.size() / n_grid;
    const Tensor& image = data.test_images[index];
    const PemOutput out = forward_proxy_module(model.pem, image, nullptr);
    const Tensor recon = model.irm ? forward_recon_module(*model.irm, out.p_hat, nullptr)
                                   : out.p_hat;
    grid.push_back({image_from_tensor(image),
                    image_from_tensor(data.test_proxies[index], 0),
                    image_from_tensor(out.p_hat, 0), image_from_tensor(recon),
                    records[index].a_pix});
  }
  if (!grid.empty()) {
    save_image_grid((fs::path(out_dir) / "recon_grid.png").string(), grid);
  }

  // Score histograms per class (latent-space score).
  std::vector<double> normal_scores, abnormal_scores;
  for (const AnomalyRecord& rec : records) {
    (rec.label == Label::normal ? normal_scores : abnormal_scores).push_back(rec.a_img);
  }
  if (!normal_scores.empty() && !abnormal_scores.empty()) {
    plot_score_histograms((fs::path(out_dir) / "score_hist.png").string(),
                          normal_scores, abnormal_scores);
  }
  write_manifest(out_dir, config);
  std::printf("score: wrote %zu records to %s\n", records.size(), out_dir.c_str());
}

MetricsReport cmd_eval(const ExperimentConfig& config, const std::string& scores_csv,
                       const std::string& heatmap_dir, const std::string& out_dir) {
  const std::vector<ScoreRow> rows = read_scores_csv(scores_csv);
  std::vector<AnomalyRecord> records(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    records[i].id = rows[i].id;
    records[i].label = rows[i].label;
    records[i].a_img = rows[i].a_img;
    records[i].a_img_pixelspace = rows[i].a_img_pixelspace;
    records[i].a_si_error = rows[i].a_si_error;
    if (!heatmap_dir.empty()) {
      const std::string stem = sanitize_id(rows[i].id);
      const fs::path apix = fs::path(heatmap_dir) / (stem + "_apix.png");
      if (fs::exists(apix)) {
        records[i].a_pix = read_png_gray(apix.string());
        const fs::path mask = fs::path(heatmap_dir) / (stem + "_mask.png");
        if (fs::exists(mask)) {
          const GrayscaleImage raw = read_png_gray(mask.string());
          BinaryMask m(raw.height, raw.width);
          for (std::size_t p = 0; p < raw.pixels.size(); ++p) {
            m.values[p] = raw.pixels[p] >= 0.5 ? 1 : 0;
          }
          records[i].lesion_mask = std::move(m);
        }
      }
    }
  }
  // Pixel metrics need every record to carry a map; drop them otherwise.
  const bool maps_complete = !heatmap_dir.empty() &&
      std::all_of(records.begin(), records.end(),
                  [](const AnomalyRecord& r) { return !r.a_pix.pixels.empty(); });
  if (!maps_complete) {
    for (AnomalyRecord& rec : records) {
      rec.a_pix = GrayscaleImage();
      rec.lesion_mask.reset();
    }
  }

  const MetricsReport report =
      evaluate_records(records, config.ablation.score_in_latent);
  write_metrics_report(out_dir, report, ablation_tag(config.ablation),
                       config.ablation.score_in_latent);
  write_manifest(out_dir, config);
  std::printf("eval: AUC %.4f ACC %.4f F1 %.4f gap %.4f -> %s\n", report.auc,
              report.acc, report.f1, report.gap.gap, out_dir.c_str());
  return report;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base_config,
                                      const std::string& out_dir) {
  struct RowSpec {
    int index;
    bool use_si, use_mem, use_rep, use_lat;
  };
  // Rows 7 and 8 share one trained model; row 2 (the external soft-attention
  // memory baseline) is out of scope.
  static const RowSpec kRows[] = {
      {1, false, false, false, false}, {3, false, true, false, false},
      {4, true, false, false, false},  {5, true, true, false, false},
      {6, true, false, true, false},   {7, true, true, true, false},
      {8, true, true, true, true},
  };

  std::vector<AblationRow> rows;
  TrainedModel shared_78;
  bool have_78 = false;
  for (const RowSpec& spec : kRows) {
    ExperimentConfig config = base_config;
    config.ablation.use_si_proxy = spec.use_si;
    config.ablation.use_memory = spec.use_mem;
    config.ablation.use_repairing = spec.use_rep;
    config.ablation.score_in_latent = spec.use_lat;
    validate_config(config);

    std::vector<AnomalyRecord> records;
    if (spec.index == 8 && have_78) {
      records = score_dataset(shared_78, prepare_data(config));
    } else {
      PreparedData data = prepare_data(config);
      TrainedModel model = train_model(config, data);
      records = score_dataset(model, data);
      if (spec.index == 7) {
        shared_78 = std::move(model);
        have_78 = true;
      }
    }
    const MetricsReport report = evaluate_records(records, spec.use_lat);
    AblationRow row;
    row.index = spec.index;
    row.tag = ablation_tag(config.ablation);
    row.auc = report.auc;
    row.acc = report.acc;
    row.f1 = report.f1;
    row.gap = report.gap.gap;
    rows.push_back(row);
    std::printf("ablate row %d  %-28s AUC %.4f ACC %.4f F1 %.4f gap %.4f\n",
                row.index, row.tag.c_str(), row.auc, row.acc, row.f1, row.gap);
  }

  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "ablation.csv");
  csv << "row,tag,auc,acc,f1,gap\n";
  for (const AblationRow& row : rows) {
    csv << row.index << "," << row.tag << "," << format_score(row.auc) << ","
        << format_score(row.acc) << "," << format_score(row.f1) << ","
        << format_score(row.gap) << "\n";
  }
  write_manifest(out_dir, base_config);
  return rows;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& base_config,
                                  const std::string& parameter,
                                  const std::vector<double>& values,
                                  const std::string& out_dir) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  std::vector<SweepPoint> points;
  for (double value : values) {
    ExperimentConfig config = base_config;
    if (parameter == "memory_size") {
      config.memory_k = static_cast<int>(value);
      if (config.memory_k < 1) throw ConfigError("sweep: memory_size must be >= 1");
    } else if (parameter == "lambda_global") {
      config.weights.lambda_global = value;
    } else if (parameter == "lambda_local") {
      config.weights.lambda_local = value;
    } else {
      throw ConfigError("sweep: unknown parameter '" + parameter +
                        "' (memory_size, lambda_global, lambda_local)");
    }
    validate_config(config);
    PreparedData data = prepare_data(config);
    TrainedModel model = train_model(config, data);
    const std::vector<AnomalyRecord> records = score_dataset(model, data);
    const MetricsReport report =
        evaluate_records(records, config.ablation.score_in_latent);
    points.push_back({value, report.auc});
    std::printf("sweep %s = %g -> AUC %.4f\n", parameter.c_str(), value, report.auc);
  }

  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / ("sweep_" + parameter + ".csv"));
  csv << parameter << ",auc\n";
  for (const SweepPoint& p : points) {
    csv << format_score(p.value) << "," << format_score(p.auc) << "\n";
  }
  std::vector<double> xs, ys;
  for (const SweepPoint& p : points) {
    xs.push_back(p.value);
    ys.push_back(p.auc);
  }
  plot_line_chart((fs::path(out_dir) / ("sweep_" + parameter + ".png")).string(), xs, ys);
  write_manifest(out_dir, base_config);
  return points;
}

}  // namespace proxyad
