#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proxyad/checkpoint.hpp"
#include "proxyad/config.hpp"
#include "proxyad/scoring.hpp"
#include "proxyad/training.hpp"

namespace proxyad {

// Dataset tensors ready for training and scoring.
struct PreparedData {
  std::vector<LabeledSample> train_samples;
  std::vector<LabeledSample> test_samples;
  std::vector<TrainSample> train;     // targets follow the ablation wiring
  std::vector<Tensor> test_images;
  std::vector<Tensor> test_proxies;   // proxy-mode rendering of each test image
};

PreparedData prepare_data(const ExperimentConfig& config);

struct TrainedModel {
  ProxyExtractionModule pem;
  std::optional<ImageReconstructionModule> irm;
  std::optional<Discriminator> disc;
  AblationConfig ablation;
};

struct TrainLogs {
  std::vector<double> stage1;
  std::vector<Stage2EpochLog> stage2;
};

// Stage 1 (and stage 2 for proxy-bridged configurations) on the prepared
// training set.
TrainedModel train_model(const ExperimentConfig& config, const PreparedData& data,
                         TrainLogs* logs = nullptr);

std::vector<AnomalyRecord> score_dataset(const TrainedModel& model,
                                         const PreparedData& data);

// Image-level metrics on the configured score (latent or pixel-space), plus
// pixel-level metrics when lesion masks are present.
MetricsReport evaluate_records(const std::vector<AnomalyRecord>& records,
                               bool score_in_latent, double threshold = 0.5);

void write_scores_csv(const std::string& path, const std::vector<AnomalyRecord>& records);

struct ScoreRow {
  std::string id;
  Label label;
  double a_img, a_img_pixelspace, a_si_error;
};
std::vector<ScoreRow> read_scores_csv(const std::string& path);

void write_metrics_report(const std::string& out_dir, const MetricsReport& report,
                          const std::string& ablation_tag, bool score_in_latent);

void write_manifest(const std::string& out_dir, const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Command implementations backing the CLI.

void cmd_phantom_gen(const ExperimentConfig& config);
void cmd_prepare(const ExperimentConfig& config, int emit_pseudo);
void cmd_train_proxy(const ExperimentConfig& config, const std::string& out_ckpt);
void cmd_train_recon(const ExperimentConfig& config, const std::string& pem_ckpt,
                     const std::string& out_ckpt);
void cmd_score(const ExperimentConfig& config, const std::string& pem_ckpt,
               const std::string& irm_ckpt, const std::string& out_dir);
MetricsReport cmd_eval(const ExperimentConfig& config, const std::string& scores_csv,
                       const std::string& heatmap_dir, const std::string& out_dir);

struct AblationRow {
  int index = 0;       // Table row number
  std::string tag;
  double auc = 0.0;
  double acc = 0.0;
  double f1 = 0.0;
  double gap = 0.0;
};

// Rows {1, 3, 4, 5, 6, 7, 8}: same data and seed, only the ablation flags
// change. Rows 7 and 8 share one trained model and differ in scoring space.
std::vector<AblationRow> run_ablation(const ExperimentConfig& config,
                                      const std::string& out_dir);

struct SweepPoint {
  double value = 0.0;
  double auc = 0.0;
};

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config,
                                  const std::string& parameter,
                                  const std::vector<double>& values,
                                  const std::string& out_dir);

std::string ablation_tag(const AblationConfig& ablation);

}  // namespace proxyad
