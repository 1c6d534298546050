#include "proxyad/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace proxyad {

namespace {

std::string trim(const std::string& s) {
  const std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: expected bool for " + key + ", got '" + value + "'");
}

int parse_int(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: expected integer for " + key + ", got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: expected unsigned integer for " + key + ", got '" + value + "'");
  }
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: expected number for " + key + ", got '" + value + "'");
  }
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

// Assigns one fully-qualified key. The single switchboard used by both the
// parser and CLI overrides.
void assign(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "data.source") {
    if (value != "phantom" && value != "directory") {
      throw ConfigError("config: data.source must be phantom or directory");
    }
    c.source = value;
  } else if (key == "data.root") {
    c.root = value;
  } else if (key == "data.image_size") {
    c.phantom.image_size = parse_int(value, key);
  } else if (key == "data.n_train_normal") {
    c.phantom.n_train_normal = parse_int(value, key);
  } else if (key == "data.n_test_normal") {
    c.phantom.n_test_normal = parse_int(value, key);
  } else if (key == "data.n_test_abnormal") {
    c.phantom.n_test_abnormal = parse_int(value, key);
  } else if (key == "data.lesion_radius_min") {
    c.phantom.lesion_radius_min = parse_double(value, key);
  } else if (key == "data.lesion_radius_max") {
    c.phantom.lesion_radius_max = parse_double(value, key);
  } else if (key == "data.lesion_contrast_min") {
    c.phantom.lesion_contrast_min = parse_double(value, key);
  } else if (key == "data.lesion_contrast_max") {
    c.phantom.lesion_contrast_max = parse_double(value, key);
  } else if (key == "data.noise_sigma") {
    c.phantom.noise_sigma = parse_double(value, key);
  } else if (key == "proxy.mode") {
    c.proxy_mode = proxy_mode_from_name(value);
  } else if (key == "proxy.n_superpixels") {
    c.proxy.n_superpixels = parse_int(value, key);
  } else if (key == "proxy.compactness") {
    c.proxy.compactness = parse_double(value, key);
  } else if (key == "proxy.slic_iters") {
    c.proxy.slic_iters = parse_int(value, key);
  } else if (key == "proxy.smooth_sigma") {
    c.proxy.smooth_sigma = parse_double(value, key);
  } else if (key == "proxy.patch_size") {
    c.proxy.patch_size = parse_int(value, key);
  } else if (key == "memory.k") {
    c.memory_k = parse_int(value, key);
  } else if (key == "memory.d") {
    c.memory_d = parse_int(value, key);
  } else if (key == "memory.gamma") {
    c.memory_gamma = parse_double(value, key);
  } else if (key == "weights.lambda_g") {
    c.weights.lambda_g = parse_double(value, key);
  } else if (key == "weights.lambda_global") {
    c.weights.lambda_global = parse_double(value, key);
  } else if (key == "weights.lambda_local") {
    c.weights.lambda_local = parse_double(value, key);
  } else if (key == "train.learning_rate") {
    c.learning_rate = parse_double(value, key);
  } else if (key == "train.epochs_proxy") {
    c.epochs_proxy = parse_int(value, key);
  } else if (key == "train.epochs_recon") {
    c.epochs_recon = parse_int(value, key);
  } else if (key == "train.batch_size") {
    c.batch_size = parse_int(value, key);
  } else if (key == "train.seed") {
    c.seed = parse_u64(value, key);
    c.phantom.seed = c.seed;
  } else if (key == "train.base_channels") {
    c.base_channels = parse_int(value, key);
  } else if (key == "train.n_downsamples") {
    c.n_downsamples = parse_int(value, key);
  } else if (key == "train.disc_base_channels") {
    c.disc_base_channels = parse_int(value, key);
  } else if (key == "train.disc_layers") {
    c.disc_layers = parse_int(value, key);
  } else if (key == "train.recon_train_input") {
    if (value == "predicted") c.recon_train_input = ReconTrainInput::predicted;
    else if (value == "slic") c.recon_train_input = ReconTrainInput::slic;
    else throw ConfigError("config: train.recon_train_input must be predicted or slic");
  } else if (key == "train.papc_source") {
    if (value == "other") c.papc_source = PapcSource::other;
    else if (value == "self") c.papc_source = PapcSource::self;
    else throw ConfigError("config: train.papc_source must be other or self");
  } else if (key == "ablation.use_si_proxy") {
    c.ablation.use_si_proxy = parse_bool(value, key);
  } else if (key == "ablation.use_memory") {
    c.ablation.use_memory = parse_bool(value, key);
  } else if (key == "ablation.use_repairing") {
    c.ablation.use_repairing = parse_bool(value, key);
  } else if (key == "ablation.score_in_latent") {
    c.ablation.score_in_latent = parse_bool(value, key);
  } else if (key == "output.dir") {
    c.output_dir = value;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config: malformed section at line " + std::to_string(line_no));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: expected key = value at line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError("config: key '" + key + "' outside any section");
    }
    assign(config, section + "." + key, value);
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string dump_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[data]\n";
  out << "source = " << c.source << "\n";
  out << "root = " << c.root << "\n";
  out << "image_size = " << c.phantom.image_size << "\n";
  out << "n_train_normal = " << c.phantom.n_train_normal << "\n";
  out << "n_test_normal = " << c.phantom.n_test_normal << "\n";
  out << "n_test_abnormal = " << c.phantom.n_test_abnormal << "\n";
  out << "lesion_radius_min = " << format_double(c.phantom.lesion_radius_min) << "\n";
  out << "lesion_radius_max = " << format_double(c.phantom.lesion_radius_max) << "\n";
  out << "lesion_contrast_min = " << format_double(c.phantom.lesion_contrast_min) << "\n";
  out << "lesion_contrast_max = " << format_double(c.phantom.lesion_contrast_max) << "\n";
  out << "noise_sigma = " << format_double(c.phantom.noise_sigma) << "\n";
  out << "\n[proxy]\n";
  out << "mode = " << proxy_mode_name(c.proxy_mode) << "\n";
  out << "n_superpixels = " << c.proxy.n_superpixels << "\n";
  out << "compactness = " << format_double(c.proxy.compactness) << "\n";
  out << "slic_iters = " << c.proxy.slic_iters << "\n";
  out << "smooth_sigma = " << format_double(c.proxy.smooth_sigma) << "\n";
  out << "patch_size = " << c.proxy.patch_size << "\n";
  out << "\n[memory]\n";
  out << "k = " << c.memory_k << "\n";
  out << "d = " << c.memory_d << "\n";
  out << "gamma = " << format_double(c.memory_gamma) << "\n";
  out << "\n[weights]\n";
  out << "lambda_g = " << format_double(c.weights.lambda_g) << "\n";
  out << "lambda_global = " << format_double(c.weights.lambda_global) << "\n";
  out << "lambda_local = " << format_double(c.weights.lambda_local) << "\n";
  out << "\n[train]\n";
  out << "learning_rate = " << format_double(c.learning_rate) << "\n";
  out << "epochs_proxy = " << c.epochs_proxy << "\n";
  out << "epochs_recon = " << c.epochs_recon << "\n";
  out << "batch_size = " << c.batch_size << "\n";
  out << "seed = " << c.seed << "\n";
  out << "base_channels = " << c.base_channels << "\n";
  out << "n_downsamples = " << c.n_downsamples << "\n";
  out << "disc_base_channels = " << c.disc_base_channels << "\n";
  out << "disc_layers = " << c.disc_layers << "\n";
  out << "recon_train_input = "
      << (c.recon_train_input == ReconTrainInput::predicted ? "predicted" : "slic") << "\n";
  out << "papc_source = " << (c.papc_source == PapcSource::other ? "other" : "self") << "\n";
  out << "\n[ablation]\n";
  out << "use_si_proxy = " << (c.ablation.use_si_proxy ? "true" : "false") << "\n";
  out << "use_memory = " << (c.ablation.use_memory ? "true" : "false") << "\n";
  out << "use_repairing = " << (c.ablation.use_repairing ? "true" : "false") << "\n";
  out << "score_in_latent = " << (c.ablation.score_in_latent ? "true" : "false") << "\n";
  out << "\n[output]\n";
  out << "dir = " << c.output_dir << "\n";
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string dump = dump_config(config);
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char ch : dump) {
    hash ^= ch;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must look like section.key=value: " + assignment);
  }
  assign(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

TrainConfig make_train_config(const ExperimentConfig& c, bool stage2) {
  TrainConfig t;
  t.epochs = stage2 ? c.epochs_recon : c.epochs_proxy;
  t.batch_size = c.batch_size;
  t.learning_rate = c.learning_rate;
  t.seed = c.seed;
  t.weights = c.weights;
  t.ablation = c.ablation;
  t.ablation.proxy_mode = c.proxy_mode;
  t.base_channels = c.base_channels;
  t.n_downsamples = c.n_downsamples;
  t.memory_k = c.memory_k;
  t.memory_d = c.memory_d;
  t.memory_gamma = c.memory_gamma;
  t.disc_base_channels = c.disc_base_channels;
  t.disc_layers = c.disc_layers;
  t.recon_train_input = c.recon_train_input;
  t.papc_source = c.papc_source;
  return t;
}

void validate_config(const ExperimentConfig& c) {
  if (c.source == "phantom") {
    validate_phantom_spec(c.phantom);
  } else if (c.root.empty()) {
    throw ConfigError("config: data.root required when data.source = directory");
  }
  if (c.learning_rate <= 0.0) throw ConfigError("config: learning_rate must be > 0");
  if (c.epochs_proxy < 1 || c.epochs_recon < 1) {
    throw ConfigError("config: epochs must be >= 1");
  }
  if (c.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (c.memory_k < 1 || c.memory_d < 1) throw ConfigError("config: memory k,d must be >= 1");
  if (!(c.memory_gamma > 0.0 && c.memory_gamma < 1.0)) {
    throw ConfigError("config: memory gamma must lie in (0,1)");
  }
  if (c.weights.lambda_g < 0.0 || c.weights.lambda_global < 0.0 ||
      c.weights.lambda_local < 0.0) {
    throw ConfigError("config: loss weights must be >= 0");
  }
  validate_ablation(c.ablation);
}

}  // namespace proxyad
