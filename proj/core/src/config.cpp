#include "rna/config.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "rna/common.hpp"

namespace rna {

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "none";
    case Ablation::kNoSsr: return "ssr";
    case Ablation::kConfidenceOnly: return "partition";
    case Ablation::kNoAlign: return "align";
    case Ablation::kNoFilter: return "filter";
  }
  return "none";
}

Ablation ablation_from_name(const std::string& name) {
  if (name == "none" || name.empty()) return Ablation::kNone;
  if (name == "ssr") return Ablation::kNoSsr;
  if (name == "partition") return Ablation::kConfidenceOnly;
  if (name == "align") return Ablation::kNoAlign;
  if (name == "filter") return Ablation::kNoFilter;
  throw ArgumentError("unknown ablation: " + name +
                      " (expected ssr|partition|align|filter|none)");
}

void AdaptConfig::validate() const {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must be in (0, 1)");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must be in (0, 1)");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (pretrain_epochs < 0 || adapt_epochs < 0) throw ConfigError("epochs must be >= 0");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
  if (k_clusters < 0) throw ConfigError("k_clusters must be >= 0");
  if (gumbel_temperature <= 0.0) throw ConfigError("gumbel_temperature must be > 0");
  if (lambda_bb <= 0.0) throw ConfigError("lambda_bb must be > 0");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
}

namespace {

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("expected boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_entry(AdaptConfig& c, const std::string& key,
                        const std::string& value) {
  try {
    if (key == "rho") c.rho = std::stod(value);
    else if (key == "tau") c.tau = std::stod(value);
    else if (key == "learning_rate") c.learning_rate = std::stod(value);
    else if (key == "batch_size") c.batch_size = std::stoi(value);
    else if (key == "pretrain_epochs") c.pretrain_epochs = std::stoi(value);
    else if (key == "adapt_epochs") c.adapt_epochs = std::stoi(value);
    else if (key == "hidden_dim") c.hidden_dim = std::stoi(value);
    else if (key == "num_layers") c.num_layers = std::stoi(value);
    else if (key == "k_clusters") c.k_clusters = std::stoi(value);
    else if (key == "ssr_weight") c.ssr_weight = std::stod(value);
    else if (key == "sup_weight") c.sup_weight = std::stod(value);
    else if (key == "adv_weight") c.adv_weight = std::stod(value);
    else if (key == "inv_weight") c.inv_weight = std::stod(value);
    else if (key == "gumbel_temperature") c.gumbel_temperature = std::stod(value);
    else if (key == "lambda_bb") c.lambda_bb = std::stod(value);
    else if (key == "dropout") c.dropout = std::stod(value);
    else if (key == "weight_decay") c.weight_decay = std::stod(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "non_saturating_gan") c.non_saturating_gan = parse_bool(value);
    else if (key == "paper_exact_norm") c.paper_exact_norm = parse_bool(value);
    else if (key == "soft_subgraph") c.soft_subgraph = parse_bool(value);
    else if (key == "adv_train_encoder") c.adv_train_encoder = parse_bool(value);
    else if (key == "inv_live_teacher") c.inv_live_teacher = parse_bool(value);
    else if (key == "disable") c.ablation = ablation_from_name(value);
    else throw ConfigError("unknown config key: " + key);
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("value out of range for " + key + ": '" + value + "'");
  }
}

AdaptConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config file " + path.string());
  AdaptConfig config;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

std::string config_to_string(const AdaptConfig& c) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << "rho = " << c.rho << "\n"
     << "tau = " << c.tau << "\n"
     << "learning_rate = " << c.learning_rate << "\n"
     << "batch_size = " << c.batch_size << "\n"
     << "pretrain_epochs = " << c.pretrain_epochs << "\n"
     << "adapt_epochs = " << c.adapt_epochs << "\n"
     << "hidden_dim = " << c.hidden_dim << "\n"
     << "num_layers = " << c.num_layers << "\n"
     << "k_clusters = " << c.k_clusters << "\n"
     << "ssr_weight = " << c.ssr_weight << "\n"
     << "sup_weight = " << c.sup_weight << "\n"
     << "adv_weight = " << c.adv_weight << "\n"
     << "inv_weight = " << c.inv_weight << "\n"
     << "gumbel_temperature = " << c.gumbel_temperature << "\n"
     << "lambda_bb = " << c.lambda_bb << "\n"
     << "dropout = " << c.dropout << "\n"
     << "weight_decay = " << c.weight_decay << "\n"
     << "seed = " << c.seed << "\n"
     << "non_saturating_gan = " << (c.non_saturating_gan ? 1 : 0) << "\n"
     << "paper_exact_norm = " << (c.paper_exact_norm ? 1 : 0) << "\n"
     << "soft_subgraph = " << (c.soft_subgraph ? 1 : 0) << "\n"
     << "adv_train_encoder = " << (c.adv_train_encoder ? 1 : 0) << "\n"
     << "inv_live_teacher = " << (c.inv_live_teacher ? 1 : 0) << "\n"
     << "disable = " << ablation_name(c.ablation) << "\n";
  return os.str();
}

}  // namespace rna
