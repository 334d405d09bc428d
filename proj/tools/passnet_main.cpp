#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "passnet/errors.hpp"
#include "passnet/experiment.hpp"
#include "passnet/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitBoundViolation = 2;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> dataset_csv;
  std::optional<std::string> target_col;
  std::optional<double> epsilon_attack;
  std::optional<double> beta;
  std::optional<double> epsilon_design;
  std::optional<std::string> out_dir;
  std::vector<int> depths;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON experiment config");
  cmd->add_option("--seed", flags.seed, "random seed");
  cmd->add_option("--dataset", flags.dataset_csv, "input CSV path (synthetic when omitted)");
  cmd->add_option("--target-col", flags.target_col, "target column name for CSV input");
  cmd->add_option("--epsilon-attack", flags.epsilon_attack, "attack ball radius");
  cmd->add_option("--beta", flags.beta, "bound design parameter beta");
  cmd->add_option("--epsilon-design", flags.epsilon_design, "bound design parameter epsilon");
  cmd->add_option("--out-dir", flags.out_dir, "output directory");
  cmd->add_option("--depth", flags.depths, "hidden layer count (repeatable)");
}

passnet::ExperimentConfig resolve_config(const CommonFlags& flags) {
  passnet::ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = passnet::load_config(flags.config_path);
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.training.seed = *flags.seed;
  }
  if (flags.dataset_csv) {
    passnet::CsvSpec spec;
    spec.path = *flags.dataset_csv;
    spec.target_column = flags.target_col.value_or(
        cfg.csv ? cfg.csv->target_column : std::string());
    cfg.csv = spec;
  } else if (flags.target_col && cfg.csv) {
    cfg.csv->target_column = *flags.target_col;
  }
  if (flags.epsilon_attack) cfg.attack.epsilon_attack = *flags.epsilon_attack;
  if (flags.beta) cfg.bound_policy.beta = *flags.beta;
  if (flags.epsilon_design) cfg.bound_policy.epsilon_design = *flags.epsilon_design;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  if (!flags.depths.empty()) cfg.depths = flags.depths;
  cfg.validate();
  return cfg;
}

int cmd_train(const CommonFlags& flags) {
  const passnet::ExperimentConfig cfg = resolve_config(flags);
  std::filesystem::create_directories(cfg.out_dir);
  const passnet::PreparedData data = passnet::prepare_data(cfg);
  passnet::write_dataset_csv(
      (std::filesystem::path(cfg.out_dir) / "test_points.csv").string(), data.test);
  for (int depth : cfg.depths) {
    const passnet::DepthArtifacts paths = passnet::depth_artifacts(cfg.out_dir, depth);
    const passnet::TrainResult trained = passnet::run_train(cfg, data, depth);
    passnet::save_model(trained.model, paths.model_path);
    passnet::write_training_log_csv(paths.train_log_path, trained.log);
    std::cout << "trained depth " << depth << ": best epoch " << trained.best_epoch
              << ", model " << paths.model_path << "\n";
  }
  return kExitOk;
}

int cmd_certify(const CommonFlags& flags, const std::string& model_path,
                const std::string& cert_out) {
  const passnet::ExperimentConfig cfg = resolve_config(flags);
  const passnet::MlpModel model = passnet::load_model(model_path);
  const passnet::CascadeCertificate cert = passnet::run_certify(model, cfg);
  const std::string out_path =
      cert_out.empty()
          ? (std::filesystem::path(model_path).replace_extension(".certificate.json")).string()
          : cert_out;
  passnet::save_certificate(cert, out_path);
  if (cert.certified) {
    std::cout << "certified: rho=" << cert.rho << " epsilon=" << cert.epsilon_design
              << " beta=" << cert.beta << " bound_ratio=" << cert.bound_ratio << " -> "
              << out_path << "\n";
  } else {
    std::cout << "UNCERTIFIED: layers without an IIFP certificate:";
    for (std::size_t l : cert.unavailable_layers) std::cout << " " << l;
    std::cout << " -> " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_attack(const CommonFlags& flags, const std::string& model_path,
               const std::string& cert_path, const std::string& test_csv,
               const std::string& eval_out) {
  const passnet::ExperimentConfig cfg = resolve_config(flags);
  const passnet::MlpModel model = passnet::load_model(model_path);
  const passnet::CascadeCertificate cert = passnet::load_certificate(cert_path);
  const passnet::Dataset test = passnet::load_csv(test_csv, "target");
  const passnet::EvaluationTable table =
      passnet::run_attack(model, cert, test, cfg);
  const std::string out_path =
      eval_out.empty()
          ? (std::filesystem::path(cfg.out_dir) / "evaluation.csv").string()
          : eval_out;
  const auto parent = std::filesystem::path(out_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  passnet::write_evaluation_csv(out_path, table);
  if (!cert.certified) {
    std::cout << "model is uncertified; ratios reported without a bound comparison -> "
              << out_path << "\n";
    return kExitOk;
  }
  std::cout << "points=" << table.summary.count << " max_ratio=" << table.summary.max_ratio
            << " bound=" << table.summary.bound_ratio
            << " violations=" << table.summary.violation_count << " -> " << out_path << "\n";
  return table.summary.violation_count == 0 ? kExitOk : kExitBoundViolation;
}

int cmd_report(const std::vector<std::string>& evals, const std::vector<std::string>& certs,
               const std::string& out_dir) {
  const std::size_t violations = passnet::write_report(evals, certs, out_dir);
  std::cout << "report written to " << out_dir << " (violations: " << violations << ")\n";
  return violations == 0 ? kExitOk : kExitBoundViolation;
}

int cmd_run_all(const CommonFlags& flags) {
  const passnet::ExperimentConfig cfg = resolve_config(flags);
  const passnet::RunAllResult result = passnet::run_all(cfg);
  std::cout << "run-all complete: " << result.evaluation_csvs.size()
            << " depth runs, total violations " << result.total_violations << ", outputs in "
            << cfg.out_dir << "\n";
  return result.total_violations == 0 ? kExitOk : kExitBoundViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leaky-ReLU regression networks with passivity-based perturbation bounds"};
  app.require_subcommand(1);

  CommonFlags train_flags, certify_flags, attack_flags, runall_flags;
  std::string model_path, cert_path, cert_out, test_csv, eval_out, report_out = "out";
  std::vector<std::string> report_evals, report_certs;

  CLI::App* train = app.add_subcommand("train", "train models at the configured depths");
  add_common_flags(train, train_flags);

  CLI::App* certify = app.add_subcommand("certify", "compute the cascade certificate");
  add_common_flags(certify, certify_flags);
  certify->add_option("--model", model_path, "model JSON file")->required();
  certify->add_option("--certificate-out", cert_out, "certificate output path");

  CLI::App* attack = app.add_subcommand("attack", "hill-climb the constant perturbation");
  add_common_flags(attack, attack_flags);
  attack->add_option("--model", model_path, "model JSON file")->required();
  attack->add_option("--certificate", cert_path, "certificate JSON file")->required();
  attack->add_option("--test-csv", test_csv, "preprocessed test points CSV")->required();
  attack->add_option("--evaluation-out", eval_out, "evaluation CSV output path");

  CLI::App* report = app.add_subcommand("report", "summary CSV + box plot + nu histogram");
  report->add_option("--evaluation", report_evals, "evaluation CSV (repeatable)")->required();
  report->add_option("--certificate", report_certs, "certificate JSON (repeatable)");
  report->add_option("--out-dir", report_out, "output directory");

  CLI::App* runall = app.add_subcommand("run-all", "full pipeline at every depth");
  add_common_flags(runall, runall_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_flags);
    if (certify->parsed()) return cmd_certify(certify_flags, model_path, cert_out);
    if (attack->parsed()) return cmd_attack(attack_flags, model_path, cert_path, test_csv, eval_out);
    if (report->parsed()) return cmd_report(report_evals, report_certs, report_out);
    if (runall->parsed()) return cmd_run_all(runall_flags);
  } catch (const passnet::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const passnet::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitOk;
}
