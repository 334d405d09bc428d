#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "passnet/errors.hpp"
#include "passnet/experiment.hpp"
#include "passnet/report.hpp"

using namespace passnet;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Small, fast configuration for pipeline smoke tests.
ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.synthetic.n_samples = 240;
  cfg.synthetic.n_features = 6;
  cfg.pca_components = 4;
  cfg.depths = {2};
  cfg.training.max_epochs = 150;
  cfg.training.patience = 30;
  cfg.attack.coarse_grid_points = 101;
  cfg.attack.refine_iterations = 30;
  cfg.seed = 11;
  cfg.training.seed = 11;
  cfg.out_dir = out_dir;
  return cfg;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config json round trip and defaults") {
  SUBCASE("defaults mirror the experiment protocol") {
    const ExperimentConfig cfg = config_from_json("{}");
    CHECK(cfg.depths == std::vector<int>{2, 6, 12});
    CHECK(cfg.slope_a == 0.5);
    CHECK(cfg.nu_target == 1.0);
    CHECK(cfg.attack.epsilon_attack == 0.5);
    CHECK(cfg.bound_policy.beta == 20.0);
    CHECK_FALSE(cfg.bound_policy.epsilon_design.has_value());
    CHECK(cfg.training.batch_size == 32);
    CHECK(cfg.training.max_epochs == 500);
    CHECK(cfg.training.patience == 20);
  }
  SUBCASE("round trip") {
    ExperimentConfig cfg;
    cfg.depths = {3, 5};
    cfg.seed = 77;
    cfg.bound_policy.epsilon_design = 2.5;
    cfg.csv = CsvSpec{"data.csv", "price"};
    const ExperimentConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.depths == cfg.depths);
    CHECK(back.seed == cfg.seed);
    CHECK(back.bound_policy.epsilon_design == cfg.bound_policy.epsilon_design);
    REQUIRE(back.csv.has_value());
    CHECK(back.csv->path == "data.csv");
    CHECK(back.csv->target_column == "price");
  }
  SUBCASE("invalid slope is a configuration error before any work") {
    ExperimentConfig cfg;
    cfg.slope_a = 1.2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("too-shallow depth is rejected") {
    ExperimentConfig cfg;
    cfg.depths = {1};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("malformed json") {
    CHECK_THROWS_AS(config_from_json("{nope"), ParseError);
  }
}

TEST_CASE("depth accounting: hidden layers plus the output node") {
  CHECK(cascade_layers(2) == 3);
  CHECK(cascade_layers(6) == 7);
  CHECK(cascade_layers(12) == 13);
  ExperimentConfig cfg;
  const MlpModel m = build_initial_model(cfg, 10, 2);
  CHECK(m.layer_count() == 3);
  CHECK(m.layers[0].weights.rows == 10);
  CHECK(m.layers[2].weights.rows == 1);
}

TEST_CASE("depth-2 cascade with unit nus gives rho 0.25") {
  // weight sums clear the boundary: extracted nus cap at the target 1
  MlpModel m;
  m.slope_a = 0.5;
  for (int l = 0; l < 2; ++l) {
    LayerParams layer;
    layer.weights = Matrix(10, 10, 0.25);
    layer.bias = Vector(10, 0.0);
    m.layers.push_back(layer);
  }
  LayerParams out;
  out.weights = Matrix(1, 10, 2.5);
  out.bias = Vector(1, 0.0);
  m.layers.push_back(out);

  ExperimentConfig cfg;
  const CascadeCertificate cert = run_certify(m, cfg);
  REQUIRE(cert.certified);
  CHECK(cert.nus == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(cert.rho == doctest::Approx(0.25).epsilon(1e-8));
  // default policy: beta^2 / (2 rho beta + 1)
  const double beta = cfg.bound_policy.beta;
  CHECK(cert.bound_ratio ==
        doctest::Approx(beta * beta / (2.0 * 0.25 * beta + 1.0)).epsilon(1e-8));

  // the unit-beta policy reproduces the closed-form 2/3
  ExperimentConfig unit = cfg;
  unit.bound_policy.beta = 1.0;
  const CascadeCertificate unit_cert = run_certify(m, unit);
  CHECK(unit_cert.bound_ratio == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("prepare_data fits on the training split only") {
  ExperimentConfig cfg = tiny_config("unused");
  const PreparedData data = prepare_data(cfg);
  CHECK(data.train.features.cols == cfg.pca_components);
  CHECK(data.test.features.cols == cfg.pca_components);
  // train targets are scaled into [0,1]; guard band only applies off-train
  for (double t : data.train.targets) {
    CHECK(t >= 0.0);
    CHECK(t <= 1.0);
  }
}

TEST_CASE("run_all pipeline on a tiny synthetic dataset") {
  const auto dir = temp_dir("passnet_runall");
  ExperimentConfig cfg = tiny_config(dir.string());

  const RunAllResult result = run_all(cfg);
  CHECK(result.total_violations == 0);
  REQUIRE(result.evaluation_csvs.size() == 1);

  const DepthArtifacts paths = depth_artifacts(cfg.out_dir, 2);
  CHECK(std::filesystem::exists(paths.model_path));
  CHECK(std::filesystem::exists(paths.train_log_path));
  CHECK(std::filesystem::exists(paths.certificate_path));
  CHECK(std::filesystem::exists(paths.evaluation_path));
  CHECK(std::filesystem::exists(dir / "summary.csv"));
  CHECK(std::filesystem::exists(dir / "ratios_boxplot.svg"));
  CHECK(std::filesystem::exists(dir / "nu_histogram.svg"));
  CHECK(std::filesystem::exists(dir / "test_points.csv"));

  // the persisted model round-trips and the certificate matches a re-run
  const MlpModel model = load_model(paths.model_path);
  const CascadeCertificate cert = load_certificate(paths.certificate_path);
  const CascadeCertificate again = run_certify(model, cfg);
  CHECK(cert.certified == again.certified);
  CHECK(cert.bound_ratio == doctest::Approx(again.bound_ratio));

  // rerunning with the same seed reproduces the model file and the
  // evaluation CSV byte for byte
  ExperimentConfig cfg2 = cfg;
  const auto dir2 = temp_dir("passnet_runall_repeat");
  cfg2.out_dir = dir2.string();
  const RunAllResult repeat = run_all(cfg2);
  CHECK(repeat.total_violations == 0);
  CHECK(read_file(paths.evaluation_path) ==
        read_file(depth_artifacts(cfg2.out_dir, 2).evaluation_path));
  CHECK(read_file(paths.model_path) == read_file(depth_artifacts(cfg2.out_dir, 2).model_path));

  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("report rendering") {
  SUBCASE("quartiles and the bound marker") {
    EvaluationSummary s;
    s.count = 3;
    s.min = 0.1;
    s.q1 = 0.15;
    s.median = 0.2;
    s.q3 = 0.25;
    s.max = 0.3;
    s.max_ratio = 0.3;
    s.bound_available = true;
    s.bound_ratio = 0.5;
    const std::string svg = render_boxplot_svg("test", {{"combo", s}});
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("circle") != std::string::npos);          // the red bound dot
    CHECK(svg.find("BOUND VIOLATED") == std::string::npos);  // 0.5 >= 0.3
  }
  SUBCASE("a bound below the max ratio is flagged prominently") {
    EvaluationSummary s;
    s.count = 3;
    s.min = 0.1;
    s.q1 = 0.15;
    s.median = 0.2;
    s.q3 = 0.25;
    s.max = 0.6;
    s.max_ratio = 0.6;
    s.violation_count = 1;
    s.bound_available = true;
    s.bound_ratio = 0.5;
    const std::string svg = render_boxplot_svg("test", {{"combo", s}});
    CHECK(svg.find("BOUND VIOLATED") != std::string::npos);
  }
  SUBCASE("all-equal nus give a single-bin histogram") {
    const std::string svg = render_histogram_svg("nus", {1.0, 1.0, 1.0, 1.0});
    // one bar only: count the rect elements beyond the background
    std::size_t bars = 0;
    for (std::size_t pos = svg.find("<rect"); pos != std::string::npos;
         pos = svg.find("<rect", pos + 1)) {
      ++bars;
    }
    CHECK(bars == 2);  // background + single bin
  }
}

TEST_CASE("median quartile arithmetic from the harness example") {
  std::vector<EvaluationRow> rows(3);
  rows[0].attack.ratio = 0.1;
  rows[1].attack.ratio = 0.2;
  rows[2].attack.ratio = 0.3;
  const EvaluationSummary s = summarize(rows, true, 0.5);
  CHECK(s.median == doctest::Approx(0.2));
  CHECK(s.violation_count == 0);
  CHECK(s.bound_ratio == 0.5);

  // two-row tables take the smaller value as the lower quartile
  std::vector<EvaluationRow> pair(2);
  pair[0].attack.ratio = 0.4;
  pair[1].attack.ratio = 0.2;
  const EvaluationSummary s2 = summarize(pair, false, 0.0);
  CHECK(s2.q1 == doctest::Approx(0.2));
  CHECK(s2.median == doctest::Approx(0.3));
  CHECK(s2.q3 == doctest::Approx(0.3));
  CHECK(s2.max == doctest::Approx(0.4));
}
