#pragma once

#include "putl/dataset.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace putl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// Fitted model as stored in <model dir>/model.txt.
struct Model {
  std::string config_hash;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  std::vector<std::string> features;  // raw covariate names, without intercept
  bool intercept = false;
  bool standardize = false;
  Eigen::VectorXd center;  // per raw feature, when standardized
  Eigen::VectorXd scale;
  std::vector<std::string> candidate_ids;  // target first
  std::vector<Eigen::VectorXd> candidate_coefs;
  Eigen::VectorXd weights;
  Eigen::VectorXd averaged;
  double cv_value = 0.0;
  std::vector<double> vertex_cv;
  bool target_excluded = false;

  // Rows of raw covariates to the model's design matrix.
  Eigen::MatrixXd design(const Eigen::MatrixXd& raw) const;
};

void save_model(const Model& model, const std::filesystem::path& dir);
Model load_model(const std::filesystem::path& dir);

// Reads a data CSV for one scheme: covariate columns `features` (all
// non-label columns when empty) plus y and/or z.
struct LabeledTable {
  std::vector<std::string> features;
  Eigen::MatrixXd x;
  std::vector<std::optional<int>> y;
  std::vector<std::optional<int>> z;
  bool has_y = false;
  bool has_z = false;
};
LabeledTable read_labeled_csv(const std::filesystem::path& path,
                              const std::vector<std::string>& features = {});

// Entry point shared by the executable and the tests. Returns the exit code.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace putl::cli
