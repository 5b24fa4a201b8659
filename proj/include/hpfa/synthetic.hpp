#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hpfa/corpus.hpp"
#include "hpfa/model.hpp"
#include "hpfa/rng.hpp"

namespace hpfa {

// Simulation design.  len_scale is the per-page prior length scale L: each
// page draws theta_k ~ Gamma(r_k b c L, 1) and its expected token count is L
// times the sum of r_k over active slots.  Empty matrices mean "draw from the
// prior"; set them to pin ground-truth values.
struct SimOptions {
  int sites = 20;
  int pages_per_site = 10;
  double len_scale = 100.0;
  int vocab = 50;
  bool allow_empty_pages = false;
  int max_redraws = 100;

  Eigen::MatrixXd phi;   // K x V
  Eigen::MatrixXd psi;   // M x V
  Eigen::VectorXd r;     // slots
  double r0 = -1.0;      // negative: draw from prior
  Eigen::MatrixXd beta;  // K x Q
  Eigen::VectorXd pi;    // K
  Eigen::VectorXd eta;   // slots
  // Covariates for the structured site prior; defaults to two one-hot cells
  // covering the first and second half of the sites.
  Eigen::MatrixXd X;
  std::vector<std::string> region_labels;
};

struct GroundTruth {
  Corpus corpus;
  ModelConfig cfg;
  double len_scale = 0.0;

  Eigen::MatrixXd phi, psi;
  Eigen::VectorXd r;
  double r0 = 0.0;
  MatrixXu8 b, c;
  Eigen::MatrixXd theta;  // P x slots
  Eigen::VectorXd pi, eta;
  double mu_pi = 0.0, sigma2_pi = 0.0, mu_eta = 0.0, sigma2_eta = 0.0;
  Eigen::MatrixXd beta;
  Eigen::VectorXd beta0, sigma2;
  std::vector<std::vector<std::int32_t>> assignments;  // true slot per token
  int empty_page_redraws = 0;
};

// Draws parameters from the priors (or pins them from opts), then data from
// the generative model.  Pages that come up empty are redrawn (page presence,
// theta and counts) up to max_redraws times unless allow_empty_pages is set.
GroundTruth simulate(const ModelConfig& cfg, const SimOptions& opts, RngStream& rng);

// JSON sidecar with all ground-truth parameter values.
void save_truth(const GroundTruth& truth, const std::string& path);

// Gibbs state positioned exactly at the ground truth.  With
// use_design_len_scale the per-page length scale is the simulation constant L
// rather than the realized token counts; joint-distribution tests need this
// so forward simulation and the Gibbs conditionals target the same joint.
ModelState state_from_truth(const GroundTruth& truth, const ModelConfig& cfg,
                            bool use_design_len_scale);

// Redraws counts, word identities and assignments given the current
// parameters, in place; len_scale is untouched.  This is the data step of the
// successive-conditional joint-distribution test.
void redraw_observations(ModelState& state, const ModelConfig& cfg, RngStream& rng);

}  // namespace hpfa
