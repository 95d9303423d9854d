#pragma once

#include <string>
#include <vector>

#include "disentlab/metrics/forest.hpp"
#include "disentlab/metrics/linear.hpp"
#include "disentlab/metrics/representation.hpp"
#include "disentlab/numerics/rng.hpp"
#include "disentlab/synthdata/grid.hpp"

namespace disentlab::metrics {

struct CompGenResult {
    double r2 = 0.0;
    double acc = 0.0;
    std::vector<double> r2_per_factor;   // NaN for dropped factors
    std::vector<double> acc_per_factor;
    std::vector<std::string> warnings;
};

/// Linear probes fitted on n_label train rows and scored on the test rows.
/// Ridge regresses the factor value mapped to [0, 1]; logistic regression
/// classifies the raw label. Results are unweighted means over factors.
CompGenResult comp_gen_eval(const RepresentationMatrix& train, const RepresentationMatrix& test,
                            const synth::FactorGrid& grid, numerics::RngStream rng, int n_label = 500);

/// Majority-vote FactorVAE score. Expects one column per unit.
double factor_vae_score(const RepresentationMatrix& rep, const synth::FactorGrid& grid, numerics::RngStream rng,
                        int votes = 800, int probe_batch = 64);

struct MigResult {
    double score = 0.0;
    Matrix mutual_information;  // units x factors, nats
};

MigResult mig(const RepresentationMatrix& rep, const synth::FactorGrid& grid, int bins = 20);

/// Each point averages |z1 - z2| over `pair_batch` row pairs sharing one
/// factor value; 80% of the points train a logistic classifier of the fixed
/// factor and the rest score it.
double beta_vae_score(const RepresentationMatrix& rep, const synth::FactorGrid& grid, numerics::RngStream rng,
                      int points = 800, int pair_batch = 64);

struct DciResult {
    double disentanglement = 0.0;
    double completeness = 0.0;
    double informativeness = 0.0;  // held-out forest accuracy, mean over factors
    Matrix importance;             // units x factors
};

/// Forests are fitted on the first `train_fraction` of a shuffled row order
/// and scored on the rest.
DciResult dci(const RepresentationMatrix& rep, const synth::FactorGrid& grid, numerics::RngStream rng,
              const ForestOptions& forest = {}, double train_fraction = 0.8);

/// Disentanglement from an importance matrix (units x factors): per unit
/// 1 - H_F(row) weighted by the row's share of total importance.
double dci_disentanglement(const Matrix& importance);
double dci_completeness(const Matrix& importance);

}  // namespace disentlab::metrics
