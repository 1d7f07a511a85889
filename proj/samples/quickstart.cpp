// Train on the toy graph, forget its two most biased features, compare with retraining.
//
//   quickstart [path/to/toy.manifest]

#include "fairwipe/fairwipe.hpp"

#include <cstdio>

using namespace fairwipe;

int main(int argc, char** argv) {
  const char* manifest = argc > 1 ? argv[1] : FAIRWIPE_TOY_MANIFEST;
  GraphDataset ds = make_splits(load_dataset(read_manifest(manifest)).dataset, {}, /*seed=*/0);
  const AggregationSpec agg{Scheme::gpr, 3};
  const AggregatedFeatures z = aggregate(ds, build_propagation(ds, agg.hops), agg.scheme);

  CertificationBudget budget{/*epsilon=*/1.0, /*delta=*/1e-4,
                             worstcase_bound_feature(ds.num_features(), 2, count(ds.train_mask),
                                                     LossSpec::logistic(), 10.0)};
  const TrainConfig config;
  const TrainedModel model = train(ds, z, config, calibrate_noise(budget));

  std::vector<RemovalRequest> requests{FeatureRemoval{select_features(ds.features, ds.sensitive, 2).chosen}};
  const SequentialOutcome out = sequential_unlearn(model, ds, z, agg, requests, budget);
  const TrainedModel oracle = retrain_oracle(out.dataset, out.aggregated, config, model.perturbation);

  auto report = [&](const char* arm, const GraphDataset& d, const AggregatedFeatures& zz, const Vector& w) {
    const Prediction p = predict(w, zz.values);
    const GroupFairness f = fairness_metrics(p.labels, d.labels, d.sensitive, d.test_mask);
    std::printf("%-10s accuracy %.4f  dSP %.4f  dEO %.4f\n", arm, accuracy(p.labels, d.labels, d.test_mask),
                f.delta_sp, f.delta_eo);
  };
  report("pretrained", ds, z, model.weights);
  report("unlearn", out.dataset, out.aggregated, out.weights);
  report("retrain", out.dataset, out.aggregated, oracle.weights);
  std::printf("residual %.3e  budget %.3e  certified %s  |w~ - w_retrain| %.3e\n", out.budget.accumulated_residual,
              budget.epsilon_prime, out.budget.certified() ? "yes" : "no", (out.weights - oracle.weights).norm());
}
