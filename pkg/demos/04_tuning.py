"""
Cross-validated hyperparameter selection for both bridges.

Every grid point is scored by the held-out adversary value under one common
scoring adversary, so scores are comparable across the grid. The chosen
hyperparameters can then be passed to the estimator.
"""

from minimax_dr import HyperGrid, ProximalConfig, ScenarioConfig, estimate_ace, generate, tune_bridges

data = generate(ScenarioConfig(1, n=400, seed=8))
grid = HyperGrid(
    lambda_target_values=(1e-5, 1e-4, 1e-3),
    lambda_adversary_values=(1e-2,),
    bandwidth_target_values=(1.0, 2.0),
    bandwidth_adversary_values=(1.0,),
)
tuned = tune_bridges(data, grid, k=5, seed=0)

for bridge, arms in tuned.hypers.items():
    for arm, h in arms.items():
        print(f"{bridge}-bridge arm {arm}: lambda {h.lambda_target:g}/{h.lambda_adversary:g}, "
              f"bandwidths {h.bandwidth_target:.2f}/{h.bandwidth_adversary:.2f}")

result = estimate_ace(data, ProximalConfig().with_hypers(tuned.hypers))
print(f"PDR with tuned bridges: {result.pdr.ace:.3f} +/- {1.96 * result.pdr_se:.3f}")
