# # Predictive uncertainty on a synthetic station network
#
# Train an MC-dropout network and a small deep ensemble on synthetic hourly
# PM data, split the predictive variance into its two parts, and check how
# the retained error falls as we demand more confidence.
#
# Run with `python demos/uncertainty_walkthrough.py` (a few seconds).

import numpy as np

from aqforecast.aggregation import mix_moments, prediction_interval, regression_confidence
from aqforecast.data import SynthConfig, build_windows, split_by_date, synthesize
from aqforecast.decision import binned_loss, reliability_curve
from aqforecast.metrics import assemble_report
from aqforecast.models import make_forecaster
from aqforecast.training import TrainConfig, train, train_ensemble, training_arrays
from aqforecast.uncertainty import ensemble_samples, mc_sample_predict

# ## Data
#
# Three stations, two pollutants, 40 days. The generator is a daily cycle
# plus Gaussian noise with sigma 2, so the best achievable RMSE is about 2.

frame = synthesize(SynthConfig(stations=("Bakke_kirke", "E6-Tiller", "Elgeseter"), hours=960))
ds = build_windows(frame, history=24, horizon=6,
                   fit_range=("2019-01-01T00:00:00", "2019-02-01T00:00:00"))
train_ds, test_ds = split_by_date(ds, ("2019-01-01T00:00:00", "2019-02-01T00:00:00"),
                                  ("2019-02-01T00:00:00", "2019-03-01T00:00:00"))
print(f"{len(train_ds)} training and {len(test_ds)} test windows, targets {test_ds.target_names}")

x, target = training_arrays(train_ds, "regression")
shape = (ds.history, ds.n_inputs, ds.horizon, ds.n_targets)
cfg = TrainConfig(epochs=8, batch_size=32, lr=3e-3)

# ## Two posterior approximations

dropout_net = make_forecaster("mc-dropout", shape, "regression", hidden=(32, 32), seed=0)
train(dropout_net, x, target, cfg)
mc = mc_sample_predict(dropout_net, test_ds.inputs, 50, rng=1)

handle, _ = train_ensemble(
    lambda s: make_forecaster("ensemble", shape, "regression", hidden=(32, 32), dropout=0.0, seed=s),
    x, target, cfg, size=5)
ens = ensemble_samples(handle, test_ds.inputs)

# ## Mixture moments and intervals
#
# Each sample is a Gaussian; their equal-weight mixture has a variance that
# splits into the spread of the means (epistemic) and the mean of the
# variances (aleatoric).

J = test_ds.n_targets
for name, samples in (("mc-dropout", mc), ("ensemble", ens)):
    raw = samples.to_raw(ds.stats.target_mean, ds.stats.target_std, J)
    mix = mix_moments(raw.means[:, :, 0::J].reshape(raw.n_samples, -1),
                      raw.variances[:, :, 0::J].reshape(raw.n_samples, -1))
    prediction_interval(mix, 0.95)
    y = test_ds.targets[:, :, 0].ravel()
    rep = assemble_report("Bakke_kirke", "PM2.5", y=y, mean=mix.mean, variance=mix.variance,
                          lower=mix.lower, upper=mix.upper, method=name)
    share = float(np.mean(mix.epistemic / mix.variance))
    print(f"{name:>10}: " + ", ".join(f"{k} {v:.3g}" for k, v in rep.regression.items())
          + f", epistemic share {share:.1%}")

    # ## Loss against confidence
    #
    # Confidence is a decreasing map of the predictive spread. Dropping the
    # least confident points tends to leave smaller errors behind, though the
    # last few bins hold few points and are noisy.
    curve = reliability_curve(mix.mean, regression_confidence(mix.std), y, "regression")
    tau, loss = binned_loss(curve)
    print(f"{'':>10}  mean squared error {loss[0]:.2f} at tau 0, {loss[len(loss) // 2]:.2f} at "
          f"tau {tau[len(tau) // 2]:.2f}, {loss[-1]:.2f} at tau {tau[-1]:.2f}")
