# # Acting on exceedance forecasts
#
# Forecast the chance that PM10 leaves the Very-Low band, then choose when to
# issue a warning from two knobs: the predicted probability (tau1) and the
# epistemic confidence (tau2).
#
# Run with `python demos/exceedance_decisions.py` (a few seconds).

import numpy as np

from aqforecast.aggregation import average_probabilities, classification_confidence
from aqforecast.data import SynthConfig, build_windows, split_by_date, synthesize
from aqforecast.decision import best_operating_point, decision_surface, normalize_confidence
from aqforecast.metrics import assemble_report
from aqforecast.models import make_forecaster
from aqforecast.training import TrainConfig, train, training_arrays
from aqforecast.uncertainty import mc_sample_predict

frame = synthesize(SynthConfig(stations=("Elgeseter", "Torvet"), pollutants=("PM10",),
                               hours=960, exceedance_rate=0.2))
ds = build_windows(frame, history=24, horizon=6,
                   fit_range=("2019-01-01T00:00:00", "2019-02-01T00:00:00"))
train_ds, test_ds = split_by_date(ds, ("2019-01-01T00:00:00", "2019-02-01T00:00:00"),
                                  ("2019-02-01T00:00:00", "2019-03-01T00:00:00"))

x, labels = training_arrays(train_ds, "classification")
shape = (ds.history, ds.n_inputs, ds.horizon, ds.n_targets)
net = make_forecaster("mc-dropout", shape, "classification", hidden=(32, 32), seed=0)
train(net, x, labels, TrainConfig(epochs=15, batch_size=32, lr=3e-3))

# ## Probability and confidence per forecast hour

J = test_ds.n_targets
probs = mc_sample_predict(net, test_ds.inputs, 50, rng=2).probs
for j, name in enumerate(test_ds.target_names):
    ps = probs[:, :, j::J].reshape(probs.shape[0], -1)
    o = test_ds.labels[:, :, j].ravel()
    p_hat = average_probabilities(ps).probability
    conf = normalize_confidence(classification_confidence(ps))
    rep = assemble_report(*name.split("_"), labels=o, probability=p_hat, method="mc-dropout")
    print(f"{name}: " + ", ".join(f"{k} {v:.3g}" for k, v in rep.classification.items()))

    # ## The decision surface
    #
    # The tau2 = 0 column is the usual probability-only rule, so the best
    # cell of the full grid can never be worse than it.
    s = decision_surface(p_hat, conf, o)
    tau1, tau2, best = best_operating_point(s)
    i = int(np.argmax(s.aleatoric_slice()))
    print(f"  probability only: F1 {s.aleatoric_slice()[i]:.3f} at tau1 {s.tau1[i]:.2f}")
    print(f"  with confidence gate: F1 {best:.3f} at tau1 {tau1:.2f}, tau2 {tau2:.2f}")
