"""Data re-uploading QNN on XOR: how depth changes what a single qutrit can learn.

Trains L = 1 and L = 3 single-qutrit models and prints their learning curves.
Run:  python demos/qnn_xor.py   (a few seconds)
"""
import numpy as np

from qutritml.data import fit_preprocessor, make_xor, split
from qutritml.feature_maps import auto_angle_scale
from qutritml.qnn import QnnModel, TrainConfig, forward, train

ds = make_xor(400, seed=0)
tr, te = split(ds, 0.7, seed=1)

for layers in (1, 3):
    model = QnnModel("single", layers, n_features=2, n_classes=2)
    pre = fit_preprocessor(tr.features)
    pre.angle_scale = auto_angle_scale(pre.transform(tr.features), model.circuit)
    trn, tst = tr.with_features(pre.transform(tr.features)), te.with_features(pre.transform(te.features))

    cfg = TrainConfig(learning_rate=0.01, max_epochs=150, rng_seed=0)
    trained, curve = train(model, trn, tst, cfg)
    print(f"\nL={layers}: {model.n_params} weights, {curve.restarts} restarts, best epoch {curve.best_epoch}")
    for r in curve.records[::25]:
        print(f"  epoch {r.epoch:3d}  loss {r.train_loss:.4f}  train {r.train_acc:.3f}  test {r.test_acc:.3f}")
    best = curve.records[curve.best_epoch - 1]
    print(f"  kept epoch {best.epoch}: test accuracy {best.test_acc:.3f}")

    # class probabilities for the four quadrant centres
    corners = pre.transform(np.array([[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]]))
    print("  p(class 1) at quadrant centres:", np.round(forward(trained, corners)[:, 1], 3))
