"""Quantum-kernel SVM on the concentric-circles toy set.

Walks through the pipeline by hand (data, scaling, Gram matrix, SMO, one-vs-one
prediction) and then does the same with one call to run_experiment.
Run:  python demos/qksvm_circles.py
"""
import numpy as np

from qutritml.data import fit_preprocessor, make_circles, split
from qutritml.experiment import ExperimentConfig, run_experiment
from qutritml.feature_maps import FeatureMapSpec, auto_angle_scale, build
from qutritml.kernel import gram, gram_cross
from qutritml.metrics import compute_metrics
from qutritml.svm import ovo_fit, ovo_predict

ds = make_circles(400, seed=0)
train, test = split(ds, 0.7, seed=1)
print(f"{len(train)} training and {len(test)} test points")

# Standardise, then shrink the rotation angles so neighbouring points give
# clearly different, but not orthogonal, states.
spec = FeatureMapSpec("two", True, 2)
pre = fit_preprocessor(train.features)
pre.angle_scale = auto_angle_scale(pre.transform(train.features), build(spec))
Xtr, Xte = pre.transform(train.features), pre.transform(test.features)
print("angle scale", round(pre.angle_scale, 4))

K = gram(Xtr, spec)
model = ovo_fit(K, train.labels, C=1.0)
pred = ovo_predict(model, gram_cross(Xte, Xtr, spec))
report = compute_metrics(test.labels, pred, 2)
print("test accuracy", report.accuracy, "macro F1", round(report.macro_f1, 4))
print(report.confusion)

# The same experiment through the orchestrator, which also writes metrics,
# predictions, the boundary grid and a manifest.
res = run_experiment(ExperimentConfig(task="qksvm", dataset="circles", seed=0, boundary_res=40,
                                      out="demo_runs/qksvm_circles"))
print("run_experiment accuracy", res.metrics["accuracy"], "->", res.out_dir)
