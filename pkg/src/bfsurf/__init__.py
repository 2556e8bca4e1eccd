"""Log Bayes factor surfaces: evaluators, designs, surrogates, and serving.

Submodules
----------
numerics   log-domain quadrature, Laplace step, Cholesky logdet/solve
reg        simple-regression marginals, Bayes factors, automatic baselines
hlm        hierarchical linear model marginals, slices, calibration
design     hyperparameter boxes, grids, maximin Latin hypercube samples
surrogate  (heteroskedastic) Gaussian-process emulation of surfaces
surface    sweep orchestration, evidence classification, exports
service    HTTP JSON API (FastAPI app factory)
cli        command-line entry points
"""

__version__ = "0.1.0"
