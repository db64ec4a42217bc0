"""funcreg-lab: a numerical laboratory for representation learning via
functional regularization.

Synthetic worlds with known low-dimensional signal, two unlabeled-data
regularization schemes (linear reconstruction and masked self-supervision),
SGD training pipelines comparing regularized against end-to-end learning,
sample-complexity bound calculators, Monte Carlo verification of the
realizable finite-class guarantee, and functional-space pruning analysis.
"""

__version__ = "0.1.0"
