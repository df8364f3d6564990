"""Workbench for MAC-level packet-loss-rate prediction on low-power wireless networks.

Subpackages:
    sim         deterministic CSMA/CA star-network simulator (compiled core + fallback)
    features    observation-window feature extraction and labeled datasets
    models      linear / regression-tree / MLP loss-rate regressors
    evaluation  RMSE, k-fold cross-validation, grid search, interval sweeps
    controller  threshold/hysteresis MAC reconfiguration loop
"""

__version__ = "0.1.0"
