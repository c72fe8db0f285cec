"""Temporal point-cloud graph network for mmWave radar gesture recognition.

Modules: ``core`` (samples, files, synthetic data), ``preprocess``,
``graph`` (temporal KNN), ``net`` (model and gradients), ``training``,
``stream`` (real-time segmentation) and ``cli``.
"""

__version__ = "0.1.0"
