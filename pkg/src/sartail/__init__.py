"""sartail: long-tail SAR classification pipeline.

Stages: raster loading and Lee-filter speckle denoising, three-channel
composition, embedding-file interchange, feature-space balancing (Tomek
links + NearMiss-3), balanced-subset KNN ensembles, and competition-style
evaluation (accuracy, macro one-vs-rest AUC, total score).
"""

from .kernels import active_lane

__version__ = "0.1.0"

__all__ = ["active_lane", "__version__"]
