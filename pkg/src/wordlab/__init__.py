"""wordlab: a word-image classification lab and benchmark harness.

Three classification methods over per-book datasets — a SOM-based
bag-of-visual-words with class centroids, a small end-to-end CNN, and
nearest-mean over tapped feature vectors — plus the data protocol,
synthetic corpus generator, and result aggregation needed to study their
stability as the number of classes grows.
"""

__version__ = "0.1.0"
