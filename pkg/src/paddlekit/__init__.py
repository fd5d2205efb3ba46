"""Paddling-stroke quality toolkit.

Pipeline stages: ingest (parse + align five sensor files), segment (strokes
and catch/pull/recovery phases), features (summary statistics), models (four
classifiers, two anomaly detectors), evaluate (pooled cross-validation,
permutation importance), synth (ground-truth trial generator), serve
(inference HTTP API), report (tables and figures), cli.
"""

__version__ = "0.1.0"
