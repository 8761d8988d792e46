"""Covert multi-hop DSSS routing: detector calibration, closed-form hop
allocation, and covertness/latency route optimization."""

__version__ = "0.1.0"
