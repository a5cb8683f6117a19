"""Feedback particle filter for attitude estimation on SO(3), with Kalman-type baselines."""

__version__ = "0.1.0"
