"""Adaptive tube-based nonlinear MPC for ecological cruise control, with a
closed-loop PHEV simulation harness, an HTTP service and a thin CLI."""

__version__ = "0.1.0"
