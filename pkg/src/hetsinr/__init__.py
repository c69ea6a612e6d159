"""Downlink SINR analysis for multi-tier cellular networks with biased
cell association, validated by a built-in Poisson point process
Monte Carlo simulator."""

__version__ = "0.1.0"
