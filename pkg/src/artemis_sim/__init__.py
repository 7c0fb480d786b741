"""Functional and cost simulator for a mixed analog-stochastic in-DRAM transformer accelerator."""

__version__ = "0.1.0"
