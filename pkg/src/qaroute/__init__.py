"""Qubit assignment and routing on constrained hardware graphs.

The package models initial qubit placement, SWAP-based routing and gate
scheduling as a binary integer program over a time-expanded flow network,
solves it exactly with an embedded branch-and-bound engine, and compares
the result against a SABRE-style heuristic baseline and quantum-volume
style benchmarks.
"""

__version__ = "0.1.0"
