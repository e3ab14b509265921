"""Numba-compilable hot loops with pure numpy/python fallbacks.

Each module exposes the dispatching name (compiled when numba is enabled) and
the underlying ``*_loop`` / ``*_numpy`` implementations for benchmarking.
"""
