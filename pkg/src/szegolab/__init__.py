"""Semiclassical Stark clusters of hydrogen and their Szegő limit.

Modules
-------
hydrogen     exact bound-state data and the semiclassical parameter bundle
stark        first-order Stark matrix of a shell, its spectrum and moments
kepler       Kepler orbits from great circles of S^3 and the classical measure
coherent     hydrogen coherent states
scaling      complex-scaled Hamiltonian in a Sturmian basis and resonance clusters
estimates    numerical-range and quadratic-estimate checks
experiments  experiment specs, cache and convergence reports
cli          the ``szego`` command
"""
__version__ = "0.1.0"
