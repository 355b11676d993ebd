"""
A numerical laboratory for the regularized Keller-Segel particle system, its
intermediate nonlocal system and the parabolic-parabolic limit.
"""

__version__ = "0.1.0"
