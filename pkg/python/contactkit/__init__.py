"""
Numerical verification of contact structures on doubled Weinstein domains and
of the winding invariant of the iterated Gray-deformed rotation.
"""

__version__ = '0.1.0'
