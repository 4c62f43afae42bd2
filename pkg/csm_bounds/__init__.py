"""
Mazur-type lower bounds for persisting correlations of the central spin model.
"""
__version__ = "1.0.0"
