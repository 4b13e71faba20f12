"""ldpnet - Interacting particle systems on sparse random graphs and their large deviations"""

__version__ = "0.1.0"
