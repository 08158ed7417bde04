# Core module initialization
# Recurrence solver, operator sections, eigen bisection, certificates and the experiment engine

__version__ = "0.1.0"
