# Utilities module initialization
# Contains configuration loading, logging, reporting, metrics and the worker pool
