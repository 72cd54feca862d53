"""
Domain types, scenario validation and channel conversions shared by the
analytic model and the simulator.
"""

__version__ = "1.0.0"
