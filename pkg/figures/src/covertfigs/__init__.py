"""Figure scripts over covertroute's documented CSV/JSON output schemas.

These read archived experiment results only; they never import or invoke
the simulator, so figures can be regenerated from any results directory.
"""

__version__ = "0.1.0"
