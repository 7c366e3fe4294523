"""Joint user scheduling, subchannel assignment and power allocation for
collaborative mobile clouds with energy-harvesting receivers."""

__version__ = "0.1.0"
