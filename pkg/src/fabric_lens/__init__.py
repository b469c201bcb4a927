"""Cross-layer interconnect monitoring.

Core pieces: a fabric topology model with static routing, a binary
telemetry codec, a workload simulator, per-link traffic attribution,
presentation math for the visual designs, an embedded interval store,
and a threshold notification engine. The ``server`` subpackage wraps
everything in an HTTP service plus a command line client.
"""

__version__ = "0.1.0"
