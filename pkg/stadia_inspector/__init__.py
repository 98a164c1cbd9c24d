"""Stadia Inspector - cloud-gaming traffic analysis, generation and simulation

The Reflex app lives in ``stadia_inspector.stadia_inspector``; it is not
imported here so the library and CLI work without starting the web stack.
"""

__version__ = "0.1.0"
