"""rodmatrix: a simulated 12x12 bed of spring-returned rods played as an instrument.

The package covers the whole chain of the device it models: rod motion,
optical quadrature sensing, the serial and OSC wire formats, mappings
from the surface to three synthesis modes, offline audio rendering, and
a live WebSocket session server.
"""

__version__ = "0.1.0"
