"""mmWave IAB network simulator with multi-agent attention actor-critic scheduling."""

__version__ = "0.1.0"
