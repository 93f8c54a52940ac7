"""Photon-pair generation by spontaneous four-wave mixing: spectra, rates, counting and entanglement."""

__version__ = "0.1.0"
