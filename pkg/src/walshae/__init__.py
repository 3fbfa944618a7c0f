"""Walsh-domain end-to-end autoencoder link simulator with CP-OFDM interference."""

__version__ = "0.1.0"
