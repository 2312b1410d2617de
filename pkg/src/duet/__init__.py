"""Turn-taking musical duet engine with a recurrent VAE partner."""

__version__ = "0.1.0"
