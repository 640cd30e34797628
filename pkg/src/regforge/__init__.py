"""regforge: internal-model robust output regulation for boundary-controlled 1D reaction-diffusion plants."""

__version__ = "0.1.0"
