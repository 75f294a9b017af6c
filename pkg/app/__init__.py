# Skin thermoregulation simulator: coupled vessel flow, heat transport and NO chemistry
__version__ = "0.1.0"
